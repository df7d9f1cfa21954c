#include "nvdyn/dynamics.hpp"
#include "nvdyn/text_io.hpp"

#include <cstdio>
#include <sstream>

namespace nvdyn {

namespace {

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == ',' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

} // namespace

PulseSequence parse_sequence(const std::string& text, const std::string& source) {
  PulseSequence seq;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto tok = tokens(raw.substr(0, raw.find('#')));
    if (tok.empty()) continue;
    const std::string& kind = tok[0];
    if (kind == "pi_pulse") {
      if (tok.size() != 1) throw ValidationError(where + ": pi_pulse takes no arguments");
      seq.pi_pulse_markers.push_back(seq.segments.size());
    } else if (kind == "pause") {
      if (tok.size() != 2) throw ValidationError(where + ": expected 'pause <duration_ns>'");
      PulseSegment s;
      s.duration = text::parse_double(tok[1], where);
      seq.segments.push_back(s);
    } else if (kind == "segment" || kind == "readout") {
      if (tok.size() != 4)
        throw ValidationError(where + ": expected '" + kind + " <p_readout_mw> <p_init_mw> <duration_ns>'");
      PulseSegment s;
      s.drive.p_readout = text::parse_double(tok[1], where);
      s.drive.p_init = text::parse_double(tok[2], where);
      s.duration = text::parse_double(tok[3], where);
      if (kind == "readout") {
        if (seq.readout_segment) throw ValidationError(where + ": more than one readout segment");
        seq.readout_segment = seq.segments.size();
      }
      seq.segments.push_back(s);
    } else {
      throw ValidationError(where + ": unknown record '" + kind + "'");
    }
    try {
      if (!seq.segments.empty()) {
        const auto& s = seq.segments.back();
        s.drive.validate();
        if (!(s.duration > 0.0)) throw ValidationError("segment duration must be > 0");
      }
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
  }
  if (seq.segments.empty()) throw ValidationError(source + ": sequence has no segments");
  seq.validate();
  return seq;
}

PulseSequence load_sequence(const std::string& path) { return parse_sequence(text::read_file(path), path); }

std::string format_sequence(const PulseSequence& sequence) {
  std::string out;
  for (std::size_t k = 0; k <= sequence.segments.size(); ++k) {
    for (auto m : sequence.pi_pulse_markers)
      if (m == k) out += "pi_pulse\n";
    if (k == sequence.segments.size()) break;
    const auto& s = sequence.segments[k];
    if (s.is_pause() && sequence.readout_segment != k) {
      out += "pause " + text::format_double(s.duration) + "\n";
    } else {
      out += (sequence.readout_segment == k ? "readout " : "segment ");
      out += text::format_double(s.drive.p_readout) + " " + text::format_double(s.drive.p_init) + " " +
             text::format_double(s.duration) + "\n";
    }
  }
  return out;
}

std::string format_trace_csv(const TimeTrace& trace) {
  std::string out = "t_ns,L1,L2,L3,L4,L5,L6,L7,L8,signal\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6f", trace.times[i]);
    out += buf;
    for (int l = 0; l < kLevels; ++l) {
      std::snprintf(buf, sizeof buf, ",%.10e", trace.states[i].vector()(l));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.10e\n", trace.signal[i]);
    out += buf;
  }
  return out;
}

} // namespace nvdyn
