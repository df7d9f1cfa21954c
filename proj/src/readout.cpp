#include "nvdyn/readout.hpp"

#include "nvdyn/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace nvdyn {

namespace {

constexpr double kGridTol = 1e-9;

// Linear interpolation of the signal at t, with t inside [times.front(), times.back()].
double signal_at(const std::vector<double>& times, const std::vector<double>& signal, std::size_t& hint,
                 double t) {
  while (hint + 1 < times.size() && times[hint + 1] <= t) ++hint;
  if (hint + 1 >= times.size()) return signal.back();
  const double f = (t - times[hint]) / (times[hint + 1] - times[hint]);
  return signal[hint] + f * (signal[hint + 1] - signal[hint]);
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& s, double dt, std::size_t from) {
  std::vector<double> c(s.size() - from, 0.0);
  for (std::size_t k = from + 1; k < s.size(); ++k)
    c[k - from] = c[k - from - 1] + 0.5 * dt * (s[k] + s[k - 1]);
  return c;
}

} // namespace

void IntegrationWindow::validate() const {
  if (!std::isfinite(start) || start < 0.0) throw ValidationError("window start must be >= 0");
  if (!std::isfinite(length) || length <= 0.0) throw ValidationError("window length must be > 0");
}

double windowed_counts(const std::vector<double>& times, const std::vector<double>& signal,
                       const IntegrationWindow& window) {
  window.validate();
  if (times.size() != signal.size() || times.size() < 2)
    throw ValidationError("trace needs at least two samples");
  const double a = window.start, b = window.end();
  const double span = times.back() - times.front();
  if (a < times.front() - kGridTol * span || b > times.back() + kGridTol * span)
    throw ValidationError("integration window lies outside the trace");
  const double lo = std::max(a, times.front()), hi = std::min(b, times.back());

  std::size_t hint = 0;
  double prev_t = lo;
  double prev_s = signal_at(times, signal, hint, lo);
  double total = 0.0;
  for (std::size_t i = hint + 1; i < times.size() && times[i] < hi; ++i) {
    if (times[i] <= prev_t) continue;
    total += 0.5 * (times[i] - prev_t) * (signal[i] + prev_s);
    prev_t = times[i];
    prev_s = signal[i];
  }
  const double end_s = signal_at(times, signal, hint, hi);
  total += 0.5 * (hi - prev_t) * (end_s + prev_s);
  return total;
}

double windowed_counts(const TimeTrace& trace, const IntegrationWindow& window) {
  return windowed_counts(trace.times, trace.signal, window);
}

double contrast(double s0, double s1) {
  if (!(s0 > 0.0)) throw ValidationError("contrast needs s0 > 0");
  return 1.0 - s1 / s0;
}

double optical_contrast(double s0, double s1) {
  if (!(s0 + s1 > 0.0)) throw ValidationError("optical contrast needs s0 + s1 > 0");
  return (s0 - s1) / (s0 + s1);
}

double snr(double s0, double s1) {
  if (!(s0 + s1 > 0.0)) throw ValidationError("snr needs s0 + s1 > 0");
  return (s0 - s1) / std::sqrt(s0 + s1);
}

ReadoutSignals readout_signals(const PopulationState& initialized, const ModelParameters& params,
                               double p_readout, double duration, double dt) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw ValidationError("readout duration and dt must be > 0");
  const RateGenerator gen = build_generator(params, {p_readout, 0.0});
  const auto n = static_cast<std::size_t>(std::floor(duration / dt * (1.0 + 1e-12))) + 1;
  ReadoutSignals out;
  out.dt = dt;
  out.s0 = signal_under(initialized.vector(), gen, params, n, dt);
  out.s1 = signal_under(apply_pi_pulse(initialized.vector()), gen, params, n, dt);
  return out;
}

namespace {

ReadoutOptimum optimize_on_grid(const std::vector<double>& s0, const std::vector<double>& s1, double dt,
                                std::size_t from, double start_time) {
  if (s0.size() != s1.size()) throw ValidationError("readout traces have different lengths");
  if (s0.size() < from + 2) throw ValidationError("readout trace too short for a window");
  const auto c0 = cumulative_trapezoid(s0, dt, from);
  const auto c1 = cumulative_trapezoid(s1, dt, from);

  ReadoutOptimum best;
  bool found = false;
  for (std::size_t k = 1; k < c0.size(); ++k) {
    if (!(c0[k] + c1[k] > 0.0)) continue;
    const double value = snr(c0[k], c1[k]);
    if (!found || value > best.snr) {
      found = true;
      best.snr = value;
      best.window = {start_time, static_cast<double>(k) * dt};
      best.counts0 = c0[k];
      best.counts1 = c1[k];
    }
  }
  if (!found) throw NumericalError("readout traces carry no signal");
  best.contrast = best.counts0 > 0.0 ? contrast(best.counts0, best.counts1) : 0.0;

  bool have_max = false;
  for (std::size_t k = from; k < s0.size(); ++k) {
    if (!(s0[k] > 0.0)) continue;
    const double c = 1.0 - s1[k] / s0[k];
    if (!have_max || c > best.max_contrast) {
      have_max = true;
      best.max_contrast = c;
      best.max_contrast_time = start_time + static_cast<double>(k - from) * dt;
    }
  }
  return best;
}

} // namespace

ReadoutOptimum optimize_readout_window(const ReadoutSignals& signals) {
  return optimize_on_grid(signals.s0, signals.s1, signals.dt, 0, 0.0);
}

ReadoutOptimum optimize_readout_window(const TimeTrace& trace0, const TimeTrace& trace1, double window_start) {
  if (trace0.times.size() != trace1.times.size()) throw ValidationError("traces do not share a time grid");
  for (std::size_t i = 0; i < trace0.times.size(); ++i)
    if (std::abs(trace0.times[i] - trace1.times[i]) > kGridTol * std::max(1.0, std::abs(trace0.times[i])))
      throw ValidationError("traces do not share a time grid");
  const auto& t = trace0.times;
  if (t.size() < 2) throw ValidationError("trace needs at least two samples");
  const double dt = t[1] - t[0];
  for (std::size_t i = 1; i < t.size(); ++i)
    if (std::abs(t[i] - t[i - 1] - dt) > 1e-6 * dt) throw ValidationError("window search needs a uniform grid");
  const auto it = std::lower_bound(t.begin(), t.end(), window_start - kGridTol * std::max(1.0, window_start));
  if (it == t.end()) throw ValidationError("window start lies beyond the trace");
  const auto from = static_cast<std::size_t>(it - t.begin());
  return optimize_on_grid(trace0.signal, trace1.signal, dt, from, t[from]);
}

double population_contrast(const ModelParameters& params, double l0, double l1, double l5) {
  for (double v : {l0, l1, l5})
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("populations must be finite and >= 0");
  if (l0 + l1 + l5 > 1.0 + 1e-12) throw ValidationError("populations exceed 1");
  const double r21 = branching_ratio(params, BranchChannel::R21);
  const double r43 = branching_ratio(params, BranchChannel::R43);
  const double w5 = params.beta * l5;
  const double num = l0 * r43 + l1 * r21 + w5;
  const double den = l1 * r43 + l0 * r21 + w5;
  if (!(den > 0.0)) throw ValidationError("contrast denominator is not positive");
  return 1.0 - num / den;
}

void BackgroundModel::validate() const {
  if (!std::isfinite(b_zero) || !std::isfinite(b_inf) || b_inf < 0.0 || b_zero < b_inf)
    throw ValidationError("background model needs b_zero >= b_inf >= 0");
  if (!std::isfinite(p_c) || p_c <= 0.0) throw ValidationError("background p_c must be > 0");
}

double background_rate(const BackgroundModel& model, double p_h) {
  model.validate();
  if (!std::isfinite(p_h) || p_h < 0.0) throw ValidationError("power must be >= 0");
  return model.b_inf + (model.b_zero - model.b_inf) * std::exp(-p_h / model.p_c);
}

BackgroundCorrection subtract_background(double counts, const IntegrationWindow& window,
                                         const BackgroundModel& model, double p_h) {
  BackgroundCorrection out;
  out.background = background_rate(model, p_h) * window.length * 1e-9;
  out.counts = counts - out.background;
  if (out.counts < 0.0) {
    out.counts = 0.0;
    out.clamped = true;
  }
  return out;
}

CorrelationResult correlation_diagnostic(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("correlation inputs have different lengths");
  if (x.size() < 3) throw ValidationError("correlation needs at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0)) throw ValidationError("correlation input x has zero variance");
  CorrelationResult r;
  r.slope = sxy / sxx;
  if (!(syy > 0.0)) {
    r.degenerate = true;
    r.slope = 0.0;
    return r;
  }
  r.pearson_r = sxy / std::sqrt(sxx * syy);
  return r;
}

double MeasuredTrace::bin_width() const {
  if (times.size() < 2) return 1.0;
  return times[1] - times[0];
}

void MeasuredTrace::validate() const {
  if (times.empty() || times.size() != counts.size()) throw ValidationError("measured trace is empty or ragged");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw ValidationError("measured trace times must increase");
  for (double c : counts)
    if (!std::isfinite(c) || c < 0.0) throw ValidationError("measured counts must be >= 0");
}

MeasuredTrace parse_measured_trace(const std::string& text, const std::string& source) {
  const auto table = text::parse_csv(text, source);
  if (table.column("t_ns") < 0 || table.column("counts") < 0)
    throw ValidationError(source + ": measured trace needs columns t_ns, counts");
  MeasuredTrace m{table.column_values("t_ns"), table.column_values("counts")};
  try {
    m.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return m;
}

MeasuredTrace load_measured_trace(const std::string& path) {
  return parse_measured_trace(text::read_file(path), path);
}

double binned_counts(const MeasuredTrace& trace, const IntegrationWindow& window) {
  window.validate();
  const double t0 = trace.times.front();
  const double tol = 1e-9 * std::max(1.0, trace.times.back());
  if (window.end() > trace.times.back() - t0 + trace.bin_width() + tol)
    throw ValidationError("integration window lies outside the measured trace");
  double sum = 0.0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double rel = trace.times[i] - t0;
    if (rel >= window.start - tol && rel < window.end() - tol) sum += trace.counts[i];
  }
  return sum;
}

namespace {

WindowAnalysis analyze_window(const MeasuredTrace& a, const MeasuredTrace& b, const IntegrationWindow& w,
                              const BackgroundModel* bg, double p_h) {
  WindowAnalysis out;
  out.window = w;
  const double raw0 = binned_counts(a, w), raw1 = binned_counts(b, w);
  if (bg) {
    out.s0 = subtract_background(raw0, w, *bg, p_h);
    out.s1 = subtract_background(raw1, w, *bg, p_h);
  } else {
    out.s0.counts = raw0;
    out.s1.counts = raw1;
  }
  const double s0 = out.s0.counts, s1 = out.s1.counts;
  if (s0 > 0.0) out.contrast = contrast(s0, s1);
  if (s0 + s1 > 0.0) {
    out.optical_contrast = optical_contrast(s0, s1);
    out.snr = snr(s0, s1);
  }
  return out;
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void append_window(std::string& out, const std::string& prefix, const WindowAnalysis& w) {
  out += prefix + ".start_ns = " + fmt(w.window.start) + "\n";
  out += prefix + ".length_ns = " + fmt(w.window.length) + "\n";
  out += prefix + ".s0_counts = " + fmt(w.s0.counts) + "\n";
  out += prefix + ".s1_counts = " + fmt(w.s1.counts) + "\n";
  out += prefix + ".s0_background = " + fmt(w.s0.background) + "\n";
  out += prefix + ".s1_background = " + fmt(w.s1.background) + "\n";
  out += prefix + ".clamped = " + std::string(w.s0.clamped || w.s1.clamped ? "true" : "false") + "\n";
  out += prefix + ".contrast = " + fmt(w.contrast) + "\n";
  out += prefix + ".optical_contrast = " + fmt(w.optical_contrast) + "\n";
  out += prefix + ".snr = " + fmt(w.snr) + "\n";
}

} // namespace

AnalysisReport analyze_measured(const MeasuredTrace& trace0, const MeasuredTrace& trace1,
                                const std::vector<IntegrationWindow>& windows,
                                const BackgroundModel* background, double p_h) {
  trace0.validate();
  trace1.validate();
  if (trace0.times.size() != trace1.times.size()) throw ValidationError("measured traces differ in length");
  AnalysisReport report;
  report.p_h = p_h;
  report.background_applied = background != nullptr;
  if (background) report.background = *background;
  for (const auto& w : windows) report.windows.push_back(analyze_window(trace0, trace1, w, background, p_h));

  const double bw = trace0.bin_width();
  bool found = false;
  for (std::size_t k = 1; k <= trace0.times.size(); ++k) {
    const auto w = analyze_window(trace0, trace1, {0.0, static_cast<double>(k) * bw}, background, p_h);
    if (!found || w.snr > report.best_snr.snr) {
      report.best_snr = w;
      found = true;
    }
  }
  return report;
}

std::string format_analysis_report(const AnalysisReport& report) {
  std::string out = "# readout analysis\n";
  out += "background_applied = " + std::string(report.background_applied ? "true" : "false") + "\n";
  if (report.background_applied) {
    out += "background.b_zero = " + fmt(report.background.b_zero) + "\n";
    out += "background.b_inf = " + fmt(report.background.b_inf) + "\n";
    out += "background.p_c_mw = " + fmt(report.background.p_c) + "\n";
    out += "background.p_h_mw = " + fmt(report.p_h) + "\n";
  }
  for (std::size_t i = 0; i < report.windows.size(); ++i)
    append_window(out, "window" + std::to_string(i + 1), report.windows[i]);
  append_window(out, "best_snr", report.best_snr);
  return out;
}

} // namespace nvdyn
