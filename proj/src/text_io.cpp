#include "nvdyn/text_io.hpp"

#include "nvdyn/types.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace nvdyn::text {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view token, const std::string& what) {
  const std::string s = trim(token);
  if (s.empty()) throw ValidationError(what + ": empty number");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v))
    throw ValidationError(what + ": cannot parse number '" + s + "'");
  return v;
}

std::vector<KeyValue> parse_key_values(std::string_view text, const std::string& source) {
  std::vector<KeyValue> out;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw.substr(0, raw.find('#'));
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    KeyValue kv;
    kv.key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (const auto pm = value.find("+-"); pm != std::string::npos) {
      kv.uncertainty = trim(std::string_view(value).substr(pm + 2));
      value = trim(std::string_view(value).substr(0, pm));
    }
    kv.value = std::move(value);
    kv.line = line_no;
    if (kv.key.empty() || kv.value.empty())
      throw ValidationError(source + ":" + std::to_string(line_no) + ": empty key or value");
    out.push_back(std::move(kv));
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << content;
}

std::string format_double(double value) {
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    if (std::strtod(buf, nullptr) == value) break;
  }
  return buf;
}

std::vector<double> parse_grid(std::string_view spec) {
  const std::string s = trim(spec);
  if (s.empty()) throw ValidationError("empty grid spec");
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    const auto parts = split(s, ':');
    if (parts.size() < 3 || parts.size() > 4)
      throw ValidationError("grid spec must be start:stop:count[:log]");
    const double start = parse_double(parts[0], "grid start");
    const double stop = parse_double(parts[1], "grid stop");
    const double count_d = parse_double(parts[2], "grid count");
    const bool log = parts.size() == 4 && parts[3] == "log";
    if (parts.size() == 4 && !log && parts[3] != "lin")
      throw ValidationError("grid spacing must be 'lin' or 'log'");
    const int count = static_cast<int>(count_d);
    if (count < 1 || count != count_d) throw ValidationError("grid count must be a positive integer");
    if (log && (start <= 0.0 || stop <= 0.0)) throw ValidationError("log grid requires positive bounds");
    for (int i = 0; i < count; ++i) {
      const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out.push_back(log ? std::exp(std::log(start) + u * (std::log(stop) - std::log(start)))
                        : start + u * (stop - start));
    }
  } else {
    for (const auto& tok : split(s, ',')) out.push_back(parse_double(tok, "grid value"));
  }
  return out;
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

std::vector<double> CsvTable::column_values(std::string_view name) const {
  const int c = column(name);
  if (c < 0) throw ValidationError("CSV has no column '" + std::string(name) + "'");
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
  return out;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable t;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(t.header.size()) + " columns");
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, source + ":" + std::to_string(line_no)));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw ValidationError(source + ": empty CSV");
  return t;
}

CsvTable load_csv(const std::string& path) { return parse_csv(read_file(path), path); }

std::string format_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

} // namespace nvdyn::text
