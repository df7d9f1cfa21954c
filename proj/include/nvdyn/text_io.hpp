#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvdyn::text {

/// One `key = value [+- uncertainty]` entry with its source position.
struct KeyValue {
  std::string key;
  std::string value;
  std::optional<std::string> uncertainty;
  int line = 0;
};

/// Splits structured text into key/value records. Blank lines and `#`
/// comments are skipped; malformed lines raise ValidationError(source:line).
std::vector<KeyValue> parse_key_values(std::string_view text, const std::string& source);

/// Strict double parse; throws ValidationError naming `what` on failure.
double parse_double(std::string_view token, const std::string& what);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Shortest "%.*g" representation that round-trips through parse_double.
std::string format_double(double value);

/// Grid spec: comma list `0.1,1,10`, or `start:stop:count[:log]`.
std::vector<double> parse_grid(std::string_view spec);

/// Simple CSV table: header plus numeric rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(std::string_view name) const; ///< -1 if absent
  std::vector<double> column_values(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable load_csv(const std::string& path);
std::string format_csv(const CsvTable& table);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

} // namespace nvdyn::text
