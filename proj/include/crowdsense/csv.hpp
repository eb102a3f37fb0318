#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace crowdsense {

// Shortest round-trip decimal form of a double (via std::to_chars), so CSV
// output is byte-identical across runs and parses back to the same bits.
std::string format_double(double v);
std::string format_u64(std::uint64_t v);
std::string format_i64(std::int64_t v);

// Split one CSV line on commas. No quoting is used by any schema here.
std::vector<std::string_view> split_csv_line(std::string_view line);

// Parsed CSV: '#'-prefixed lines collected separately, first non-comment
// line treated as the header row.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name; throws ConfigError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

double parse_double(std::string_view field);
std::int64_t parse_i64(std::string_view field);
std::uint64_t parse_u64(std::string_view field);

// Write `content` to `path` atomically (temp file in the same directory,
// then rename), so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace crowdsense
