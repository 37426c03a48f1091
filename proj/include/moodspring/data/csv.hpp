#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace moodspring::data {

struct CsvRecord {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 style: comma separated, double-quoted fields may contain commas,
/// quotes ("") and newlines. Accepts LF or CRLF. Blank lines are skipped.
std::vector<CsvRecord> parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace moodspring::data
