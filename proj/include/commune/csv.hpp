#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace commune::csv {

// Splits one CSV line on commas. Double-quoted fields may contain commas and
// "" escapes; surrounding whitespace and a trailing '\r' are trimmed.
std::vector<std::string> split_line(std::string_view line);

// Reads the next non-blank line, advancing `line_no`. Returns false at EOF.
bool next_line(std::istream& in, std::string& line, std::size_t& line_no);

// Strict full-field number parse; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view field);

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

// Position of `name` in `header`, or -1.
int column_index(const std::vector<std::string>& header, std::string_view name);

}  // namespace commune::csv
