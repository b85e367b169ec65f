#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace drivesig::csv {

// Splits one record, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_line(std::string_view line);

// Reads the next record, skipping blank lines. Strips a trailing '\r'.
std::optional<std::vector<std::string>> read_record(std::istream& in);

// Strict numeric parse of a whole (whitespace-trimmed) field.
std::optional<double> parse_number(std::string_view field);

// Shortest text that parses back to exactly `value`.
std::string format_number(double value);

// Quotes a field only when it needs it.
std::string quote(std::string_view field);

}  // namespace drivesig::csv
