#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nemesys {

/// Simulated seconds to the integer millisecond timestamps used on export.
std::int64_t to_ms(double seconds);

/// Fixed-point thousandths rendered as a decimal string, e.g. 30000 -> "30.000".
std::string format_milli(std::int64_t milli);

/// Parses "12.345" style decimals into thousandths; throws on more than
/// three fractional digits.
std::int64_t parse_milli(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Splits one CSV line on commas. Fields in this project never contain
/// commas or quotes, so no quoting rules are applied.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nemesys
