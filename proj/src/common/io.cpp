#include "nemesys/common/io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nemesys/common/error.hpp"

namespace nemesys {

std::int64_t to_ms(double seconds) { return std::llround(seconds * 1000.0); }

std::string format_milli(std::int64_t milli) {
  const bool negative = milli < 0;
  const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-milli) : static_cast<std::uint64_t>(milli);
  std::string frac = std::to_string(mag % 1000);
  frac.insert(0, 3 - frac.size(), '0');
  return (negative ? "-" : "") + std::to_string(mag / 1000) + "." + frac;
}

std::int64_t parse_milli(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::kInvalidArgument, "empty decimal");
  std::size_t pos = 0;
  bool negative = false;
  if (text[0] == '-') {
    negative = true;
    pos = 1;
  }
  const auto dot = text.find('.', pos);
  const std::string whole = text.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
  std::string frac = dot == std::string::npos ? "" : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 3) throw Error(ErrorCode::kInvalidArgument, "bad decimal '" + text + "'");
  for (char c : whole + frac) {
    if (c < '0' || c > '9') throw Error(ErrorCode::kInvalidArgument, "bad decimal '" + text + "'");
  }
  frac.append(3 - frac.size(), '0');
  const std::int64_t value = std::stoll(whole) * 1000 + std::stoll(frac);
  return negative ? -value : value;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace nemesys
