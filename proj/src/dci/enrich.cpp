#include "nemesys/dci/enrich.hpp"

#include <charconv>

#include "nemesys/common/io.hpp"

namespace nemesys::dci {

namespace {

[[noreturn]] void malformed(const std::string& msg) { throw Error(ErrorCode::kMalformedTable, msg); }

Ipv4 mask_of(int length) { return length == 0 ? 0 : ~Ipv4{0} << (32 - length); }

template <typename T>
T parse_number(std::string_view text, const std::string& what) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) malformed("bad " + what + " '" + std::string(text) + "'");
  return value;
}

// Rows of a CSV table after checking its header. Blank lines are skipped.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, const std::string& header) {
  std::vector<std::vector<std::string>> rows;
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != header) {
    malformed(path.filename().string() + ": expected header '" + header + "'");
  }
  const std::size_t width = split_csv_line(header).size();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != width) {
      malformed(path.filename().string() + ":" + std::to_string(i + 1) + ": expected " + std::to_string(width) +
                " fields");
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

bool Cidr::contains(Ipv4 ip) const { return (ip & mask_of(length)) == network; }

std::string Cidr::str() const { return format_ipv4(network) + "/" + std::to_string(length); }

Cidr parse_cidr(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) malformed("CIDR without prefix length '" + std::string(text) + "'");
  const auto ip = parse_ipv4(text.substr(0, slash));
  if (!ip) malformed("bad CIDR address '" + std::string(text) + "'");
  const int length = parse_number<int>(text.substr(slash + 1), "prefix length");
  if (length < 0 || length > 32) malformed("prefix length out of range in '" + std::string(text) + "'");
  return Cidr{*ip & mask_of(length), length};
}

EnrichmentTables load_tables(const std::filesystem::path& dir) {
  EnrichmentTables t;
  if (!std::filesystem::is_directory(dir)) malformed("tables directory " + dir.string() + " not found");
  if (const auto p = dir / "geo.csv"; std::filesystem::exists(p)) {
    for (const auto& row : read_table(p, "cidr,country")) t.geo.insert(parse_cidr(row[0]), row[1]);
  }
  if (const auto p = dir / "asn.csv"; std::filesystem::exists(p)) {
    for (const auto& row : read_table(p, "cidr,asn")) t.asn.insert(parse_cidr(row[0]), parse_number<std::uint32_t>(row[1], "asn"));
  }
  if (const auto p = dir / "rdns.csv"; std::filesystem::exists(p)) {
    for (const auto& row : read_table(p, "ip,name")) {
      const auto ip = parse_ipv4(row[0]);
      if (!ip) malformed("rdns.csv: bad ip '" + row[0] + "'");
      const auto [it, fresh] = t.rdns.emplace(*ip, row[1]);
      if (!fresh && it->second != row[1]) malformed("rdns.csv: " + row[0] + " listed twice with different names");
    }
  }
  if (const auto p = dir / "os_sigs.csv"; std::filesystem::exists(p)) {
    for (const auto& row : read_table(p, "ttl_min,ttl_max,win,label")) {
      OsSignature sig;
      sig.ttl_min = parse_number<int>(row[0], "ttl_min");
      sig.ttl_max = parse_number<int>(row[1], "ttl_max");
      if (row[2] != "*") sig.win = parse_number<int>(row[2], "win");
      sig.label = row[3];
      if (sig.ttl_min > sig.ttl_max) malformed("os_sigs.csv: ttl_min above ttl_max for " + sig.label);
      t.os_sigs.push_back(std::move(sig));
    }
  }
  return t;
}

std::optional<std::string> fingerprint_os(const TcpMeta& meta, const std::vector<OsSignature>& sigs) {
  for (const auto& sig : sigs) {
    if (meta.ttl < sig.ttl_min || meta.ttl > sig.ttl_max) continue;
    if (sig.win && *sig.win != meta.win) continue;
    return sig.label;
  }
  return std::nullopt;
}

EnrichedTrace enrich(const AttackTrace& trace, const EnrichmentTables& tables) {
  EnrichedTrace out;
  out.base = trace;
  if (trace.remote) {
    const Ipv4 ip = trace.remote->ip;
    out.geo = tables.geo.lookup(ip);
    out.asn = tables.asn.lookup(ip);
    if (const auto it = tables.rdns.find(ip); it != tables.rdns.end()) out.rdns = it->second;
  }
  if (trace.tcp_meta) out.os_guess = fingerprint_os(*trace.tcp_meta, tables.os_sigs);
  return out;
}

}  // namespace nemesys::dci
