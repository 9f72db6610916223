#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nemesys/common/error.hpp"
#include "nemesys/dci/trace.hpp"

namespace nemesys::dci {

struct Cidr {
  Ipv4 network = 0;  // host bits cleared
  int length = 0;

  bool contains(Ipv4 ip) const;
  std::string str() const;
  friend auto operator<=>(const Cidr&, const Cidr&) = default;
};

/// "10.1.0.0/16". Host bits are cleared, so "10.1.2.3/16" normalizes to
/// 10.1.0.0/16. Throws MalformedTable.
Cidr parse_cidr(std::string_view text);

/// Longest-prefix-match table. Nested prefixes are allowed and the most
/// specific one wins; the same prefix twice with different values is a
/// MalformedTable, an exact repeat is ignored.
template <typename V>
class PrefixTable {
 public:
  void insert(const Cidr& cidr, V value);
  std::optional<V> lookup(Ipv4 ip) const;
  std::size_t size() const { return size_; }

 private:
  std::array<std::unordered_map<Ipv4, V>, 33> by_length_;
  std::size_t size_ = 0;
};

struct OsSignature {
  int ttl_min = 0;
  int ttl_max = 0;
  std::optional<int> win;  // absent matches any window ("*" in the CSV)
  std::string label;
};

struct EnrichmentTables {
  PrefixTable<std::string> geo;
  PrefixTable<std::uint32_t> asn;
  std::unordered_map<Ipv4, std::string> rdns;
  std::vector<OsSignature> os_sigs;  // order significant
};

/// Reads geo.csv (cidr,country), asn.csv (cidr,asn), rdns.csv (ip,name) and
/// os_sigs.csv (ttl_min,ttl_max,win,label) from `dir`. Each file starts with
/// that header line; a missing file leaves its table empty.
EnrichmentTables load_tables(const std::filesystem::path& dir);

/// First signature whose ttl range and window match, in table order.
std::optional<std::string> fingerprint_os(const TcpMeta& meta, const std::vector<OsSignature>& sigs);

/// Table-driven annotation; fields with no match stay absent. Enrichment
/// depends only on the base record, so it is idempotent. cluster_id is left
/// as absent; clustering assigns it separately.
EnrichedTrace enrich(const AttackTrace& trace, const EnrichmentTables& tables);

template <typename V>
void PrefixTable<V>::insert(const Cidr& cidr, V value) {
  auto& slot = by_length_[static_cast<std::size_t>(cidr.length)];
  const auto [it, fresh] = slot.emplace(cidr.network, value);
  if (fresh) {
    ++size_;
  } else if (!(it->second == value)) {
    throw Error(ErrorCode::kMalformedTable, "prefix " + cidr.str() + " listed twice with different values");
  }
}

template <typename V>
std::optional<V> PrefixTable<V>::lookup(Ipv4 ip) const {
  for (int len = 32; len >= 0; --len) {
    const auto& slot = by_length_[static_cast<std::size_t>(len)];
    if (slot.empty()) continue;
    const Ipv4 mask = len == 0 ? 0 : ~Ipv4{0} << (32 - len);
    const auto it = slot.find(ip & mask);
    if (it != slot.end()) return it->second;
  }
  return std::nullopt;
}

}  // namespace nemesys::dci
