// Criterion 6. The oracle keeps its own copy of every record, enriches it by
// linear scan over the tables it generated and evaluates filters with its own
// string comparisons, so nothing below reuses the store's index, the prefix
// table or Filter::matches.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <unistd.h>

#include "checks.hpp"
#include "nemesys/common/rng.hpp"
#include "nemesys/dci/aggregate.hpp"
#include "nemesys/dci/cluster.hpp"
#include "nemesys/dci/enrich.hpp"
#include "nemesys/dci/store.hpp"

namespace acceptance {

using namespace nemesys;
namespace fs = std::filesystem;

namespace {

struct Octets {
  int a, b, c, d;
  std::uint32_t value() const {
    return (static_cast<std::uint32_t>(a) << 24) | (static_cast<std::uint32_t>(b) << 16) |
           (static_cast<std::uint32_t>(c) << 8) | static_cast<std::uint32_t>(d);
  }
  std::string dotted() const {
    return std::to_string(a) + "." + std::to_string(b) + "." + std::to_string(c) + "." + std::to_string(d);
  }
};

struct PrefixRow {
  Octets net;
  int length;
  std::string value;
};

// Longest matching row by linear scan.
std::optional<std::string> scan_lpm(const std::vector<PrefixRow>& rows, std::uint32_t ip) {
  int best = -1;
  std::optional<std::string> out;
  for (const auto& r : rows) {
    const std::uint64_t span = std::uint64_t{1} << (32 - r.length);
    const std::uint64_t lo = r.net.value() / span * span;
    if (ip >= lo && ip < lo + span && r.length > best) {
      best = r.length;
      out = r.value;
    }
  }
  return out;
}

struct SigRow {
  int ttl_min, ttl_max, win;  // win 0 = any
  std::string label;
};

struct Truth {
  std::uint64_t id = 0;
  std::int64_t ts = 0;
  std::string source, kind;
  std::optional<std::string> ip, port, hash, number, geo, asn, rdns, os, cluster;
};

const std::vector<std::string> kKinds = {"CONNECTION", "APP_INSTALL", "SMS_SEND", "URL_VISIT", "SYSCALL_BURST"};

std::optional<std::string> truth_field(const Truth& t, const std::string& key) {
  if (key == "source") return t.source;
  if (key == "event_kind") return t.kind;
  if (key == "ip") return t.ip;
  if (key == "port") return t.port;
  if (key == "payload_hash") return t.hash;
  if (key == "number") return t.number;
  if (key == "geo") return t.geo;
  if (key == "asn") return t.asn;
  if (key == "rdns") return t.rdns;
  if (key == "os_guess") return t.os;
  if (key == "cluster_id") return t.cluster;
  return std::nullopt;
}

bool truth_matches(const Truth& t, const std::vector<std::pair<std::string, std::string>>& clauses) {
  for (const auto& [key, value] : clauses) {
    if (key == "since") {
      if (t.ts < std::stoll(value)) return false;
    } else if (key == "until") {
      if (t.ts >= std::stoll(value)) return false;
    } else {
      const auto field = truth_field(t, key);
      if (!field || *field != value) return false;
    }
  }
  return true;
}

void write_tables(const fs::path& dir, const std::vector<PrefixRow>& geo, const std::vector<PrefixRow>& asn,
                  const std::vector<std::pair<Octets, std::string>>& rdns, const std::vector<SigRow>& sigs) {
  fs::create_directories(dir);
  std::ofstream g(dir / "geo.csv");
  g << "cidr,country\n";
  for (const auto& r : geo) g << r.net.dotted() << "/" << r.length << "," << r.value << "\n";
  std::ofstream a(dir / "asn.csv");
  a << "cidr,asn\n";
  for (const auto& r : asn) a << r.net.dotted() << "/" << r.length << "," << r.value << "\n";
  std::ofstream d(dir / "rdns.csv");
  d << "ip,name\n";
  for (const auto& [ip, name] : rdns) d << ip.dotted() << "," << name << "\n";
  std::ofstream s(dir / "os_sigs.csv");
  s << "ttl_min,ttl_max,win,label\n";
  for (const auto& r : sigs) s << r.ttl_min << "," << r.ttl_max << "," << (r.win ? std::to_string(r.win) : "*") << "," << r.label << "\n";
}

// k-means on two blobs whose centres are 10 sigma apart.
bool blobs_recovered(std::size_t dim, std::uint64_t seed, std::string& detail) {
  RngStream rng(seed, "acceptance/blobs");
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
  for (int blob = 0; blob < 2; ++blob) {
    for (int i = 0; i < 500; ++i) {
      std::vector<double> p(dim);
      for (auto& x : p) x = rng.normal();
      p[0] += 10.0 * blob;
      points.push_back(std::move(p));
      labels.push_back(blob);
    }
  }
  // Interleave so cluster order does not follow input order.
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<std::vector<double>> shuffled;
  std::vector<int> truth;
  for (auto i : order) {
    shuffled.push_back(points[i]);
    truth.push_back(labels[i]);
  }
  const auto r = dci::cluster_traces(shuffled, 2, seed);
  std::map<std::pair<int, std::size_t>, std::size_t> contingency;
  for (std::size_t i = 0; i < truth.size(); ++i) ++contingency[{truth[i], r.assignments[i]}];
  // Exact recovery up to relabeling: two occupied cells, one per label and per cluster.
  std::set<int> labels_seen;
  std::set<std::size_t> clusters_seen;
  for (const auto& [key, n] : contingency) {
    labels_seen.insert(key.first);
    clusters_seen.insert(key.second);
  }
  const bool ok = contingency.size() == 2 && labels_seen.size() == 2 && clusters_seen.size() == 2;
  if (!ok) detail += fmt(" blobs(dim=%zu, seed=%llu) mixed;", dim, static_cast<unsigned long long>(seed));
  return ok;
}

}  // namespace

Outcome check_dci() {
  const std::size_t n = 100000;
  RngStream rng(606, "acceptance/dci");
  const auto dir = fs::temp_directory_path() / ("nemesys_acceptance_dci_" + std::to_string(::getpid()));
  fs::remove_all(dir);

  // Address pool with nested prefixes in play.
  const int as[] = {10, 172, 192, 203};
  const int bs[] = {0, 1, 2, 16};
  const int cs[] = {0, 2, 128, 200};
  std::vector<Octets> pool;
  for (int a : as)
    for (int b : bs)
      for (int c : cs)
        for (int d = 1; d <= 8; ++d) pool.push_back({a, b, c, d});

  const std::vector<PrefixRow> geo = {
      {{10, 0, 0, 0}, 8, "ZZ"},   {{10, 1, 0, 0}, 16, "YY"},  {{10, 1, 128, 0}, 17, "XA"},
      {{10, 1, 128, 0}, 24, "XB"}, {{172, 16, 0, 0}, 12, "XC"}, {{192, 0, 2, 0}, 24, "XD"},
      {{192, 0, 0, 0}, 16, "XE"},  {{203, 0, 0, 0}, 8, "XF"},   {{203, 1, 2, 5}, 32, "XG"}};
  const std::vector<PrefixRow> asn = {{{0, 0, 0, 0}, 0, "1"},          {{10, 0, 0, 0}, 8, "64512"},
                                      {{10, 2, 0, 0}, 15, "64513"},    {{192, 0, 0, 0}, 8, "64500"},
                                      {{203, 0, 0, 0}, 12, "64501"},   {{172, 16, 128, 0}, 17, "64502"}};
  std::vector<std::pair<Octets, std::string>> rdns;
  std::map<std::uint32_t, std::string> rdns_by_ip;
  for (int i = 0; i < 60; ++i) {
    const auto& ip = pool[rng.below(pool.size())];
    if (rdns_by_ip.count(ip.value())) continue;
    const auto name = "h" + std::to_string(i) + ".example.net";
    rdns.emplace_back(ip, name);
    rdns_by_ip[ip.value()] = name;
  }
  const std::vector<SigRow> sigs = {{33, 64, 5840, "unix-like"}, {33, 64, 14600, "unix-like"},
                                    {33, 64, 65535, "bsd-like"}, {65, 128, 65535, "nt-like"},
                                    {65, 128, 0, "nt-other"},    {129, 255, 0, "cisco-like"}};
  write_tables(dir / "tables", geo, asn, rdns, sigs);
  const auto tables = dci::load_tables(dir / "tables");

  // Three feeds, each in time order.
  const std::vector<std::pair<std::string, dci::Source>> feeds_meta = {
      {"h1", {dci::Source::Type::kHoneynode, "h1"}},
      {"h2", {dci::Source::Type::kHoneynode, "h2"}},
      {"urls", {dci::Source::Type::kReplayFeed, "urls"}}};
  std::vector<std::string> hashes, numbers;
  for (int i = 0; i < 30; ++i) hashes.push_back(fmt("%08llx", static_cast<unsigned long long>(rng.next_u64() >> 32)));
  for (int i = 0; i < 20; ++i) numbers.push_back((i % 3 == 0 ? "900" : "06") + std::to_string(1000 + i));
  const int ttls[] = {32, 50, 64, 100, 128, 200, 255};
  const int wins[] = {5840, 14600, 65535, 8192};
  const std::uint16_t ports[] = {22, 80, 443, 8080, 5060};

  std::vector<dci::Feed> feeds;
  std::vector<std::int64_t> clock(feeds_meta.size(), 0);
  for (const auto& [name, src] : feeds_meta) feeds.push_back({name, {}});
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = rng.below(feeds.size());
    clock[f] += static_cast<std::int64_t>(rng.below(60));
    dci::AttackTrace t;
    t.ts_ms = clock[f];
    t.source = feeds_meta[f].second;
    t.event_kind = static_cast<dci::TraceKind>(rng.below(dci::kTraceKindCount));
    const bool needs_remote = t.event_kind == dci::TraceKind::kConnection || t.event_kind == dci::TraceKind::kUrlVisit;
    if (needs_remote || rng.below(2) == 0) {
      t.remote = dci::Remote{pool[rng.below(pool.size())].value(), ports[rng.below(std::size(ports))]};
    }
    if (rng.below(5) < 2) t.payload_hash = hashes[rng.below(hashes.size())];
    if (rng.below(2) == 0) t.tcp_meta = dci::TcpMeta{ttls[rng.below(std::size(ttls))], wins[rng.below(std::size(wins))]};
    if (t.event_kind == dci::TraceKind::kSmsSend && rng.below(10) < 7) t.number = numbers[rng.below(numbers.size())];
    feeds[f].records.push_back(std::move(t));
  }
  const auto merged = dci::aggregate_sources(feeds);

  std::vector<Truth> truth;
  std::string detail;
  bool ok = merged.size() == n;
  {
    dci::TraceStore store(dir / "store");
    for (const auto& t : merged) {
      Truth row;
      row.id = store.ingest(t);
      row.ts = t.ts_ms;
      row.source = t.source.str();
      row.kind = kKinds[static_cast<std::size_t>(t.event_kind)];
      if (t.remote) {
        const auto ip = t.remote->ip;
        row.ip = std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 255) + "." +
                 std::to_string((ip >> 8) & 255) + "." + std::to_string(ip & 255);
        row.port = std::to_string(t.remote->port);
        row.geo = scan_lpm(geo, ip);
        row.asn = scan_lpm(asn, ip);
        if (const auto it = rdns_by_ip.find(ip); it != rdns_by_ip.end()) row.rdns = it->second;
      }
      if (t.tcp_meta) {
        for (const auto& s : sigs) {
          if (t.tcp_meta->ttl >= s.ttl_min && t.tcp_meta->ttl <= s.ttl_max && (s.win == 0 || s.win == t.tcp_meta->win)) {
            row.os = s.label;
            break;
          }
        }
      }
      row.hash = t.payload_hash;
      row.number = t.number;
      truth.push_back(std::move(row));
    }
    ok = ok && store.size() == n && truth.back().id == n;

    // Enrichment agrees with the scan oracle.
    std::size_t enrich_mismatch = 0;
    for (auto& row : truth) {
      const auto e = dci::enrich(store.get(row.id)->base, tables);
      const std::optional<std::string> asn_text = e.asn ? std::optional(std::to_string(*e.asn)) : std::nullopt;
      if (e.geo != row.geo || asn_text != row.asn || e.rdns != row.rdns || e.os_guess != row.os) ++enrich_mismatch;
      store.annotate(e);
    }
    // Cluster ids come from k-means over the store, as `dci cluster` does.
    std::vector<std::vector<double>> vectors;
    for (const auto& t : store.all()) vectors.push_back(dci::trace_vector(t.base));
    const auto km = dci::cluster_traces(vectors, 4, 7);
    const auto before_clusters = store.all();
    for (std::size_t i = 0; i < before_clusters.size(); ++i) {
      auto e = before_clusters[i];
      e.cluster_id = static_cast<std::uint32_t>(km.assignments[i]);
      store.annotate(e);
      truth[i].cluster = std::to_string(km.assignments[i]);
    }
    ok = ok && enrich_mismatch == 0;
    detail += fmt("%zu traces, %zu enrichment mismatches", n, enrich_mismatch);

    // Idempotence: enriching again changes neither records nor the log.
    const auto log_size = fs::file_size(dir / "store" / "traces.log");
    const auto snapshot = store.all();
    std::size_t changed = 0;
    for (const auto& t : snapshot) {
      auto again = dci::enrich(t.base, tables);
      again.cluster_id = t.cluster_id;
      auto twice = dci::enrich(again.base, tables);
      twice.cluster_id = t.cluster_id;
      changed += !(again == t) || !(twice == again);
      store.annotate(again);
    }
    const bool idempotent = changed == 0 && store.all() == snapshot && fs::file_size(dir / "store" / "traces.log") == log_size;
    ok = ok && idempotent;
    detail += idempotent ? ", enrichment idempotent" : fmt(", enrichment NOT idempotent (%zu changed)", changed);
  }

  // Queries on the reopened store against the brute-force oracle.
  dci::TraceStore store(dir / "store");
  const char* keys[] = {"source", "event_kind", "ip",       "port",       "payload_hash", "number", "geo",
                        "asn",    "rdns",       "os_guess", "cluster_id", "since",        "until"};
  const std::int64_t max_ts = *std::max_element(clock.begin(), clock.end());
  std::size_t queries = 0, wrong = 0, paged_wrong = 0, nonempty = 0;
  for (int q = 0; q < 1500; ++q) {
    std::vector<std::pair<std::string, std::string>> clauses;
    std::set<std::string> used;
    const auto& probe = truth[rng.below(truth.size())];
    const auto m = 1 + rng.below(3);
    for (std::uint64_t c = 0; c < m; ++c) {
      const std::string key = keys[rng.below(std::size(keys))];
      if (!used.insert(key).second) continue;
      std::string value;
      if (key == "since" || key == "until") {
        value = std::to_string(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_ts) + 2)));
      } else if (const auto field = truth_field(probe, key); field && rng.below(8) != 0) {
        value = *field;
      } else if (key == "event_kind") {
        value = kKinds[rng.below(kKinds.size())];
      } else if (key == "source") {
        value = "replay:other";
      } else if (key == "ip") {
        value = "10.9.9.9";
      } else if (key == "port") {
        value = std::to_string(rng.below(65536));
      } else if (key == "asn" || key == "cluster_id") {
        value = std::to_string(rng.below(70000));
      } else {
        value = "absent-value";
      }
      clauses.emplace_back(key, value);
    }
    // An inverted range is a MalformedFilter by design; keep generated ranges ordered.
    auto since = std::find_if(clauses.begin(), clauses.end(), [](const auto& c) { return c.first == "since"; });
    auto until = std::find_if(clauses.begin(), clauses.end(), [](const auto& c) { return c.first == "until"; });
    if (since != clauses.end() && until != clauses.end() && std::stoll(since->second) > std::stoll(until->second)) {
      std::swap(since->second, until->second);
    }
    std::string text;
    for (const auto& [k, v] : clauses) text += (text.empty() ? "" : " ") + k + "=" + v;

    std::vector<std::uint64_t> want;
    for (const auto& row : truth) {
      if (truth_matches(row, clauses)) want.push_back(row.id);
    }
    const auto filter = dci::parse_filter(text);
    std::vector<std::uint64_t> got;
    for (const auto& t : store.query(filter)) got.push_back(t.base.trace_id);
    ++queries;
    nonempty += !want.empty();
    if (got != want) {
      if (wrong == 0) detail += ", first wrong query '" + text + "'";
      ++wrong;
    }
    if (q % 10 == 0) {
      auto page = filter;
      page.limit = 1 + rng.below(5000);
      std::vector<std::uint64_t> paged;
      for (;;) {
        const auto chunk = store.query(page);
        for (const auto& t : chunk) paged.push_back(t.base.trace_id);
        if (chunk.size() < *page.limit) break;
        page.after_id = chunk.back().base.trace_id;
      }
      paged_wrong += paged != want;
    }
  }
  ok = ok && wrong == 0 && paged_wrong == 0 && nonempty > queries / 3;  // guards against a vacuous test
  detail += fmt(", %zu/%zu queries exact (%zu non-empty), paging mismatches %zu", queries - wrong, queries, nonempty,
                paged_wrong);

  bool blobs = true;
  for (std::size_t dim : {2, 5, 13}) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) blobs = blobs_recovered(dim, seed, detail) && blobs;
  }
  ok = ok && blobs;
  detail += blobs ? ", k-means recovered 15/15 blob pairs" : "";
  fs::remove_all(dir);
  return {ok, detail};
}

}  // namespace acceptance
