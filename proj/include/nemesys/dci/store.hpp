#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nemesys/dci/trace.hpp"

namespace nemesys::dci {

/// Conjunction of equality predicates plus a half-open time range
/// [since_ms, until_ms). limit/after_id page through the ordered result.
struct Filter {
  std::optional<std::string> source;  // "honeynode:h1"
  std::optional<TraceKind> event_kind;
  std::optional<Ipv4> ip;
  std::optional<std::uint16_t> port;
  std::optional<std::string> payload_hash;
  std::optional<std::string> number;
  std::optional<std::string> geo;
  std::optional<std::uint32_t> asn;
  std::optional<std::string> rdns;
  std::optional<std::string> os_guess;
  std::optional<std::uint32_t> cluster_id;
  std::optional<std::int64_t> since_ms;
  std::optional<std::int64_t> until_ms;
  std::optional<std::size_t> limit;
  std::uint64_t after_id = 0;

  /// Predicate part only; limit and after_id are not consulted.
  bool matches(const EnrichedTrace& t) const;
};

/// "geo=ZZ event_kind=CONNECTION since=0 until=60000 limit=50". Clauses are
/// key=value separated by whitespace, '&' or ','. Unknown or repeated keys
/// and unparsable values raise MalformedFilter.
Filter parse_filter(std::string_view text);
Filter filter_from_pairs(std::span<const std::pair<std::string, std::string>> pairs);

/// Append-only trace store. Each ingest and each enrichment annotation is a
/// line appended to `traces.log`; the in-memory index is rebuilt from the log
/// on open. Enrichment is recorded as a separate annotation line, so ingested
/// records are never rewritten. One writer and any number of readers may use
/// a store concurrently; readers see a consistent prefix of the log.
class TraceStore {
 public:
  /// Volatile store with no backing file.
  TraceStore();
  /// Opens or creates the store in `dir`. With `sync` every append is
  /// followed by fdatasync; otherwise appends reach the OS before returning.
  explicit TraceStore(const std::filesystem::path& dir, bool sync = false);
  ~TraceStore();
  TraceStore(const TraceStore&) = delete;
  TraceStore& operator=(const TraceStore&) = delete;

  /// Validates, assigns trace_id = last id + 1 and appends. Any trace_id on
  /// the input is ignored. SchemaViolation, StorageFailure.
  std::uint64_t ingest(AttackTrace record);

  /// Records the enrichment fields of `trace`. Its base must equal the stored
  /// record bit for bit (SchemaViolation otherwise). No-op if unchanged.
  void annotate(const EnrichedTrace& trace);

  std::vector<EnrichedTrace> query(const Filter& filter) const;
  std::optional<EnrichedTrace> get(std::uint64_t trace_id) const;
  std::vector<EnrichedTrace> all() const;
  std::size_t size() const;

 private:
  void apply_ingest(EnrichedTrace t);
  void append_line(const std::string& line);
  void replay_log();

  mutable std::shared_mutex mu_;
  std::vector<EnrichedTrace> traces_;  // traces_[id - 1]
  // Postings over immutable base fields, ids ascending.
  std::unordered_map<std::string, std::vector<std::uint64_t>> by_source_, by_hash_;
  std::unordered_map<Ipv4, std::vector<std::uint64_t>> by_ip_;
  std::array<std::vector<std::uint64_t>, kTraceKindCount> by_kind_;
  std::filesystem::path log_path_;
  int fd_ = -1;
  bool sync_ = false;
};

}  // namespace nemesys::dci
