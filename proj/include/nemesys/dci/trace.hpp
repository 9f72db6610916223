#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace nemesys::dci {

enum class TraceKind { kConnection, kAppInstall, kSmsSend, kUrlVisit, kSyscallBurst };
inline constexpr std::size_t kTraceKindCount = 5;
std::string_view to_string(TraceKind kind);
std::optional<TraceKind> parse_trace_kind(std::string_view text);

/// Where a trace came from: a honeynode ("honeynode:h1") or a replayed
/// external feed ("replay:urls").
struct Source {
  enum class Type { kHoneynode, kReplayFeed } type = Type::kReplayFeed;
  std::string name;

  std::string str() const;
  friend auto operator<=>(const Source&, const Source&) = default;
};
Source parse_source(std::string_view text);

/// IPv4 address in host byte order.
using Ipv4 = std::uint32_t;
std::optional<Ipv4> parse_ipv4(std::string_view text);
std::string format_ipv4(Ipv4 ip);

struct Remote {
  Ipv4 ip = 0;
  std::uint16_t port = 0;
  friend bool operator==(const Remote&, const Remote&) = default;
};

struct TcpMeta {
  int ttl = 0;
  int win = 0;
  friend bool operator==(const TcpMeta&, const TcpMeta&) = default;
};

struct AttackTrace {
  std::uint64_t trace_id = 0;  // 0 until ingested
  std::int64_t ts_ms = 0;
  Source source;
  TraceKind event_kind = TraceKind::kConnection;
  std::optional<Remote> remote;
  std::optional<std::string> payload_hash;  // lowercase hex
  std::optional<TcpMeta> tcp_meta;
  std::optional<std::string> number;  // SMS destination

  /// SchemaViolation unless remote is present for CONNECTION and URL_VISIT,
  /// the hash is hex and TCP fields are in range.
  void validate() const;
  friend bool operator==(const AttackTrace&, const AttackTrace&) = default;
};

struct EnrichedTrace {
  AttackTrace base;
  std::optional<std::string> geo;
  std::optional<std::uint32_t> asn;
  std::optional<std::string> rdns;
  std::optional<std::string> os_guess;
  std::optional<std::uint32_t> cluster_id;

  friend bool operator==(const EnrichedTrace&, const EnrichedTrace&) = default;
};

// traces.jsonl: {"ts_ms":..., "source":"honeynode:h1", "event_kind":"CONNECTION",
// "ip":"10.1.2.3", "port":443, "payload_hash":"ab12", "ttl":64, "win":5840}
// trace_id is written only once assigned. Unknown keys are rejected.
nlohmann::ordered_json to_json(const AttackTrace& trace);
AttackTrace trace_from_json(const nlohmann::json& doc);
AttackTrace trace_from_jsonl(const std::string& line);

/// The base fields followed by whichever enrichments are present.
nlohmann::ordered_json to_json(const EnrichedTrace& trace);
EnrichedTrace enriched_from_json(const nlohmann::json& doc);

}  // namespace nemesys::dci
