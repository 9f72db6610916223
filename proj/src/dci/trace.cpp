#include "nemesys/dci/trace.hpp"

#include <arpa/inet.h>

#include <array>
#include <cctype>

#include "nemesys/common/error.hpp"

namespace nemesys::dci {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, kTraceKindCount> kKindNames = {"CONNECTION", "APP_INSTALL", "SMS_SEND",
                                                                      "URL_VISIT", "SYSCALL_BURST"};

constexpr std::string_view kHoneynodePrefix = "honeynode:";
constexpr std::string_view kReplayPrefix = "replay:";

[[noreturn]] void schema(const std::string& msg) { throw Error(ErrorCode::kSchemaViolation, msg); }

bool is_hex(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isxdigit(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(TraceKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<TraceKind> parse_trace_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<TraceKind>(i);
  }
  return std::nullopt;
}

std::string Source::str() const {
  return std::string(type == Type::kHoneynode ? kHoneynodePrefix : kReplayPrefix) + name;
}

Source parse_source(std::string_view text) {
  Source s;
  if (text.starts_with(kHoneynodePrefix)) {
    s.type = Source::Type::kHoneynode;
    s.name = text.substr(kHoneynodePrefix.size());
  } else if (text.starts_with(kReplayPrefix)) {
    s.type = Source::Type::kReplayFeed;
    s.name = text.substr(kReplayPrefix.size());
  } else {
    schema("source must be honeynode:<id> or replay:<name>, got '" + std::string(text) + "'");
  }
  if (s.name.empty()) schema("source name is empty");
  return s;
}

std::optional<Ipv4> parse_ipv4(std::string_view text) {
  const std::string s(text);
  in_addr addr{};
  if (inet_pton(AF_INET, s.c_str(), &addr) != 1) return std::nullopt;
  return ntohl(addr.s_addr);
}

std::string format_ipv4(Ipv4 ip) {
  return std::to_string(ip >> 24) + "." + std::to_string((ip >> 16) & 0xff) + "." + std::to_string((ip >> 8) & 0xff) +
         "." + std::to_string(ip & 0xff);
}

void AttackTrace::validate() const {
  if (ts_ms < 0) schema("ts_ms must be non-negative");
  if ((event_kind == TraceKind::kConnection || event_kind == TraceKind::kUrlVisit) && !remote) {
    schema(std::string(to_string(event_kind)) + " record without remote ip/port");
  }
  if (payload_hash && !is_hex(*payload_hash)) schema("payload_hash must be lowercase hex");
  if (tcp_meta) {
    if (tcp_meta->ttl < 0 || tcp_meta->ttl > 255) schema("ttl out of range");
    if (tcp_meta->win < 0 || tcp_meta->win > 65535) schema("win out of range");
  }
  if (source.name.empty()) schema("source name is empty");
}

ordered_json to_json(const AttackTrace& t) {
  ordered_json doc;
  if (t.trace_id != 0) doc["trace_id"] = t.trace_id;
  doc["ts_ms"] = t.ts_ms;
  doc["source"] = t.source.str();
  doc["event_kind"] = to_string(t.event_kind);
  if (t.remote) {
    doc["ip"] = format_ipv4(t.remote->ip);
    doc["port"] = t.remote->port;
  }
  if (t.payload_hash) doc["payload_hash"] = *t.payload_hash;
  if (t.tcp_meta) {
    doc["ttl"] = t.tcp_meta->ttl;
    doc["win"] = t.tcp_meta->win;
  }
  if (t.number) doc["number"] = *t.number;
  return doc;
}

namespace {

constexpr std::array<std::string_view, 10> kBaseKeys = {"trace_id",     "ts_ms", "source", "event_kind", "ip", "port",
                                                        "payload_hash", "ttl",   "win",    "number"};
constexpr std::array<std::string_view, 5> kEnrichKeys = {"geo", "asn", "rdns", "os_guess", "cluster_id"};

template <std::size_t N>
bool among(const std::array<std::string_view, N>& keys, const std::string& k) {
  for (auto key : keys) {
    if (key == k) return true;
  }
  return false;
}

AttackTrace parse_base(const json& doc, bool allow_enrichment) {
  if (!doc.is_object()) schema("trace record must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (!among(kBaseKeys, k) && !(allow_enrichment && among(kEnrichKeys, k))) schema("unknown key '" + k + "'");
  }
  AttackTrace t;
  try {
    if (doc.contains("trace_id")) t.trace_id = doc.at("trace_id").get<std::uint64_t>();
    t.ts_ms = doc.at("ts_ms").get<std::int64_t>();
    t.source = parse_source(doc.at("source").get<std::string>());
    const auto kind = parse_trace_kind(doc.at("event_kind").get<std::string>());
    if (!kind) schema("unknown event_kind " + doc.at("event_kind").dump());
    t.event_kind = *kind;
    const bool has_ip = doc.contains("ip"), has_port = doc.contains("port");
    if (has_ip != has_port) schema("ip and port must appear together");
    if (has_ip) {
      const auto ip = parse_ipv4(doc.at("ip").get<std::string>());
      if (!ip) schema("bad ip " + doc.at("ip").dump());
      const auto port = doc.at("port").get<std::int64_t>();
      if (port < 0 || port > 65535) schema("port out of range");
      t.remote = Remote{*ip, static_cast<std::uint16_t>(port)};
    }
    if (doc.contains("payload_hash")) t.payload_hash = doc.at("payload_hash").get<std::string>();
    const bool has_ttl = doc.contains("ttl"), has_win = doc.contains("win");
    if (has_ttl != has_win) schema("ttl and win must appear together");
    if (has_ttl) t.tcp_meta = TcpMeta{doc.at("ttl").get<int>(), doc.at("win").get<int>()};
    if (doc.contains("number")) t.number = doc.at("number").get<std::string>();
  } catch (const json::exception& ex) {
    schema(std::string("trace record: ") + ex.what());
  }
  t.validate();
  return t;
}

}  // namespace

AttackTrace trace_from_json(const json& doc) { return parse_base(doc, false); }

AttackTrace trace_from_jsonl(const std::string& line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::exception& ex) {
    schema(std::string("traces.jsonl: ") + ex.what());
  }
  return trace_from_json(doc);
}

ordered_json to_json(const EnrichedTrace& t) {
  ordered_json doc = to_json(t.base);
  if (t.geo) doc["geo"] = *t.geo;
  if (t.asn) doc["asn"] = *t.asn;
  if (t.rdns) doc["rdns"] = *t.rdns;
  if (t.os_guess) doc["os_guess"] = *t.os_guess;
  if (t.cluster_id) doc["cluster_id"] = *t.cluster_id;
  return doc;
}

EnrichedTrace enriched_from_json(const json& doc) {
  EnrichedTrace t;
  t.base = parse_base(doc, true);
  try {
    if (doc.contains("geo")) t.geo = doc.at("geo").get<std::string>();
    if (doc.contains("asn")) t.asn = doc.at("asn").get<std::uint32_t>();
    if (doc.contains("rdns")) t.rdns = doc.at("rdns").get<std::string>();
    if (doc.contains("os_guess")) t.os_guess = doc.at("os_guess").get<std::string>();
    if (doc.contains("cluster_id")) t.cluster_id = doc.at("cluster_id").get<std::uint32_t>();
  } catch (const json::exception& ex) {
    schema(std::string("enriched trace: ") + ex.what());
  }
  return t;
}

}  // namespace nemesys::dci
