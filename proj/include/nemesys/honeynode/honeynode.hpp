#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nemesys/dci/trace.hpp"

namespace nemesys::honeynode {

using dci::TraceKind;

/// One action of the honeypot domain, as seen by the infrastructure domain.
struct HoneypotEvent {
  std::int64_t ts_ms = 0;
  TraceKind kind = TraceKind::kConnection;
  std::optional<dci::Remote> remote;
  std::optional<std::string> payload_hash;
  std::optional<dci::TcpMeta> tcp_meta;
  std::optional<std::string> number;  // SMS destination

  /// SchemaViolation: SMS_SEND needs a number, CONNECTION and URL_VISIT a remote.
  void validate() const;
  friend bool operator==(const HoneypotEvent&, const HoneypotEvent&) = default;
};

// Same keys as traces.jsonl, without source and trace_id.
nlohmann::ordered_json to_json(const HoneypotEvent& event);
HoneypotEvent event_from_json(const nlohmann::json& doc);
std::vector<HoneypotEvent> read_events_jsonl(const std::filesystem::path& path);

/// The record a forwarded event becomes when handed to the collector.
dci::AttackTrace to_trace(const HoneypotEvent& event, const std::string& node_id);

struct MediationPolicy {
  bool block_premium = true;
  std::vector<std::string> premium_prefixes{"900", "909"};
  std::set<TraceKind> blocked_kinds;

  bool is_premium(const std::string& number) const;
  void validate() const;  // InvalidArgument when blocking with no prefixes
};

enum class Decision { kForward, kBlock };
std::string_view to_string(Decision d);

enum class InfectionState { kClean, kSuspect, kInfected };
std::string_view to_string(InfectionState s);

/// A wiretap entry. Audit entries record restores and carry no event.
struct LogEntry {
  enum class Type { kEvent, kAudit } type = Type::kEvent;
  HoneypotEvent event;
  Decision decision = Decision::kForward;
  std::string note;

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

nlohmann::ordered_json to_json(const LogEntry& entry);

struct HoneyNode {
  std::string node_id;
  MediationPolicy policy;
  std::vector<LogEntry> event_log;  // append-only
  std::uint64_t state_version = 0;  // bumped on every change
  InfectionState infection_state = InfectionState::kClean;
};

/// Logs the event whatever the outcome, then decides: premium SMS under
/// block_premium and any blocked kind are blocked, the rest forwarded.
Decision mediate(HoneyNode& node, const HoneypotEvent& event);

struct SignatureDb {
  std::vector<std::pair<std::string, std::string>> entries;  // (sig_id, payload_hash)
};
/// CSV with header sig_id,payload_hash. Duplicate sig_ids are a MalformedTable.
SignatureDb load_signatures(const std::filesystem::path& path);
/// First entry, in table order, whose hash equals the event's payload hash.
std::optional<std::string> match_signature(const HoneypotEvent& event, const SignatureDb& db);

/// A weighted predicate over a window of recent events. It fires when at
/// least min_count events satisfy it (distinct addresses for kDistinctRemotes).
struct Rule {
  enum class Predicate {
    kPremiumSms,       // SMS_SEND to a premium prefix
    kKindCount,        // events of `kind`
    kNightKind,        // events of `kind` whose hour of day is in [hour_from, hour_to)
    kSignatureHit,     // events matching the signature db
    kDistinctRemotes,  // distinct remote addresses
  };
  std::string name;
  double weight = 0.0;
  Predicate predicate = Predicate::kKindCount;
  TraceKind kind = TraceKind::kConnection;
  int hour_from = 0;
  int hour_to = 6;
  std::size_t min_count = 1;
};

/// CSV with header name,weight,predicate,param,min_count. predicate is one
/// of premium_sms, kind_count, night_kind, signature_hit, distinct_remotes;
/// param is the event kind for kind_count, KIND@FROM-TO for night_kind and
/// empty otherwise. Weights must sum to 1 (BadWeights).
std::vector<Rule> load_rules(const std::filesystem::path& path);

struct BehaviourContext {
  const MediationPolicy* policy = nullptr;  // premium prefixes
  const SignatureDb* signatures = nullptr;
};

bool fires(const Rule& rule, std::span<const HoneypotEvent> window, const BehaviourContext& ctx);

/// Sum of the weights of the rules that fire. BadWeights unless the weights
/// are non-negative and sum to 1 within 1e-9.
double behaviour_score(std::span<const HoneypotEvent> window, std::span<const Rule> rules,
                       const BehaviourContext& ctx);

struct Thresholds {
  double suspect = 0.5;
  double infected = 0.8;
};

/// Escalates the node's infection state for `score`; never downgrades.
void apply_score(HoneyNode& node, double score, const Thresholds& thresholds = {});

/// Immutable copy of a node's state.
struct Snapshot {
  std::shared_ptr<const HoneyNode> state;
};

Snapshot snapshot(const HoneyNode& node);
/// The snapshot's state with state_version one past the current node's and
/// an audit entry appended. NodeMismatch if the ids differ.
HoneyNode restore(const HoneyNode& node, const Snapshot& snap);

/// Mediates each event in order and returns the forwarded ones.
std::vector<HoneypotEvent> replay(HoneyNode& node, std::span<const HoneypotEvent> events);

struct NodeConfig {
  std::string node_id = "h1";
  MediationPolicy policy;
  Thresholds thresholds;
  std::vector<Rule> rules;
  SignatureDb signatures;
  std::int64_t window_ms = 3600000;  // behaviour window ending at each event
};

/// JSON: node_id, block_premium, premium_prefixes, blocked_kinds,
/// suspect_threshold, infected_threshold, window_s, and optional rules and
/// signatures CSV paths resolved against `base_dir`.
NodeConfig node_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

}  // namespace nemesys::honeynode
