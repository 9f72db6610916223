#include "nemesys/honeynode/honeynode.hpp"

#include <charconv>
#include <cmath>
#include <unordered_set>

#include "nemesys/common/error.hpp"
#include "nemesys/common/io.hpp"

namespace nemesys::honeynode {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void malformed_table(const std::string& msg) { throw Error(ErrorCode::kMalformedTable, msg); }
[[noreturn]] void malformed_config(const std::string& msg) {
  throw Error(ErrorCode::kMalformedConfig, "honeynode config: " + msg);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines.front() != header) {
    malformed_table(path.filename().string() + ": expected header '" + header + "'");
  }
  const std::size_t width = split_csv_line(header).size();
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto fields = split_csv_line(lines[i]);
    if (fields.size() != width) malformed_table(path.filename().string() + ":" + std::to_string(i + 1) + ": bad width");
    rows.push_back(std::move(fields));
  }
  return rows;
}

template <typename T>
T csv_number(const std::string& text, const std::string& what) {
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) malformed_table("bad " + what + " '" + text + "'");
  return v;
}

void check_weights(std::span<const Rule> rules) {
  double sum = 0;
  for (const auto& r : rules) {
    if (!(r.weight >= 0)) throw Error(ErrorCode::kBadWeights, "rule " + r.name + " has a negative weight");
    sum += r.weight;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorCode::kBadWeights, "rule weights sum to " + std::to_string(sum));
}

}  // namespace

void HoneypotEvent::validate() const {
  if (kind == TraceKind::kSmsSend && (!number || number->empty())) {
    throw Error(ErrorCode::kSchemaViolation, "SMS_SEND without a number");
  }
  to_trace(*this, "validate").validate();
}

dci::AttackTrace to_trace(const HoneypotEvent& e, const std::string& node_id) {
  dci::AttackTrace t;
  t.ts_ms = e.ts_ms;
  t.source = {dci::Source::Type::kHoneynode, node_id};
  t.event_kind = e.kind;
  t.remote = e.remote;
  t.payload_hash = e.payload_hash;
  t.tcp_meta = e.tcp_meta;
  t.number = e.number;
  return t;
}

ordered_json to_json(const HoneypotEvent& e) {
  ordered_json doc = dci::to_json(to_trace(e, "x"));
  doc.erase("source");
  return doc;
}

HoneypotEvent event_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kSchemaViolation, "event must be an object");
  if (doc.contains("source") || doc.contains("trace_id")) {
    throw Error(ErrorCode::kSchemaViolation, "honeypot events carry no source or trace_id");
  }
  json with_source = doc;
  with_source["source"] = "honeynode:x";
  const auto t = dci::trace_from_json(with_source);
  HoneypotEvent e{t.ts_ms, t.event_kind, t.remote, t.payload_hash, t.tcp_meta, t.number};
  e.validate();
  return e;
}

std::vector<HoneypotEvent> read_events_jsonl(const std::filesystem::path& path) {
  std::vector<HoneypotEvent> events;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kSchemaViolation, path.filename().string() + ": " + ex.what());
    }
    events.push_back(event_from_json(doc));
  }
  return events;
}

bool MediationPolicy::is_premium(const std::string& number) const {
  for (const auto& p : premium_prefixes) {
    if (number.starts_with(p)) return true;
  }
  return false;
}

void MediationPolicy::validate() const {
  if (block_premium && premium_prefixes.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "block_premium needs at least one premium prefix");
  }
  for (const auto& p : premium_prefixes) {
    if (p.empty()) throw Error(ErrorCode::kInvalidArgument, "empty premium prefix");
  }
}

std::string_view to_string(Decision d) { return d == Decision::kForward ? "FORWARD" : "BLOCK"; }

std::string_view to_string(InfectionState s) {
  switch (s) {
    case InfectionState::kClean:
      return "CLEAN";
    case InfectionState::kSuspect:
      return "SUSPECT";
    case InfectionState::kInfected:
      return "INFECTED";
  }
  return "?";
}

ordered_json to_json(const LogEntry& entry) {
  ordered_json doc;
  if (entry.type == LogEntry::Type::kAudit) {
    doc["audit"] = entry.note;
    return doc;
  }
  doc["decision"] = to_string(entry.decision);
  doc["event"] = to_json(entry.event);
  return doc;
}

Decision mediate(HoneyNode& node, const HoneypotEvent& event) {
  event.validate();
  Decision d = Decision::kForward;
  if (node.policy.blocked_kinds.contains(event.kind)) d = Decision::kBlock;
  if (node.policy.block_premium && event.kind == TraceKind::kSmsSend && node.policy.is_premium(*event.number)) {
    d = Decision::kBlock;
  }
  node.event_log.push_back({LogEntry::Type::kEvent, event, d, {}});
  ++node.state_version;
  return d;
}

SignatureDb load_signatures(const std::filesystem::path& path) {
  SignatureDb db;
  std::unordered_set<std::string> ids;
  for (auto& row : read_csv(path, "sig_id,payload_hash")) {
    if (!ids.insert(row[0]).second) malformed_table("duplicate sig_id " + row[0]);
    db.entries.emplace_back(std::move(row[0]), std::move(row[1]));
  }
  return db;
}

std::optional<std::string> match_signature(const HoneypotEvent& event, const SignatureDb& db) {
  if (!event.payload_hash) return std::nullopt;
  for (const auto& [id, hash] : db.entries) {
    if (hash == *event.payload_hash) return id;
  }
  return std::nullopt;
}

std::vector<Rule> load_rules(const std::filesystem::path& path) {
  std::vector<Rule> rules;
  for (const auto& row : read_csv(path, "name,weight,predicate,param,min_count")) {
    Rule r;
    r.name = row[0];
    r.weight = csv_number<double>(row[1], "weight");
    const std::string& pred = row[2];
    const std::string& param = row[3];
    r.min_count = csv_number<std::size_t>(row[4], "min_count");
    const auto kind_of = [&](const std::string& text) {
      const auto k = dci::parse_trace_kind(text);
      if (!k) malformed_table("rule " + r.name + ": unknown kind '" + text + "'");
      return *k;
    };
    if (pred == "premium_sms") {
      r.predicate = Rule::Predicate::kPremiumSms;
    } else if (pred == "kind_count") {
      r.predicate = Rule::Predicate::kKindCount;
      r.kind = kind_of(param);
    } else if (pred == "night_kind") {
      r.predicate = Rule::Predicate::kNightKind;
      const auto at = param.find('@'), dash = param.find('-');
      if (at == std::string::npos || dash == std::string::npos || dash < at) {
        malformed_table("rule " + r.name + ": night_kind param must be KIND@FROM-TO");
      }
      r.kind = kind_of(param.substr(0, at));
      r.hour_from = csv_number<int>(param.substr(at + 1, dash - at - 1), "hour");
      r.hour_to = csv_number<int>(param.substr(dash + 1), "hour");
      if (r.hour_from < 0 || r.hour_to > 24 || r.hour_from >= r.hour_to) malformed_table("rule " + r.name + ": bad hours");
    } else if (pred == "signature_hit") {
      r.predicate = Rule::Predicate::kSignatureHit;
    } else if (pred == "distinct_remotes") {
      r.predicate = Rule::Predicate::kDistinctRemotes;
    } else {
      malformed_table("rule " + r.name + ": unknown predicate '" + pred + "'");
    }
    rules.push_back(std::move(r));
  }
  check_weights(rules);
  return rules;
}

bool fires(const Rule& rule, std::span<const HoneypotEvent> window, const BehaviourContext& ctx) {
  std::size_t count = 0;
  std::unordered_set<dci::Ipv4> remotes;
  for (const auto& e : window) {
    switch (rule.predicate) {
      case Rule::Predicate::kPremiumSms:
        count += e.kind == TraceKind::kSmsSend && e.number && ctx.policy && ctx.policy->is_premium(*e.number);
        break;
      case Rule::Predicate::kKindCount:
        count += e.kind == rule.kind;
        break;
      case Rule::Predicate::kNightKind: {
        const auto hour = static_cast<int>((e.ts_ms / 3600000) % 24);
        count += e.kind == rule.kind && hour >= rule.hour_from && hour < rule.hour_to;
        break;
      }
      case Rule::Predicate::kSignatureHit:
        count += ctx.signatures && match_signature(e, *ctx.signatures).has_value();
        break;
      case Rule::Predicate::kDistinctRemotes:
        if (e.remote) remotes.insert(e.remote->ip);
        count = remotes.size();
        break;
    }
  }
  return count >= rule.min_count;
}

double behaviour_score(std::span<const HoneypotEvent> window, std::span<const Rule> rules,
                       const BehaviourContext& ctx) {
  check_weights(rules);
  double score = 0;
  for (const auto& r : rules) {
    if (fires(r, window, ctx)) score += r.weight;
  }
  return std::min(score, 1.0);
}

void apply_score(HoneyNode& node, double score, const Thresholds& thresholds) {
  InfectionState next = node.infection_state;
  if (score >= thresholds.infected) {
    next = InfectionState::kInfected;
  } else if (score >= thresholds.suspect && next == InfectionState::kClean) {
    next = InfectionState::kSuspect;
  }
  if (next != node.infection_state) {
    node.infection_state = next;
    ++node.state_version;
  }
}

Snapshot snapshot(const HoneyNode& node) { return Snapshot{std::make_shared<const HoneyNode>(node)}; }

HoneyNode restore(const HoneyNode& node, const Snapshot& snap) {
  if (!snap.state) throw Error(ErrorCode::kInvalidArgument, "empty snapshot");
  if (snap.state->node_id != node.node_id) {
    throw Error(ErrorCode::kNodeMismatch, "snapshot of " + snap.state->node_id + " restored onto " + node.node_id);
  }
  HoneyNode out = *snap.state;
  out.state_version = node.state_version + 1;
  LogEntry audit;
  audit.type = LogEntry::Type::kAudit;
  audit.note = "restored snapshot taken at version " + std::to_string(snap.state->state_version);
  out.event_log.push_back(std::move(audit));
  return out;
}

std::vector<HoneypotEvent> replay(HoneyNode& node, std::span<const HoneypotEvent> events) {
  std::vector<HoneypotEvent> forwarded;
  for (const auto& e : events) {
    if (mediate(node, e) == Decision::kForward) forwarded.push_back(e);
  }
  return forwarded;
}

NodeConfig node_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  NodeConfig c;
  if (!doc.is_object()) malformed_config("expected an object");
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "node_id") {
        c.node_id = value.get<std::string>();
      } else if (key == "block_premium") {
        c.policy.block_premium = value.get<bool>();
      } else if (key == "premium_prefixes") {
        c.policy.premium_prefixes = value.get<std::vector<std::string>>();
      } else if (key == "blocked_kinds") {
        for (const auto& k : value) {
          const auto kind = dci::parse_trace_kind(k.get<std::string>());
          if (!kind) malformed_config("unknown kind " + k.dump());
          c.policy.blocked_kinds.insert(*kind);
        }
      } else if (key == "suspect_threshold") {
        c.thresholds.suspect = value.get<double>();
      } else if (key == "infected_threshold") {
        c.thresholds.infected = value.get<double>();
      } else if (key == "window_s") {
        c.window_ms = static_cast<std::int64_t>(std::llround(value.get<double>() * 1000));
      } else if (key == "rules") {
        c.rules = load_rules(base_dir / value.get<std::string>());
      } else if (key == "signatures") {
        c.signatures = load_signatures(base_dir / value.get<std::string>());
      } else {
        malformed_config("unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& ex) {
    malformed_config(ex.what());
  }
  if (c.node_id.empty()) malformed_config("node_id is empty");
  if (!(c.thresholds.suspect <= c.thresholds.infected)) malformed_config("suspect threshold above infected");
  if (c.window_ms <= 0) malformed_config("window_s must be positive");
  try {
    c.policy.validate();
  } catch (const Error& e) {
    malformed_config(e.detail());
  }
  return c;
}

}  // namespace nemesys::honeynode
