#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace nemesys::attacks {

enum class AttackKind { kSignalingStorm, kBotnetSignalingDdos, kPremiumFraud };

std::string_view to_string(AttackKind kind);
std::optional<AttackKind> parse_attack_kind(std::string_view text);

struct AttackSpec {
  AttackKind kind = AttackKind::kSignalingStorm;
  double start = 0.0;
  double stop = 0.0;
  std::vector<std::string> bot_ids;  // ordered, duplicates removed on parse

  // storm + ddos
  double ping_period = 15.0;
  double ping_bytes = 64.0;
  // ddos
  std::size_t bot_count = 0;  // 0 = all of bot_ids
  double jitter = 1.0;        // phase offset drawn from U(0, jitter * ping_period)
  // fraud
  double messages_per_hour = 60.0;
  std::string premium_peer = "90091";

  friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// Parses the JSON form shared by scenario configs and the service:
/// {"kind":"SIGNALING_STORM","start":1000,"stop":2000,"bot_ids":[...],
///  "params":{"ping_period":15}}. Throws MalformedConfig.
AttackSpec attack_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const AttackSpec& spec);

}  // namespace nemesys::attacks
