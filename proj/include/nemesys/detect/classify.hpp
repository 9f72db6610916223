#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nemesys/detect/cusum.hpp"

namespace nemesys::detect {

enum class AttackClass { kNormal, kSignalingStorm, kBotnetSignalingDdos, kPremiumFraud, kUnknown };
std::string_view to_string(AttackClass cls);
std::optional<AttackClass> parse_attack_class(std::string_view text);

/// Reference levels of attack-free traffic, per second.
struct Baseline {
  double promote_rate = 0.0;         // PROMOTE_I2F events
  double premium_rate = 0.0;         // premium CDRs
  double premium_charge_rate = 0.0;  // premium charge units
  double duration = 0.0;
};

struct ClassifierConfig {
  double ratio_tolerance = 0.25;  // |promote_demote_ratio - 1| allowed for the storm signature
  double promote_factor = 5.0;    // PROMOTE_I2F rate over baseline that counts as high
  double data_fraction = 0.2;     // PROMOTE_F2D at most this share of PROMOTE_I2F
  double botnet_ue_quota = 150;   // active UEs above which a storm is a botnet DDoS
  double fraud_factor = 5.0;      // premium charge rate over baseline that counts as fraud
};

/// Rule layer over the features of an alarmed window. Pure.
AttackClass classify(const features::FeatureVector& fv, std::span<const DetectionVerdict> verdicts,
                     const Baseline& baseline, const ClassifierConfig& config);

struct Alert {
  std::uint64_t alert_id = 0;
  double ts = 0.0;
  features::Scope scope;
  AttackClass attack_class = AttackClass::kUnknown;
  double confidence = 0.0;
  std::vector<DetectionVerdict> contributing;
  bool acked = false;

  friend bool operator==(const Alert&, const Alert&) = default;
};

enum class FusionPolicy { kAny, kAll };

/// Combines the verdicts of one window. Under kAny (default) an alert is
/// raised when any detector alarmed, kAll needs every detector to agree.
/// Confidence is 1 - prod(1 - normalized score) over alarmed verdicts.
/// Throws MixedScopes if the verdicts disagree on scope. The returned
/// alert has id 0 and ts of the latest verdict; the caller numbers it.
std::optional<Alert> fuse(std::span<const DetectionVerdict> verdicts, const features::FeatureVector& fv,
                          const Baseline& baseline, const ClassifierConfig& config,
                          FusionPolicy policy = FusionPolicy::kAny);

nlohmann::ordered_json to_json(const DetectionVerdict& verdict);
DetectionVerdict verdict_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const Alert& alert);
Alert alert_from_json(const nlohmann::json& doc);

}  // namespace nemesys::detect
