#include "nemesys/detect/classify.hpp"

#include <algorithm>
#include <cmath>

#include "nemesys/common/error.hpp"

namespace nemesys::detect {

using netsim::SignalingKind;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::pair<AttackClass, std::string_view> kClassNames[] = {
    {AttackClass::kNormal, "NORMAL"},
    {AttackClass::kSignalingStorm, "SIGNALING_STORM"},
    {AttackClass::kBotnetSignalingDdos, "BOTNET_SIGNALING_DDOS"},
    {AttackClass::kPremiumFraud, "PREMIUM_FRAUD"},
    {AttackClass::kUnknown, "UNKNOWN"},
};

}  // namespace

std::string_view to_string(AttackClass cls) {
  for (const auto& [c, name] : kClassNames) {
    if (c == cls) return name;
  }
  return "UNKNOWN";
}

std::optional<AttackClass> parse_attack_class(std::string_view text) {
  for (const auto& [c, name] : kClassNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

AttackClass classify(const features::FeatureVector& fv, std::span<const DetectionVerdict> verdicts,
                     const Baseline& baseline, const ClassifierConfig& config) {
  const bool alarmed = std::any_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.alarmed; });
  if (!alarmed) return AttackClass::kNormal;

  const double promote = fv.rate(SignalingKind::kPromoteI2F);
  const bool balanced = std::abs(fv.promote_demote_ratio - 1.0) <= config.ratio_tolerance;
  const bool frequent = promote > 0 && promote >= config.promote_factor * baseline.promote_rate;
  const bool light = fv.rate(SignalingKind::kPromoteF2D) <= config.data_fraction * promote;
  if (balanced && frequent && light) {
    return fv.active_ue_count > config.botnet_ue_quota ? AttackClass::kBotnetSignalingDdos : AttackClass::kSignalingStorm;
  }
  if (fv.premium_charge_rate > 0 && fv.premium_charge_rate > config.fraud_factor * baseline.premium_charge_rate) {
    return AttackClass::kPremiumFraud;
  }
  return AttackClass::kUnknown;
}

std::optional<Alert> fuse(std::span<const DetectionVerdict> verdicts, const features::FeatureVector& fv,
                          const Baseline& baseline, const ClassifierConfig& config, FusionPolicy policy) {
  if (verdicts.empty()) return std::nullopt;
  for (const auto& v : verdicts) {
    if (!(v.scope == verdicts.front().scope)) {
      throw Error(ErrorCode::kMixedScopes, features::to_string(v.scope) + " vs " +
                                               features::to_string(verdicts.front().scope));
    }
  }
  const auto alarmed = static_cast<std::size_t>(
      std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.alarmed; }));
  const bool raise = policy == FusionPolicy::kAny ? alarmed > 0 : alarmed == verdicts.size();
  if (!raise) return std::nullopt;

  const AttackClass cls = classify(fv, verdicts, baseline, config);
  if (cls == AttackClass::kNormal) return std::nullopt;

  double miss = 1.0;
  Alert alert;
  alert.scope = verdicts.front().scope;
  for (const auto& v : verdicts) {
    alert.ts = std::max(alert.ts, v.ts);
    if (v.alarmed) miss *= 1.0 - v.normalized();
  }
  alert.confidence = std::clamp(1.0 - miss, 0.0, 1.0);
  alert.attack_class = cls;
  alert.contributing.assign(verdicts.begin(), verdicts.end());
  return alert;
}

ordered_json to_json(const DetectionVerdict& v) {
  return ordered_json{{"ts", v.ts},
                      {"scope", features::to_string(v.scope)},
                      {"detector", to_string(v.detector)},
                      {"channel", v.channel},
                      {"score", v.score},
                      {"threshold", v.threshold},
                      {"alarmed", v.alarmed}};
}

DetectionVerdict verdict_from_json(const json& doc) {
  DetectionVerdict v;
  v.ts = doc.at("ts").get<double>();
  v.scope = features::parse_scope(doc.at("scope").get<std::string>());
  const auto detector = doc.at("detector").get<std::string>();
  if (detector != "CUSUM" && detector != "RNN") throw Error(ErrorCode::kSchemaViolation, "unknown detector " + detector);
  v.detector = detector == "CUSUM" ? DetectorKind::kCusum : DetectorKind::kRnn;
  v.channel = doc.value("channel", "");
  v.score = doc.at("score").get<double>();
  v.threshold = doc.at("threshold").get<double>();
  v.alarmed = doc.at("alarmed").get<bool>();
  return v;
}

ordered_json to_json(const Alert& a) {
  ordered_json contributing = ordered_json::array();
  for (const auto& v : a.contributing) contributing.push_back(to_json(v));
  return ordered_json{{"alert_id", a.alert_id},
                      {"ts", a.ts},
                      {"scope", features::to_string(a.scope)},
                      {"attack_class", to_string(a.attack_class)},
                      {"confidence", a.confidence},
                      {"contributing", std::move(contributing)},
                      {"acked", a.acked}};
}

Alert alert_from_json(const json& doc) {
  try {
    Alert a;
    a.alert_id = doc.at("alert_id").get<std::uint64_t>();
    a.ts = doc.at("ts").get<double>();
    a.scope = features::parse_scope(doc.at("scope").get<std::string>());
    const auto cls = parse_attack_class(doc.at("attack_class").get<std::string>());
    if (!cls || *cls == AttackClass::kNormal) throw Error(ErrorCode::kSchemaViolation, "bad attack_class");
    a.attack_class = *cls;
    a.confidence = doc.at("confidence").get<double>();
    for (const auto& v : doc.at("contributing")) a.contributing.push_back(verdict_from_json(v));
    a.acked = doc.value("acked", false);
    return a;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kSchemaViolation, std::string("alert: ") + ex.what());
  }
}

}  // namespace nemesys::detect
