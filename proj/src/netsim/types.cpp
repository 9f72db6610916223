#include "nemesys/netsim/types.hpp"

#include <cmath>

#include "nemesys/common/error.hpp"

namespace nemesys::netsim {

std::string_view to_string(RrcState state) {
  switch (state) {
    case RrcState::kIdle: return "IDLE";
    case RrcState::kFach: return "FACH";
    case RrcState::kDch: return "DCH";
  }
  return "?";
}

std::string_view to_string(SignalingKind kind) {
  switch (kind) {
    case SignalingKind::kAttach: return "ATTACH";
    case SignalingKind::kDetach: return "DETACH";
    case SignalingKind::kPromoteI2F: return "PROMOTE_I2F";
    case SignalingKind::kPromoteF2D: return "PROMOTE_F2D";
    case SignalingKind::kDemoteD2F: return "DEMOTE_D2F";
    case SignalingKind::kDemoteF2I: return "DEMOTE_F2I";
    case SignalingKind::kPaging: return "PAGING";
  }
  return "?";
}

std::optional<SignalingKind> parse_signaling_kind(std::string_view text) {
  for (auto kind : kAllSignalingKinds) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(ServiceKind kind) {
  switch (kind) {
    case ServiceKind::kVoice: return "VOICE";
    case ServiceKind::kData: return "DATA";
    case ServiceKind::kSms: return "SMS";
    case ServiceKind::kPremiumSms: return "PREMIUM_SMS";
  }
  return "?";
}

std::optional<ServiceKind> parse_service_kind(std::string_view text) {
  for (auto kind : {ServiceKind::kVoice, ServiceKind::kData, ServiceKind::kSms, ServiceKind::kPremiumSms}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kWeb: return "WEB";
    case ProfileKind::kMessaging: return "MESSAGING";
    case ProfileKind::kIdleHeavy: return "IDLE_HEAVY";
    case ProfileKind::kStreaming: return "STREAMING";
  }
  return "?";
}

std::optional<ProfileKind> parse_profile_kind(std::string_view text) {
  for (auto kind : {ProfileKind::kWeb, ProfileKind::kMessaging, ProfileKind::kIdleHeavy, ProfileKind::kStreaming}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

int RrcParams::cost(SignalingKind kind) const {
  switch (kind) {
    case SignalingKind::kAttach: return attach_cost;
    case SignalingKind::kDetach: return detach_cost;
    case SignalingKind::kPromoteI2F: return promote_i2f_cost;
    case SignalingKind::kPromoteF2D: return promote_f2d_cost;
    case SignalingKind::kDemoteD2F: return demote_d2f_cost;
    case SignalingKind::kDemoteF2I: return demote_f2i_cost;
    case SignalingKind::kPaging: return paging_cost;
  }
  return 1;
}

void RrcParams::validate() const {
  for (auto kind : kAllSignalingKinds) {
    if (cost(kind) < 1) {
      throw Error(ErrorCode::kMalformedConfig, "rrc: cost of " + std::string(to_string(kind)) + " must be >= 1");
    }
  }
  if (!(t_dch_inactivity > 0) || !(t_fach_inactivity > 0)) {
    throw Error(ErrorCode::kMalformedConfig, "rrc: inactivity timers must be > 0");
  }
  if (!(dch_volume_threshold > 0)) {
    throw Error(ErrorCode::kMalformedConfig, "rrc: dch_volume_threshold must be > 0");
  }
}

double Distribution::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kExponential: return a > 0 ? rng.exponential(1.0 / a) : 0.0;
    case Kind::kLogNormal: return a * std::exp(b * rng.normal());
    case Kind::kUniform: return rng.uniform(a, b);
  }
  return a;
}

double Distribution::mean() const {
  switch (kind) {
    case Kind::kConstant: return a;
    case Kind::kExponential: return a;
    case Kind::kLogNormal: return a * std::exp(0.5 * b * b);
    case Kind::kUniform: return 0.5 * (a + b);
  }
  return a;
}

}  // namespace nemesys::netsim
