#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "nemesys/common/rng.hpp"

namespace nemesys::netsim {

enum class RrcState { kIdle, kFach, kDch };

enum class SignalingKind {
  kAttach,
  kDetach,
  kPromoteI2F,
  kPromoteF2D,
  kDemoteD2F,
  kDemoteF2I,
  kPaging,
};

inline constexpr std::array kAllSignalingKinds = {
    SignalingKind::kAttach,    SignalingKind::kDetach,    SignalingKind::kPromoteI2F, SignalingKind::kPromoteF2D,
    SignalingKind::kDemoteD2F, SignalingKind::kDemoteF2I, SignalingKind::kPaging,
};
inline constexpr std::size_t kSignalingKindCount = kAllSignalingKinds.size();

std::string_view to_string(RrcState state);
std::string_view to_string(SignalingKind kind);
std::optional<SignalingKind> parse_signaling_kind(std::string_view text);

enum class ServiceKind { kVoice, kData, kSms, kPremiumSms };

std::string_view to_string(ServiceKind kind);
std::optional<ServiceKind> parse_service_kind(std::string_view text);

/// RRC channel-state machine parameters. Costs are signaling messages per
/// transition; timers are inactivity durations in seconds.
struct RrcParams {
  int promote_i2f_cost = 3;
  int promote_f2d_cost = 2;
  int demote_d2f_cost = 2;
  int demote_f2i_cost = 2;
  int attach_cost = 1;
  int detach_cost = 1;
  int paging_cost = 1;
  double dch_volume_threshold = 1024.0;
  double t_dch_inactivity = 5.0;
  double t_fach_inactivity = 12.0;

  int cost(SignalingKind kind) const;
  void validate() const;

  friend bool operator==(const RrcParams&, const RrcParams&) = default;
};

struct Distribution {
  enum class Kind { kConstant, kExponential, kLogNormal, kUniform };
  Kind kind = Kind::kConstant;
  // constant: a; exponential: mean a; lognormal: median a, sigma b;
  // uniform: [a, b).
  double a = 0.0;
  double b = 0.0;

  double sample(RngStream& rng) const;
  double mean() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;
};

enum class ProfileKind { kWeb, kMessaging, kIdleHeavy, kStreaming };

std::string_view to_string(ProfileKind kind);
std::optional<ProfileKind> parse_profile_kind(std::string_view text);

struct ServiceMix {
  double data = 1.0;
  double voice = 0.0;
  double sms = 0.0;

  friend bool operator==(const ServiceMix&, const ServiceMix&) = default;
};

struct TrafficProfile {
  ProfileKind kind = ProfileKind::kWeb;
  double session_rate = 0.0;  // sessions per hour at diurnal weight 1
  Distribution session_size;  // bytes per burst
  Distribution think_time;    // seconds between bursts of one session
  double bursts_per_session = 1.0;  // geometric mean, >= 1
  Distribution call_duration;       // seconds, voice sessions
  ServiceMix mix;
  double premium_sms_fraction = 0.0;
  double mobile_terminated_fraction = 0.0;  // sessions that start with paging
  std::array<double, 24> diurnal_shape{};   // sums to 24

  friend bool operator==(const TrafficProfile&, const TrafficProfile&) = default;
};

struct UEState {
  std::string ue_id;
  std::string cell_id;
  RrcState rrc = RrcState::kIdle;
  double last_activity_ts = 0.0;
  double state_since = 0.0;  // time of the last RRC transition
  double pending_bytes = 0.0;
  TrafficProfile profile;
  bool infected = false;

  friend bool operator==(const UEState&, const UEState&) = default;
};

struct SignalingEvent {
  double ts = 0.0;
  std::string ue_id;
  SignalingKind kind = SignalingKind::kAttach;
  std::string cell_id;
  int cost = 1;

  friend bool operator==(const SignalingEvent&, const SignalingEvent&) = default;
};

/// Money amounts are fixed-point thousandths of a charge unit so that
/// records are bit-identical across platforms.
struct ChargingDataRecord {
  std::uint64_t record_id = 0;
  std::string ue_id;  // anonymized
  ServiceKind service = ServiceKind::kData;
  double start_ts = 0.0;
  double duration = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  std::string peer;
  std::int64_t charge_milli = 0;
  std::string cell_id;

  double charge_units() const { return static_cast<double>(charge_milli) / 1000.0; }

  friend bool operator==(const ChargingDataRecord&, const ChargingDataRecord&) = default;
};

}  // namespace nemesys::netsim
