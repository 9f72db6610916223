#include "nemesys/netsim/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nemesys/common/error.hpp"

namespace nemesys::netsim {

namespace {

using Dist = Distribution;
using Shape = std::array<double, 24>;

// Relative hourly activity, hour 0 = midnight.
constexpr Shape kWebShape = {0.3, 0.2, 0.15, 0.1, 0.1, 0.15, 0.4, 0.8, 1.1, 1.2, 1.2, 1.2,
                             1.3, 1.2, 1.1, 1.1, 1.2, 1.3, 1.5, 1.7, 1.8, 1.6, 1.0, 0.6};
constexpr Shape kMessagingShape = {0.4, 0.2, 0.1, 0.1, 0.1, 0.2, 0.5, 1.0, 1.3, 1.3, 1.2, 1.3,
                                   1.5, 1.3, 1.2, 1.2, 1.3, 1.5, 1.6, 1.6, 1.5, 1.3, 1.0, 0.7};
constexpr Shape kIdleHeavyShape = {0.5, 0.4, 0.4, 0.4, 0.4, 0.5, 0.7, 0.9, 1.1, 1.2, 1.2, 1.2,
                                   1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.2, 1.1, 1.0, 0.8, 0.6};
constexpr Shape kStreamingShape = {0.6, 0.3, 0.2, 0.1, 0.1, 0.1, 0.2, 0.4, 0.6, 0.7, 0.8, 0.9,
                                   1.0, 1.0, 1.0, 1.1, 1.2, 1.4, 1.7, 2.0, 2.2, 2.1, 1.6, 1.0};

TrafficProfile default_profile(ProfileKind kind) {
  TrafficProfile p;
  p.kind = kind;
  switch (kind) {
    case ProfileKind::kWeb:
      p.session_rate = 12.0;
      p.session_size = {Dist::Kind::kLogNormal, 30000.0, 1.0};
      p.think_time = {Dist::Kind::kExponential, 2.0, 0.0};
      p.bursts_per_session = 4.0;
      p.call_duration = {Dist::Kind::kConstant, 0.0, 0.0};
      p.mix = {1.0, 0.0, 0.0};
      p.mobile_terminated_fraction = 0.1;
      p.diurnal_shape = kWebShape;
      break;
    case ProfileKind::kMessaging:
      p.session_rate = 8.0;
      p.session_size = {Dist::Kind::kLogNormal, 2000.0, 0.8};
      p.think_time = {Dist::Kind::kExponential, 2.0, 0.0};
      p.bursts_per_session = 1.0;
      p.call_duration = {Dist::Kind::kConstant, 0.0, 0.0};
      p.mix = {0.4, 0.0, 0.6};
      p.premium_sms_fraction = 0.02;
      p.mobile_terminated_fraction = 0.5;
      p.diurnal_shape = kMessagingShape;
      break;
    case ProfileKind::kIdleHeavy:
      p.session_rate = 2.0;
      p.session_size = {Dist::Kind::kLogNormal, 5000.0, 0.8};
      p.think_time = {Dist::Kind::kExponential, 2.0, 0.0};
      p.bursts_per_session = 1.0;
      p.call_duration = {Dist::Kind::kLogNormal, 90.0, 0.6};
      p.mix = {0.5, 0.5, 0.0};
      p.mobile_terminated_fraction = 0.5;
      p.diurnal_shape = kIdleHeavyShape;
      break;
    case ProfileKind::kStreaming:
      p.session_rate = 3.0;
      p.session_size = {Dist::Kind::kLogNormal, 400000.0, 0.7};
      p.think_time = {Dist::Kind::kExponential, 1.5, 0.0};
      p.bursts_per_session = 30.0;
      p.call_duration = {Dist::Kind::kConstant, 0.0, 0.0};
      p.mix = {1.0, 0.0, 0.0};
      p.mobile_terminated_fraction = 0.05;
      p.diurnal_shape = kStreamingShape;
      break;
  }
  return p;
}

void normalize_shape(Shape& shape) {
  const double sum = std::accumulate(shape.begin(), shape.end(), 0.0);
  for (double& w : shape) w *= 24.0 / sum;
}

}  // namespace

TrafficProfile synth_profile(ProfileKind kind, std::uint64_t seed) {
  TrafficProfile p = default_profile(kind);
  RngStream rng(seed, "profile/" + std::string(to_string(kind)));
  p.session_rate *= rng.uniform(0.9, 1.1);
  for (double& w : p.diurnal_shape) w *= rng.uniform(0.9, 1.1);
  normalize_shape(p.diurnal_shape);
  return p;
}

TrafficProfile synth_profile(std::string_view kind, std::uint64_t seed) {
  const auto parsed = parse_profile_kind(kind);
  if (!parsed) throw Error(ErrorCode::kUnknownProfileKind, "unknown profile kind '" + std::string(kind) + "'");
  return synth_profile(*parsed, seed);
}

double diurnal_weight_at(const TrafficProfile& profile, double start_hour, double t) {
  const double hour = std::fmod(start_hour + t / 3600.0, 24.0);
  const auto bin = std::clamp(static_cast<int>(std::floor(hour)), 0, 23);
  return profile.diurnal_shape[static_cast<std::size_t>(bin)];
}

double diurnal_weight_hours(const TrafficProfile& profile, double start_hour, double t0, double t1) {
  double total = 0.0;
  double t = t0;
  while (t < t1) {
    const double abs_hours = start_hour + t / 3600.0;
    const double next_boundary = (std::floor(abs_hours) + 1.0 - start_hour) * 3600.0;
    const double end = std::min(t1, next_boundary);
    total += diurnal_weight_at(profile, start_hour, t) * (end - t) / 3600.0;
    if (end <= t) break;
    t = end;
  }
  return total;
}

}  // namespace nemesys::netsim
