#pragma once

#include <cstdint>
#include <string_view>

#include "nemesys/netsim/types.hpp"

namespace nemesys::netsim {

/// Default traffic table for `kind`, perturbed deterministically by `seed`
/// (session rate and diurnal bins jittered by up to +/-10%, bins
/// renormalized to mean 1).
TrafficProfile synth_profile(ProfileKind kind, std::uint64_t seed);

/// String form used by config files; throws UnknownProfileKind.
TrafficProfile synth_profile(std::string_view kind, std::uint64_t seed);

/// Sum of diurnal weights integrated over [t0, t1) seconds of simulated time,
/// in weight-hours, where t = 0 corresponds to `start_hour`.
double diurnal_weight_hours(const TrafficProfile& profile, double start_hour, double t0, double t1);

double diurnal_weight_at(const TrafficProfile& profile, double start_hour, double t);

}  // namespace nemesys::netsim
