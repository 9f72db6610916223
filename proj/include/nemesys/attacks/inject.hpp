#pragma once

#include "nemesys/attacks/attack_spec.hpp"
#include "nemesys/netsim/scenario.hpp"

namespace nemesys::attacks {

/// Throws UnknownUE, WindowOutOfHorizon or InvalidArgument when `spec`
/// cannot be applied to `scenario`.
void validate_attack(const netsim::Scenario& scenario, const AttackSpec& spec);

/// Schedules the attack's stimuli on the scenario and marks the bots
/// infected.
///
/// - SIGNALING_STORM: every bot sends a ping_bytes data burst at
///   start + k * ping_period, for every such time before stop.
/// - BOTNET_SIGNALING_DDOS: the first bot_count bots do the same with a
///   per-bot phase offset drawn from U(0, jitter * ping_period).
/// - PREMIUM_FRAUD: every bot sends premium-rate SMS to premium_peer as a
///   Poisson process of messages_per_hour.
///
/// Random draws come from a stream keyed by the scenario seed and the
/// attack's index, so UE traffic is unaffected by adding attacks.
netsim::Scenario apply_attack(netsim::Scenario scenario, const AttackSpec& spec);

/// Control-plane load of one storm bot: a ping small enough to stay in
/// FACH costs one IDLE->FACH promotion plus one FACH->IDLE demotion per
/// period. Throws PeriodTooShort if the period does not exceed the FACH
/// inactivity timer, since the UE would then never return to IDLE.
double storm_signaling_rate(const netsim::RrcParams& params, double ping_period);

}  // namespace nemesys::attacks
