#include "nemesys/attacks/inject.hpp"

#include <algorithm>
#include <cmath>

#include "nemesys/common/error.hpp"
#include "nemesys/common/rng.hpp"

namespace nemesys::attacks {

using netsim::Scenario;
using netsim::Stimulus;

void validate_attack(const Scenario& scenario, const AttackSpec& spec) {
  if (!(spec.start >= 0) || !(spec.start < spec.stop)) {
    throw Error(ErrorCode::kWindowOutOfHorizon, "attack window must satisfy 0 <= start < stop");
  }
  if (spec.stop > scenario.horizon) {
    throw Error(ErrorCode::kWindowOutOfHorizon, "attack stop " + std::to_string(spec.stop) + " exceeds horizon " +
                                                    std::to_string(scenario.horizon));
  }
  if (spec.bot_ids.empty()) throw Error(ErrorCode::kUnknownUE, "attack lists no bots");
  for (const auto& id : spec.bot_ids) {
    if (scenario.ue_index(id) == static_cast<std::size_t>(-1)) {
      throw Error(ErrorCode::kUnknownUE, "bot '" + id + "' is not a scenario UE");
    }
  }
  switch (spec.kind) {
    case AttackKind::kBotnetSignalingDdos:
      if (spec.bot_count > spec.bot_ids.size()) {
        throw Error(ErrorCode::kInvalidArgument, "bot_count exceeds the number of listed bots");
      }
      if (spec.jitter < 0 || spec.jitter > 1) throw Error(ErrorCode::kInvalidArgument, "jitter must be in [0, 1]");
      [[fallthrough]];
    case AttackKind::kSignalingStorm:
      if (!(spec.ping_period > 0)) throw Error(ErrorCode::kInvalidArgument, "ping_period must be > 0");
      if (spec.ping_bytes < 0) throw Error(ErrorCode::kInvalidArgument, "ping_bytes must be >= 0");
      break;
    case AttackKind::kPremiumFraud:
      if (spec.messages_per_hour < 0) throw Error(ErrorCode::kInvalidArgument, "messages_per_hour must be >= 0");
      if (spec.premium_peer.empty()) throw Error(ErrorCode::kInvalidArgument, "premium_peer must be set");
      break;
  }
}

Scenario apply_attack(Scenario scenario, const AttackSpec& spec) {
  validate_attack(scenario, spec);
  const std::size_t attack_index = scenario.attacks.size();
  RngStream rng(scenario.seed, "attack/" + std::to_string(attack_index));

  std::vector<std::size_t> bots;
  for (const auto& id : spec.bot_ids) bots.push_back(scenario.ue_index(id));
  if (spec.kind == AttackKind::kBotnetSignalingDdos && spec.bot_count > 0) bots.resize(spec.bot_count);

  std::vector<Stimulus> added;
  const auto ping_train = [&](std::size_t ue, double first) {
    for (std::size_t k = 0;; ++k) {
      const double t = first + static_cast<double>(k) * spec.ping_period;
      if (t >= spec.stop) break;
      added.push_back(Stimulus{t, ue, Stimulus::Kind::kDataArrival, spec.ping_bytes, "", attack_index});
    }
  };

  switch (spec.kind) {
    case AttackKind::kSignalingStorm:
      for (auto ue : bots) ping_train(ue, spec.start);
      break;
    case AttackKind::kBotnetSignalingDdos:
      for (auto ue : bots) {
        RngStream bot_rng = rng.split("bot/" + scenario.ues[ue].ue_id);
        ping_train(ue, spec.start + bot_rng.uniform(0.0, spec.jitter * spec.ping_period));
      }
      break;
    case AttackKind::kPremiumFraud:
      if (spec.messages_per_hour > 0) {
        const double rate = spec.messages_per_hour / 3600.0;
        for (auto ue : bots) {
          RngStream bot_rng = rng.split("bot/" + scenario.ues[ue].ue_id);
          for (double t = spec.start + bot_rng.exponential(rate); t < spec.stop; t += bot_rng.exponential(rate)) {
            added.push_back(Stimulus{t, ue, Stimulus::Kind::kPremiumSms, 0.0, spec.premium_peer, attack_index});
          }
        }
      }
      break;
  }

  for (auto ue : bots) scenario.ues[ue].infected = true;
  scenario.injected.insert(scenario.injected.end(), added.begin(), added.end());
  std::stable_sort(scenario.injected.begin(), scenario.injected.end(), [](const Stimulus& a, const Stimulus& b) {
    if (a.ts != b.ts) return a.ts < b.ts;
    if (a.ue_index != b.ue_index) return a.ue_index < b.ue_index;
    return a.attack_index < b.attack_index;
  });
  scenario.attacks.push_back(spec);
  return scenario;
}

double storm_signaling_rate(const netsim::RrcParams& params, double ping_period) {
  if (!(ping_period > params.t_fach_inactivity)) {
    throw Error(ErrorCode::kPeriodTooShort, "ping_period must exceed t_fach_inactivity (" +
                                                std::to_string(params.t_fach_inactivity) + " s)");
  }
  return static_cast<double>(params.promote_i2f_cost + params.demote_f2i_cost) / ping_period;
}

}  // namespace nemesys::attacks
