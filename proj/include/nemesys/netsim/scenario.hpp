#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nemesys/attacks/attack_spec.hpp"
#include "nemesys/netsim/cdr.hpp"
#include "nemesys/netsim/queue.hpp"
#include "nemesys/netsim/types.hpp"

namespace nemesys::netsim {

/// Externally scheduled stimulus, e.g. an attack ping. Injected stimuli
/// are stored on the scenario so that stripping them restores the baseline.
struct Stimulus {
  enum class Kind { kDataArrival, kPremiumSms };
  double ts = 0.0;
  std::size_t ue_index = 0;
  Kind kind = Kind::kDataArrival;
  double bytes = 0.0;
  std::string peer;
  std::size_t attack_index = 0;

  friend bool operator==(const Stimulus&, const Stimulus&) = default;
};

struct Scenario {
  std::uint64_t seed = 0;
  double horizon = 3600.0;
  double start_hour = 9.0;  // wall-clock hour at t = 0, drives the diurnal shape
  std::vector<UEState> ues;
  RrcParams rrc;
  std::vector<QueueStation> stations;
  std::map<SignalingKind, std::string> routing;
  std::vector<attacks::AttackSpec> attacks;
  std::vector<Stimulus> injected;  // time-ordered
  std::string cdr_hash_key = "nemesys";
  TariffTable tariffs;
  double stats_interval = 60.0;

  std::size_t ue_index(const std::string& ue_id) const;  // npos when absent
  std::size_t station_index(const std::string& station_id) const;
  void validate() const;
};

/// Builds a fully resolved scenario from a JSON config document. Omitted
/// fields take defaults; attacks listed in the config are applied in order.
/// Throws MalformedConfig or UnroutedEventKind.
Scenario build_scenario(const nlohmann::json& config);

/// Canonical JSON form; identical scenarios serialize to identical bytes.
nlohmann::ordered_json to_json(const Scenario& scenario);

/// The scenario with every attack, injected stimulus and infection flag removed.
Scenario strip_attacks(Scenario scenario);

}  // namespace nemesys::netsim
