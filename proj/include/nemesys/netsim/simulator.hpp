#pragma once

#include <string>
#include <vector>

#include "nemesys/netsim/scenario.hpp"

namespace nemesys::netsim {

struct StationSample {
  double t_end = 0.0;
  double mean_occupancy = 0.0;  // time-average number in system over the interval
  std::size_t queue_length = 0;  // number in system at t_end
  std::uint64_t served = 0;      // cumulative
};

struct StationStats {
  std::string station_id;
  double service_rate = 0.0;
  std::uint64_t arrivals = 0;
  std::uint64_t served = 0;
  double time_average_occupancy = 0.0;
  double mean_sojourn = 0.0;
  std::vector<StationSample> series;
};

struct TraceSet {
  double horizon = 0.0;
  std::vector<SignalingEvent> signaling;  // time-ordered
  std::vector<ChargingDataRecord> cdrs;   // record_id order
  std::vector<StationStats> stations;

  std::uint64_t total_signaling_messages() const;
};

/// Runs the scenario to its horizon. UEs evolve independently, each driven
/// by its own random stream; their signaling feeds an open network of
/// FIFO stations. Identical scenarios give bit-identical trace sets.
TraceSet run(const Scenario& scenario);

/// Gap between an inactivity deadline and the timer tick that acts on it,
/// equal to the export resolution of timestamps.
inline constexpr double kTimerTickSlack = 1e-3;

}  // namespace nemesys::netsim
