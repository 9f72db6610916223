#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace nemesys::netsim {

struct Message {
  double ts = 0.0;  // arrival time
  std::uint64_t seq = 0;
};

struct Completion {
  double ts = 0.0;  // departure time
  Message message;
};

/// Single-server FIFO station with exponential service. The message at the
/// front of `queue` is the one in service.
struct QueueStation {
  std::string station_id;
  double service_rate = 1.0;  // messages per second
  std::deque<Message> queue;
  double clock = 0.0;
  double next_completion = std::numeric_limits<double>::infinity();
  std::uint64_t arrival_count = 0;
  std::uint64_t served_count = 0;
  double area_under_n = 0.0;  // integral of number-in-system over time
  double sojourn_sum = 0.0;   // total time in system of served messages
  std::uint64_t draws = 0;    // position in the service-time stream

  double time_average_occupancy() const { return clock > 0 ? area_under_n / clock : 0.0; }
  double mean_sojourn() const { return served_count > 0 ? sojourn_sum / static_cast<double>(served_count) : 0.0; }
};

struct StationAdvance {
  QueueStation station;
  std::vector<Completion> completions;
};

/// Advances `station` to time `until`, feeding it `arrivals` (time-ordered,
/// none earlier than the station clock, none later than `until`). Service
/// times come from the stream keyed by (seed, station_id), resumed at
/// `station.draws`, so splitting a run into several calls yields the same
/// trajectory as one call.
StationAdvance station_advance(QueueStation station, std::span<const Message> arrivals, double until,
                               std::uint64_t seed);

}  // namespace nemesys::netsim
