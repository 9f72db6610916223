#include "nemesys/netsim/queue.hpp"

#include "nemesys/common/error.hpp"
#include "nemesys/common/rng.hpp"

namespace nemesys::netsim {

StationAdvance station_advance(QueueStation station, std::span<const Message> arrivals, double until,
                               std::uint64_t seed) {
  if (until < station.clock) {
    throw Error(ErrorCode::kInvalidArgument, "station " + station.station_id + ": until precedes station clock");
  }
  double prev = station.clock;
  for (const auto& m : arrivals) {
    if (m.ts < prev) {
      throw Error(ErrorCode::kNonMonotoneArrivals, "station " + station.station_id + ": arrival out of order");
    }
    prev = m.ts;
  }
  if (!arrivals.empty() && arrivals.back().ts > until) {
    throw Error(ErrorCode::kInvalidArgument, "station " + station.station_id + ": arrival after until");
  }

  const RngStream base(seed, "station/" + station.station_id);
  RngStream rng = RngStream::from_key(base.key(), station.draws);
  const auto draw_service = [&] {
    const double s = rng.exponential(station.service_rate);
    station.draws = rng.counter();
    return s;
  };

  StationAdvance out;
  auto advance_clock = [&](double t) {
    station.area_under_n += static_cast<double>(station.queue.size()) * (t - station.clock);
    station.clock = t;
  };

  std::size_t next_arrival = 0;
  for (;;) {
    const bool has_arrival = next_arrival < arrivals.size();
    const double ta = has_arrival ? arrivals[next_arrival].ts : std::numeric_limits<double>::infinity();
    const double tc = station.next_completion;
    if (tc <= until && tc <= ta) {
      advance_clock(tc);
      const Message done = station.queue.front();
      station.queue.pop_front();
      ++station.served_count;
      station.sojourn_sum += tc - done.ts;
      out.completions.push_back(Completion{tc, done});
      station.next_completion =
          station.queue.empty() ? std::numeric_limits<double>::infinity() : tc + draw_service();
    } else if (has_arrival) {
      advance_clock(ta);
      station.queue.push_back(arrivals[next_arrival++]);
      ++station.arrival_count;
      if (station.queue.size() == 1) station.next_completion = ta + draw_service();
    } else {
      break;
    }
  }
  advance_clock(until);
  out.station = std::move(station);
  return out;
}

}  // namespace nemesys::netsim
