#include "nemesys/netsim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nemesys/common/rng.hpp"
#include "nemesys/netsim/profile.hpp"
#include "nemesys/netsim/rrc.hpp"

namespace nemesys::netsim {

namespace {

constexpr double kVoiceKeepalive = 2.0;  // seconds between voice activity markers
constexpr double kVoiceBytesPerSecond = 1525.0;  // 12.2 kbit/s codec

struct UeStimulus {
  double ts = 0.0;
  enum class Kind { kData, kPremiumSms } kind = Kind::kData;
  double bytes = 0.0;
  bool paging = false;
  std::string peer;
};

struct UeOutput {
  std::vector<SignalingEvent> events;
  std::vector<SessionRecord> sessions;
};

std::size_t geometric(RngStream& rng, double mean) {
  if (mean <= 1.0) return 1;
  const double p = 1.0 / mean;
  return 1 + static_cast<std::size_t>(std::floor(std::log(rng.uniform()) / std::log1p(-p)));
}

// Normal traffic of one UE: session arrivals are a Poisson process thinned
// by the diurnal shape.
void generate_sessions(const Scenario& sc, const UEState& ue, std::vector<UeStimulus>& stimuli,
                       std::vector<SessionRecord>& sessions) {
  const TrafficProfile& p = ue.profile;
  if (p.session_rate <= 0) return;
  RngStream rng(sc.seed, "ue/" + ue.ue_id + "/sessions");
  const double w_max = *std::max_element(p.diurnal_shape.begin(), p.diurnal_shape.end());
  const double rate_max = p.session_rate * w_max / 3600.0;
  const double mix_total = p.mix.data + p.mix.voice + p.mix.sms;

  for (double t = rng.exponential(rate_max); t < sc.horizon; t += rng.exponential(rate_max)) {
    if (rng.uniform() * w_max >= diurnal_weight_at(p, sc.start_hour, t)) continue;
    const double pick = rng.uniform() * mix_total;
    const bool mobile_terminated = rng.uniform() < p.mobile_terminated_fraction;
    SessionRecord session{ue.ue_id, ue.cell_id, ServiceKind::kData, t, t, 0, 0, 0, ""};

    if (pick < p.mix.data) {
      const std::size_t bursts = geometric(rng, p.bursts_per_session);
      double when = t;
      double total = 0.0;
      for (std::size_t b = 0; b < bursts; ++b) {
        if (b > 0) when += p.think_time.sample(rng);
        const double bytes = std::max(1.0, std::round(p.session_size.sample(rng)));
        total += bytes;
        stimuli.push_back(UeStimulus{when, UeStimulus::Kind::kData, bytes, b == 0 && mobile_terminated, ""});
      }
      session.end_ts = when;
      session.bytes_down = static_cast<std::uint64_t>(std::llround(total * 0.9));
      session.bytes_up = static_cast<std::uint64_t>(std::llround(total)) - session.bytes_down;
      session.peer = "srv" + std::to_string(rng.below(64));
    } else if (pick < p.mix.data + p.mix.voice) {
      const double duration = std::max(1.0, p.call_duration.sample(rng));
      session.service = ServiceKind::kVoice;
      session.end_ts = t + duration;
      const auto bytes = static_cast<std::uint64_t>(std::llround(duration * kVoiceBytesPerSecond));
      session.bytes_up = bytes;
      session.bytes_down = bytes;
      session.peer = "msisdn" + std::to_string(rng.below(10000));
      stimuli.push_back(UeStimulus{t, UeStimulus::Kind::kData, 2.0 * sc.rrc.dch_volume_threshold + 1.0,
                                   mobile_terminated, ""});
      for (double k = t + kVoiceKeepalive; k < session.end_ts; k += kVoiceKeepalive) {
        stimuli.push_back(UeStimulus{k, UeStimulus::Kind::kData, kVoiceKeepalive * kVoiceBytesPerSecond, false, ""});
      }
    } else {
      const bool premium = rng.uniform() < p.premium_sms_fraction;
      session.service = premium ? ServiceKind::kPremiumSms : ServiceKind::kSms;
      session.messages = 1;
      session.peer = premium ? "90090" : "msisdn" + std::to_string(rng.below(10000));
    }
    sessions.push_back(std::move(session));
  }
}

UeOutput simulate_ue(const Scenario& sc, std::size_t index) {
  const UEState& initial = sc.ues[index];
  UeOutput out;
  std::vector<UeStimulus> stimuli;
  generate_sessions(sc, initial, stimuli, out.sessions);

  for (const auto& inj : sc.injected) {
    if (inj.ue_index != index) continue;
    if (inj.kind == Stimulus::Kind::kDataArrival) {
      stimuli.push_back(UeStimulus{inj.ts, UeStimulus::Kind::kData, inj.bytes, false, ""});
    } else {
      out.sessions.push_back(
          SessionRecord{initial.ue_id, initial.cell_id, ServiceKind::kPremiumSms, inj.ts, inj.ts, 0, 0, 1, inj.peer});
    }
  }
  std::stable_sort(stimuli.begin(), stimuli.end(), [](const UeStimulus& a, const UeStimulus& b) { return a.ts < b.ts; });

  UEState ue = initial;
  ue.rrc = RrcState::kIdle;
  ue.last_activity_ts = 0.0;
  ue.state_since = 0.0;
  ue.pending_bytes = 0.0;

  RngStream attach_rng(sc.seed, "ue/" + ue.ue_id + "/attach");
  const double attach_ts = attach_rng.uniform();
  if (attach_ts <= sc.horizon) {
    out.events.push_back(SignalingEvent{attach_ts, ue.ue_id, SignalingKind::kAttach, ue.cell_id,
                                        sc.rrc.cost(SignalingKind::kAttach)});
  }

  const auto apply = [&](const RrcStimulus& stimulus) {
    auto step = rrc_step(ue, stimulus, sc.rrc);
    ue = std::move(step.ue);
    for (auto& e : step.events) out.events.push_back(std::move(e));
  };
  const auto run_timers_until = [&](double limit) {
    for (;;) {
      const double tick = next_demotion_deadline(ue, sc.rrc) + kTimerTickSlack;
      if (!(tick <= limit) || tick > sc.horizon) return;
      apply(TimerTick{tick});
    }
  };

  for (const auto& s : stimuli) {
    if (s.ts > sc.horizon) break;
    run_timers_until(s.ts);
    if (s.kind != UeStimulus::Kind::kData) continue;
    if (s.paging && ue.rrc == RrcState::kIdle) {
      out.events.push_back(
          SignalingEvent{s.ts, ue.ue_id, SignalingKind::kPaging, ue.cell_id, sc.rrc.cost(SignalingKind::kPaging)});
    }
    apply(DataArrival{s.ts, s.bytes});
  }
  run_timers_until(sc.horizon);
  return out;
}

}  // namespace

std::uint64_t TraceSet::total_signaling_messages() const {
  std::uint64_t total = 0;
  for (const auto& e : signaling) total += static_cast<std::uint64_t>(e.cost);
  return total;
}

TraceSet run(const Scenario& scenario) {
  scenario.validate();
  TraceSet trace;
  trace.horizon = scenario.horizon;

  struct Tagged {
    SignalingEvent event;
    std::size_t ue_index;
    std::size_t seq;
  };
  struct TaggedSession {
    SessionRecord session;
    std::size_t ue_index;
    std::size_t seq;
  };
  std::vector<Tagged> events;
  std::vector<TaggedSession> sessions;
  for (std::size_t i = 0; i < scenario.ues.size(); ++i) {
    UeOutput ue = simulate_ue(scenario, i);
    for (std::size_t k = 0; k < ue.events.size(); ++k) events.push_back(Tagged{std::move(ue.events[k]), i, k});
    for (std::size_t k = 0; k < ue.sessions.size(); ++k) {
      if (ue.sessions[k].end_ts <= scenario.horizon) sessions.push_back(TaggedSession{std::move(ue.sessions[k]), i, k});
    }
  }
  std::sort(events.begin(), events.end(), [](const Tagged& a, const Tagged& b) {
    if (a.event.ts != b.event.ts) return a.event.ts < b.event.ts;
    if (a.ue_index != b.ue_index) return a.ue_index < b.ue_index;
    return a.seq < b.seq;
  });
  std::sort(sessions.begin(), sessions.end(), [](const TaggedSession& a, const TaggedSession& b) {
    if (a.session.end_ts != b.session.end_ts) return a.session.end_ts < b.session.end_ts;
    if (a.session.start_ts != b.session.start_ts) return a.session.start_ts < b.session.start_ts;
    if (a.ue_index != b.ue_index) return a.ue_index < b.ue_index;
    return a.seq < b.seq;
  });

  trace.signaling.reserve(events.size());
  for (auto& t : events) trace.signaling.push_back(std::move(t.event));
  trace.cdrs.reserve(sessions.size());
  for (std::size_t k = 0; k < sessions.size(); ++k) {
    trace.cdrs.push_back(emit_cdr(sessions[k].session, scenario.cdr_hash_key, scenario.tariffs, k + 1));
  }

  // Every message of every event is offered to the station its kind routes to.
  std::vector<std::vector<Message>> arrivals(scenario.stations.size());
  std::uint64_t seq = 0;
  for (const auto& e : trace.signaling) {
    const std::size_t station = scenario.station_index(scenario.routing.at(e.kind));
    for (int m = 0; m < e.cost; ++m) arrivals[station].push_back(Message{e.ts, seq++});
  }

  for (std::size_t s = 0; s < scenario.stations.size(); ++s) {
    QueueStation station = scenario.stations[s];
    StationStats stats;
    stats.station_id = station.station_id;
    stats.service_rate = station.service_rate;
    std::span<const Message> pending(arrivals[s]);
    for (std::size_t k = 1;; ++k) {
      const double until = std::min(scenario.horizon, static_cast<double>(k) * scenario.stats_interval);
      std::size_t n = 0;
      while (n < pending.size() && pending[n].ts <= until) ++n;
      const double area_before = station.area_under_n;
      const double clock_before = station.clock;
      auto advanced = station_advance(std::move(station), pending.first(n), until, scenario.seed);
      station = std::move(advanced.station);
      pending = pending.subspan(n);
      const double span = station.clock - clock_before;
      stats.series.push_back(StationSample{until, span > 0 ? (station.area_under_n - area_before) / span : 0.0,
                                           station.queue.size(), station.served_count});
      if (until >= scenario.horizon) break;
    }
    stats.arrivals = station.arrival_count;
    stats.served = station.served_count;
    stats.time_average_occupancy = station.time_average_occupancy();
    stats.mean_sojourn = station.mean_sojourn();
    trace.stations.push_back(std::move(stats));
  }
  return trace;
}

}  // namespace nemesys::netsim
