#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "nemesys/common/error.hpp"
#include "nemesys/netsim/cdr.hpp"
#include "nemesys/netsim/profile.hpp"
#include "nemesys/netsim/queue.hpp"
#include "nemesys/netsim/rrc.hpp"
#include "nemesys/netsim/scenario.hpp"
#include "nemesys/netsim/simulator.hpp"
#include "nemesys/netsim/trace_io.hpp"

using namespace nemesys;
using namespace nemesys::netsim;
using nlohmann::json;

namespace {

UEState ue_in(RrcState state, double last_activity = 0.0) {
  UEState ue;
  ue.ue_id = "u0001";
  ue.cell_id = "c1";
  ue.rrc = state;
  ue.last_activity_ts = last_activity;
  ue.state_since = last_activity;
  return ue;
}

// Replays each UE's transitions through an independent state tracker.
bool transitions_are_legal(const std::vector<SignalingEvent>& events) {
  std::map<std::string, RrcState> state;
  for (const auto& e : events) {
    auto& s = state.try_emplace(e.ue_id, RrcState::kIdle).first->second;
    switch (e.kind) {
      case SignalingKind::kPromoteI2F:
        if (s != RrcState::kIdle) return false;
        s = RrcState::kFach;
        break;
      case SignalingKind::kPromoteF2D:
        if (s != RrcState::kFach) return false;
        s = RrcState::kDch;
        break;
      case SignalingKind::kDemoteD2F:
        if (s != RrcState::kDch) return false;
        s = RrcState::kFach;
        break;
      case SignalingKind::kDemoteF2I:
        if (s != RrcState::kFach) return false;
        s = RrcState::kIdle;
        break;
      default:
        break;
    }
  }
  return true;
}

json web_config(int ues, double horizon, std::uint64_t seed) {
  return json{{"seed", seed},
              {"horizon_s", horizon},
              {"ue_groups", json::array({json{{"count", ues}, {"profile", "WEB"}}})},
              {"stations", json::array({json{{"id", "rnc"}, {"service_rate", 200.0}}})}};
}

}  // namespace

TEST_SUITE("rrc") {
  TEST_CASE("idle UE promotes to FACH on a small arrival") {
    const RrcParams params;
    const auto r = rrc_step(ue_in(RrcState::kIdle), DataArrival{1.0, 100.0}, params);
    CHECK(r.ue.rrc == RrcState::kFach);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == SignalingKind::kPromoteI2F);
    CHECK(r.events[0].cost == 3);
    CHECK(r.ue.last_activity_ts == 1.0);
  }

  TEST_CASE("DCH inactivity timer demotes to FACH") {
    RrcParams params;
    params.t_dch_inactivity = 5.0;
    const auto r = rrc_step(ue_in(RrcState::kDch, 10.0), TimerTick{16.0}, params);
    CHECK(r.ue.rrc == RrcState::kFach);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == SignalingKind::kDemoteD2F);
    CHECK(r.events[0].cost == params.demote_d2f_cost);
  }

  TEST_CASE("FACH promotes to DCH above the volume threshold") {
    const RrcParams params;
    const auto r = rrc_step(ue_in(RrcState::kFach), DataArrival{0.5, 2 * params.dch_volume_threshold}, params);
    CHECK(r.ue.rrc == RrcState::kDch);
    REQUIRE(r.events.size() == 1);
    CHECK(r.events[0].kind == SignalingKind::kPromoteF2D);
  }

  TEST_CASE("timers below their limits leave the state alone") {
    const RrcParams params;
    CHECK(rrc_step(ue_in(RrcState::kDch, 10.0), TimerTick{15.0}, params).events.empty());
    CHECK(rrc_step(ue_in(RrcState::kFach, 10.0), TimerTick{22.0}, params).events.empty());
    CHECK(rrc_step(ue_in(RrcState::kIdle, 0.0), TimerTick{1000.0}, params).events.empty());
  }

  TEST_CASE("a tick demotes one level at a time") {
    const RrcParams params;
    const auto r = rrc_step(ue_in(RrcState::kDch, 0.0), TimerTick{100.0}, params);
    CHECK(r.ue.rrc == RrcState::kFach);
    const auto r2 = rrc_step(r.ue, TimerTick{100.0 + params.t_fach_inactivity + 0.5}, params);
    CHECK(r2.ue.rrc == RrcState::kIdle);
    CHECK(r2.events.at(0).kind == SignalingKind::kDemoteF2I);
  }

  TEST_CASE("rrc_step is pure") {
    const RrcParams params;
    RngStream rng(3, "rrc-purity");
    for (int i = 0; i < 200; ++i) {
      const auto state = static_cast<RrcState>(rng.below(3));
      const UEState ue = ue_in(state, rng.uniform(0, 100));
      const RrcStimulus stim = rng.uniform() < 0.5 ? RrcStimulus{DataArrival{ue.last_activity_ts + rng.uniform(0, 5),
                                                                             rng.uniform(0, 3000)}}
                                                   : RrcStimulus{TimerTick{ue.last_activity_ts + rng.uniform(0, 30)}};
      const auto a = rrc_step(ue, stim, params);
      const auto b = rrc_step(ue, stim, params);
      CHECK(a.ue == b.ue);
      CHECK(a.events == b.events);
      for (const auto& e : a.events) {
        const bool illegal = (ue.rrc == RrcState::kIdle && e.kind == SignalingKind::kDemoteD2F) ||
                             (ue.rrc == RrcState::kDch && e.kind == SignalingKind::kPromoteI2F);
        CHECK_FALSE(illegal);
      }
    }
  }
}

TEST_SUITE("queue") {
  TEST_CASE("idle station stays idle") {
    QueueStation st;
    st.station_id = "s";
    const auto r = station_advance(st, {}, 100.0, 1);
    CHECK(r.completions.empty());
    CHECK(r.station.queue.empty());
    CHECK(r.station.area_under_n == 0.0);
    CHECK(r.station.clock == 100.0);
  }

  TEST_CASE("single arrival completes after one reproducible service draw") {
    QueueStation st;
    st.station_id = "s";
    st.service_rate = 1.0;
    const std::vector<Message> arrivals{{0.0, 7}};
    const auto a = station_advance(st, arrivals, 1e6, 42);
    const auto b = station_advance(st, arrivals, 1e6, 42);
    REQUIRE(a.completions.size() == 1);
    CHECK(a.completions[0].ts == b.completions[0].ts);
    CHECK(a.completions[0].message.seq == 7);
    RngStream oracle = RngStream::from_key(RngStream(42, "station/s").key());
    CHECK(a.completions[0].ts == oracle.exponential(1.0));
  }

  TEST_CASE("out-of-order arrivals are rejected") {
    QueueStation st;
    st.station_id = "s";
    const std::vector<Message> arrivals{{2.0, 0}, {1.0, 1}};
    CHECK_THROWS_AS(station_advance(st, arrivals, 10.0, 1), Error);
    try {
      station_advance(st, arrivals, 10.0, 1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNonMonotoneArrivals);
    }
  }

  TEST_CASE("chunked advance equals a single advance") {
    RngStream rng(9, "arrivals");
    std::vector<Message> arrivals;
    double t = 0;
    for (std::uint64_t i = 0; i < 2000; ++i) {
      t += rng.exponential(0.8);
      arrivals.push_back({t, i});
    }
    QueueStation st;
    st.station_id = "s";
    st.service_rate = 1.0;
    const auto whole = station_advance(st, arrivals, t + 50, 5);

    QueueStation chunked = st;
    std::vector<Completion> completions;
    std::span<const Message> rest(arrivals);
    for (double until = 100; ; until += 100) {
      const double u = std::min(until, t + 50);
      std::size_t n = 0;
      while (n < rest.size() && rest[n].ts <= u) ++n;
      auto r = station_advance(chunked, rest.first(n), u, 5);
      chunked = std::move(r.station);
      completions.insert(completions.end(), r.completions.begin(), r.completions.end());
      rest = rest.subspan(n);
      if (u >= t + 50) break;
    }
    REQUIRE(completions.size() == whole.completions.size());
    for (std::size_t i = 0; i < completions.size(); ++i) CHECK(completions[i].ts == whole.completions[i].ts);
    CHECK(chunked.area_under_n == doctest::Approx(whole.station.area_under_n).epsilon(1e-12));
    CHECK(chunked.served_count <= chunked.arrival_count);
  }

  TEST_CASE("M/M/1 occupancy and Little's law at 1e5 arrivals") {
    const double lambda = 0.5, mu = 1.0;
    RngStream rng(11, "mm1");
    std::vector<Message> arrivals;
    double t = 0;
    for (std::uint64_t i = 0; i < 100000; ++i) {
      t += rng.exponential(lambda);
      arrivals.push_back({t, i});
    }
    QueueStation st;
    st.station_id = "mm1";
    st.service_rate = mu;
    const auto r = station_advance(st, arrivals, t, 3);
    const double rho = lambda / mu;
    const double occupancy = r.station.time_average_occupancy();
    CHECK(occupancy == doctest::Approx(rho / (1 - rho)).epsilon(0.05));
    const double arrival_rate = static_cast<double>(r.station.arrival_count) / r.station.clock;
    CHECK(occupancy == doctest::Approx(arrival_rate * r.station.mean_sojourn()).epsilon(0.05));
  }
}

TEST_SUITE("profile") {
  TEST_CASE("profiles are deterministic per kind and seed") {
    CHECK(synth_profile(ProfileKind::kIdleHeavy, 7) == synth_profile(ProfileKind::kIdleHeavy, 7));
    CHECK_FALSE(synth_profile(ProfileKind::kIdleHeavy, 7) == synth_profile(ProfileKind::kIdleHeavy, 8));
  }

  TEST_CASE("web sessions outpace idle-heavy ones") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      CHECK(synth_profile(ProfileKind::kWeb, seed).session_rate > synth_profile(ProfileKind::kIdleHeavy, seed).session_rate);
    }
  }

  TEST_CASE("diurnal shapes have mean one") {
    for (auto kind : {ProfileKind::kWeb, ProfileKind::kMessaging, ProfileKind::kIdleHeavy, ProfileKind::kStreaming}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto p = synth_profile(kind, seed);
        double sum = 0;
        for (double w : p.diurnal_shape) sum += w;
        CHECK(std::abs(sum - 24.0) <= 1e-9);
      }
    }
  }

  TEST_CASE("unknown kinds are rejected") {
    try {
      synth_profile("GAMING", 1);
      FAIL("expected UnknownProfileKind");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnknownProfileKind);
    }
  }
}

TEST_SUITE("scenario") {
  TEST_CASE("minimal config fills defaults") {
    const auto sc = build_scenario(json{{"ue_groups", json::array({json{{"count", 1}}})},
                                        {"stations", json::array({json{{"id", "core"}}})}});
    REQUIRE(sc.ues.size() == 1);
    CHECK(sc.ues[0].rrc == RrcState::kIdle);
    CHECK(sc.stations.size() == 1);
    CHECK(sc.routing.size() == kSignalingKindCount);
    CHECK(sc.rrc == RrcParams{});
  }

  TEST_CASE("an unrouted kind is rejected") {
    json routing;
    for (auto kind : kAllSignalingKinds) {
      if (kind != SignalingKind::kPaging) routing[std::string(to_string(kind))] = "a";
    }
    const json cfg{{"stations", json::array({json{{"id", "a"}}, json{{"id", "b"}}})}, {"routing", routing}};
    try {
      build_scenario(cfg);
      FAIL("expected UnroutedEventKind");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnroutedEventKind);
      CHECK(e.detail().find("PAGING") != std::string::npos);
    }
  }

  TEST_CASE("malformed fields are named") {
    try {
      build_scenario(json{{"horizon_s", "long"}});
      FAIL("expected MalformedConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kMalformedConfig);
      CHECK(e.detail().find("horizon_s") != std::string::npos);
    }
    CHECK_THROWS_AS(build_scenario(json{{"ue_groups", json::array({json{{"count", 0}}})}}), Error);
    CHECK_THROWS_AS(build_scenario(json{{"rrc", json{{"promote_i2f_cost", 0}}}}), Error);
    CHECK_THROWS_AS(build_scenario(json{{"typo", 1}}), Error);
  }

  TEST_CASE("loading the same config twice serializes identically") {
    const auto cfg = web_config(5, 600, 3);
    CHECK(to_json(build_scenario(cfg)).dump() == to_json(build_scenario(cfg)).dump());
  }
}

TEST_SUITE("simulator") {
  TEST_CASE("a permanently idle UE never promotes") {
    json cfg = web_config(1, 3600, 1);
    cfg["ue_groups"][0]["session_rate"] = 0.0;
    const auto trace = run(build_scenario(cfg));
    for (const auto& e : trace.signaling) {
      CHECK(e.kind != SignalingKind::kPromoteI2F);
      CHECK(e.kind != SignalingKind::kPromoteF2D);
    }
  }

  TEST_CASE("runs are reproducible byte for byte") {
    const auto sc = build_scenario(web_config(20, 1800, 17));
    const auto a = run(sc);
    const auto b = run(sc);
    std::ostringstream ea, eb, ca, cb;
    write_events_jsonl(ea, a.signaling);
    write_events_jsonl(eb, b.signaling);
    write_cdr_csv(ca, a.cdrs);
    write_cdr_csv(cb, b.cdrs);
    CHECK(ea.str() == eb.str());
    CHECK(ca.str() == cb.str());
    CHECK(stations_to_json(a.stations).dump() == stations_to_json(b.stations).dump());
  }

  TEST_CASE("trace invariants hold") {
    json cfg = web_config(50, 3600, 23);
    cfg["ue_groups"].push_back(json{{"count", 20}, {"profile", "IDLE_HEAVY"}});
    cfg["ue_groups"].push_back(json{{"count", 20}, {"profile", "MESSAGING"}});
    cfg["ue_groups"].push_back(json{{"count", 5}, {"profile", "STREAMING"}});
    cfg["stations"] = json::array({json{{"id", "rnc"}, {"service_rate", 50.0}}, json{{"id", "mme"}, {"service_rate", 20.0}}});
    cfg["default_station"] = "rnc";
    cfg["routing"] = json{{"ATTACH", "mme"}, {"PAGING", "mme"}};
    const auto sc = build_scenario(cfg);
    const auto trace = run(sc);
    REQUIRE_FALSE(trace.signaling.empty());
    CHECK(transitions_are_legal(trace.signaling));
    std::uint64_t offered = 0;
    for (const auto& s : trace.stations) {
      offered += s.arrivals;
      CHECK(s.served <= s.arrivals);
    }
    CHECK(offered == trace.total_signaling_messages());
    for (std::size_t i = 0; i < trace.signaling.size(); ++i) {
      const auto& e = trace.signaling[i];
      CHECK(e.ts >= 0.0);
      CHECK(e.ts <= sc.horizon);
      CHECK(e.cost == sc.rrc.cost(e.kind));
      if (i > 0) CHECK(trace.signaling[i - 1].ts <= e.ts);
    }
    for (std::size_t i = 1; i < trace.cdrs.size(); ++i) CHECK(trace.cdrs[i - 1].record_id < trace.cdrs[i].record_id);
    for (const auto& c : trace.cdrs) {
      CHECK(c.duration >= 0.0);
      CHECK(c.charge_milli >= 0);
    }
  }

  TEST_CASE("per-UE promotions track the profile's session rate") {
    const auto sc = build_scenario(web_config(100, 3600, 5));
    const auto trace = run(sc);
    // Oracle: expected sessions per UE from the profile alone.
    const auto& profile = sc.ues[0].profile;
    const double expected = profile.session_rate * diurnal_weight_hours(profile, sc.start_hour, 0.0, sc.horizon);
    double promotes = 0;
    for (const auto& e : trace.signaling) promotes += e.kind == SignalingKind::kPromoteI2F ? 1.0 : 0.0;
    const double per_ue = promotes / 100.0;
    CHECK(per_ue >= 0.8 * expected);
    CHECK(per_ue <= 1.2 * expected);
  }
}

TEST_SUITE("cdr") {
  TEST_CASE("zero usage costs nothing") {
    SessionRecord s{"u0001", "c1", ServiceKind::kData, 10.0, 10.0, 0, 0, 0, "srv1"};
    CHECK(emit_cdr(s, "k", TariffTable{}, 1).charge_milli == 0);
  }

  TEST_CASE("anonymized ids are stable per key") {
    CHECK(anonymize_ue("k", "u0001") == anonymize_ue("k", "u0001"));
    CHECK(anonymize_ue("k", "u0001") != anonymize_ue("k2", "u0001"));
    CHECK(anonymize_ue("k", "u0001") != "u0001");
    CHECK(anonymize_ue("k", "u0001").size() == 16);
  }

  TEST_CASE("premium SMS is charged per message") {
    SessionRecord s{"u0001", "c1", ServiceKind::kPremiumSms, 1.0, 1.0, 0, 0, 3, "90091"};
    const auto cdr = emit_cdr(s, "k", TariffTable{}, 4);
    CHECK(cdr.charge_milli == 30000);
    CHECK(cdr_to_csv(cdr).find(",30.000,") != std::string::npos);
  }

  TEST_CASE("csv rows round-trip") {
    RngStream rng(2, "csv");
    for (int i = 0; i < 100; ++i) {
      ChargingDataRecord c;
      c.record_id = rng.below(1000000);
      c.ue_id = anonymize_ue("k", std::to_string(i));
      c.service = static_cast<ServiceKind>(rng.below(4));
      c.start_ts = static_cast<double>(rng.below(10000000)) / 1000.0;
      c.duration = static_cast<double>(rng.below(100000)) / 1000.0;
      c.bytes_up = rng.below(1 << 30);
      c.bytes_down = rng.below(1 << 30);
      c.peer = "srv" + std::to_string(i);
      c.charge_milli = static_cast<std::int64_t>(rng.below(1 << 30));
      c.cell_id = "c3";
      CHECK(cdr_from_csv(cdr_to_csv(c)) == c);
    }
  }
}
