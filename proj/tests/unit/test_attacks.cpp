#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nemesys/attacks/inject.hpp"
#include "nemesys/common/error.hpp"
#include "nemesys/netsim/simulator.hpp"
#include "nemesys/netsim/trace_io.hpp"

using namespace nemesys;
using namespace nemesys::netsim;
using nemesys::attacks::AttackKind;
using nemesys::attacks::AttackSpec;
using nlohmann::json;

namespace {

json quiet_config(int ues, double horizon, std::uint64_t seed = 1) {
  return json{{"seed", seed},
              {"horizon_s", horizon},
              {"ue_groups", json::array({json{{"name", "quiet"}, {"count", ues}, {"profile", "WEB"}, {"session_rate", 0.0}}})}};
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kInvalidArgument;
}

std::string events_text(const TraceSet& t) {
  std::ostringstream s;
  write_events_jsonl(s, t.signaling);
  return s.str();
}

}  // namespace

TEST_SUITE("attacks") {
  TEST_CASE("storm pings land on the period grid") {
    auto sc = build_scenario(quiet_config(1, 1000));
    AttackSpec spec;
    spec.start = 100;
    spec.stop = 700;
    spec.bot_ids = {sc.ues[0].ue_id};
    sc = attacks::apply_attack(std::move(sc), spec);
    REQUIRE(sc.injected.size() == 40);
    for (std::size_t k = 0; k < sc.injected.size(); ++k) {
      CHECK(sc.injected[k].ts == doctest::Approx(100.0 + 15.0 * static_cast<double>(k)));
      CHECK(sc.injected[k].bytes == 64.0);
    }
    CHECK(sc.ues[0].infected);
  }

  TEST_CASE("a storm bot alternates promotions and demotions") {
    auto sc = build_scenario(quiet_config(1, 2000));
    AttackSpec spec;
    spec.start = 0;
    spec.stop = 2000;
    spec.bot_ids = {sc.ues[0].ue_id};
    sc = attacks::apply_attack(std::move(sc), spec);
    const auto trace = run(sc);
    std::size_t promotes = 0, demotes = 0;
    SignalingKind previous = SignalingKind::kDemoteF2I;
    for (const auto& e : trace.signaling) {
      if (e.kind == SignalingKind::kAttach) continue;
      CHECK(e.kind != SignalingKind::kPromoteF2D);
      if (e.kind == SignalingKind::kPromoteI2F) {
        CHECK(previous == SignalingKind::kDemoteF2I);
        ++promotes;
      } else if (e.kind == SignalingKind::kDemoteF2I) {
        CHECK(previous == SignalingKind::kPromoteI2F);
        ++demotes;
      }
      previous = e.kind;
    }
    std::size_t pings = 0, completed = 0;
    for (double t = 0; t < 2000.0; t += 15.0) {
      ++pings;
      if (t + sc.rrc.t_fach_inactivity + kTimerTickSlack <= 2000.0) ++completed;
    }
    CHECK(promotes == pings);
    CHECK(demotes == completed);
  }

  TEST_CASE("storm signaling rate") {
    const RrcParams params;
    CHECK(attacks::storm_signaling_rate(params, 15.0) == doctest::Approx(5.0 / 15.0));
    CHECK(code_of([&] { attacks::storm_signaling_rate(params, params.t_fach_inactivity); }) == ErrorCode::kPeriodTooShort);
  }

  TEST_CASE("ddos phases fall inside the jitter window") {
    auto sc = build_scenario(quiet_config(50, 600));
    AttackSpec spec;
    spec.kind = AttackKind::kBotnetSignalingDdos;
    spec.start = 60;
    spec.stop = 600;
    for (const auto& ue : sc.ues) spec.bot_ids.push_back(ue.ue_id);
    spec.bot_count = 30;
    spec.jitter = 0.5;
    sc = attacks::apply_attack(std::move(sc), spec);
    std::vector<double> first(50, -1.0);
    for (const auto& s : sc.injected) {
      if (first[s.ue_index] < 0) first[s.ue_index] = s.ts;
    }
    std::size_t bots = 0;
    for (std::size_t i = 0; i < 50; ++i) {
      if (first[i] < 0) {
        CHECK_FALSE(sc.ues[i].infected);
        continue;
      }
      ++bots;
      CHECK(first[i] >= 60.0);
      CHECK(first[i] < 60.0 + 0.5 * 15.0);
    }
    CHECK(bots == 30);
  }

  TEST_CASE("premium fraud volume matches the Poisson mean") {
    const double rate = 120.0, duration = 1800.0;
    const double mean = rate * duration / 3600.0;  // per bot
    double total = 0;
    const int runs = 100;
    for (int r = 0; r < runs; ++r) {
      auto sc = build_scenario(quiet_config(1, duration, static_cast<std::uint64_t>(r)));
      AttackSpec spec;
      spec.kind = AttackKind::kPremiumFraud;
      spec.start = 0;
      spec.stop = duration;
      spec.messages_per_hour = rate;
      spec.bot_ids = {sc.ues[0].ue_id};
      sc = attacks::apply_attack(std::move(sc), spec);
      for (const auto& s : sc.injected) CHECK(s.kind == Stimulus::Kind::kPremiumSms);
      total += static_cast<double>(sc.injected.size());
    }
    const double sample_mean = total / runs;
    CHECK(std::abs(sample_mean - mean) <= 3.0 * std::sqrt(mean / runs));
  }

  TEST_CASE("fraud messages become premium CDRs") {
    auto sc = build_scenario(quiet_config(1, 600));
    AttackSpec spec;
    spec.kind = AttackKind::kPremiumFraud;
    spec.start = 0;
    spec.stop = 600;
    spec.messages_per_hour = 600;
    spec.bot_ids = {sc.ues[0].ue_id};
    sc = attacks::apply_attack(std::move(sc), spec);
    const auto trace = run(sc);
    std::size_t premium = 0;
    for (const auto& c : trace.cdrs) {
      if (c.service == ServiceKind::kPremiumSms && c.peer == "90091") {
        ++premium;
        CHECK(c.charge_milli == sc.tariffs.premium_milli_per_message);
      }
    }
    CHECK(premium == sc.injected.size());
  }

  TEST_CASE("invalid attacks are rejected") {
    const auto sc = build_scenario(quiet_config(2, 1000));
    AttackSpec spec;
    spec.start = 0;
    spec.stop = 100;
    spec.bot_ids = {"nobody"};
    CHECK(code_of([&] { attacks::validate_attack(sc, spec); }) == ErrorCode::kUnknownUE);
    spec.bot_ids = {sc.ues[0].ue_id};
    spec.stop = 2000;
    CHECK(code_of([&] { attacks::validate_attack(sc, spec); }) == ErrorCode::kWindowOutOfHorizon);
    spec.start = 500;
    spec.stop = 400;
    CHECK(code_of([&] { attacks::validate_attack(sc, spec); }) == ErrorCode::kWindowOutOfHorizon);
  }

  TEST_CASE("stripping attacks restores the baseline bit for bit") {
    json base{{"seed", 77},
              {"horizon_s", 1200},
              {"ue_groups", json::array({json{{"name", "users"}, {"count", 20}, {"profile", "WEB"}},
                                         json{{"name", "bots"}, {"count", 5}, {"profile", "MESSAGING"}}})}};
    json attacked = base;
    attacked["attacks"] = json::array({json{{"kind", "SIGNALING_STORM"}, {"start", 300}, {"stop", 900}, {"bot_group", "bots"}},
                                       json{{"kind", "PREMIUM_FRAUD"}, {"start", 0}, {"stop", 1200}, {"bot_group", "bots"}}});
    const auto with = build_scenario(attacked);
    const auto without = build_scenario(base);
    CHECK(to_json(strip_attacks(with)).dump() == to_json(without).dump());
    CHECK(events_text(run(strip_attacks(with))) == events_text(run(without)));

    // Bystanders see exactly the same traffic with or without the attack.
    const auto attacked_trace = run(with);
    const auto baseline_trace = run(without);
    const auto bystander_events = [](const TraceSet& t) {
      std::vector<SignalingEvent> out;
      for (const auto& e : t.signaling) {
        if (e.ue_id < "u0020") out.push_back(e);
      }
      return out;
    };
    CHECK(bystander_events(attacked_trace) == bystander_events(baseline_trace));
  }

  TEST_CASE("attack specs round-trip through json") {
    AttackSpec spec;
    spec.kind = AttackKind::kBotnetSignalingDdos;
    spec.start = 5;
    spec.stop = 50;
    spec.bot_ids = {"u0001", "u0002"};
    spec.bot_count = 1;
    spec.jitter = 0.25;
    CHECK(attacks::attack_from_json(json::parse(attacks::to_json(spec).dump())) == spec);
    CHECK(code_of([] { attacks::attack_from_json(json{{"kind", "ZAP"}, {"start", 0}, {"stop", 1}}); }) ==
          ErrorCode::kMalformedConfig);
  }
}
