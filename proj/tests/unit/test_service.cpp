#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "nemesys/common/error.hpp"
#include "nemesys/service/service.hpp"

using namespace nemesys;
using namespace nemesys::service;
using nlohmann::json;

namespace {

json scenario() {
  std::ifstream in(std::string(NEMESYS_CONFIGS) + "/scenario.json");
  return json::parse(in);
}

ServiceConfig ephemeral() {
  ServiceConfig c;
  c.port = 0;
  return c;
}

detect::Alert alert_at(double ts) {
  detect::Alert a;
  a.ts = ts;
  a.attack_class = detect::AttackClass::kSignalingStorm;
  a.confidence = 0.9;
  return a;
}

json post(httplib::Client& cli, const std::string& path, const json& body, int& status) {
  const auto res = cli.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  status = res->status;
  return json::parse(res->body);
}

json get(httplib::Client& cli, const std::string& path, int expect = 200) {
  const auto res = cli.Get(path);
  REQUIRE(res);
  CHECK(res->status == expect);
  return json::parse(res->body);
}

// Reads SSE frames until `want` alert ids arrived.
std::vector<std::uint64_t> read_stream(int port, std::size_t want, const std::string& last_event_id = "") {
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  std::vector<std::uint64_t> ids;
  std::string buffer;
  httplib::Headers headers;
  if (!last_event_id.empty()) headers.emplace("Last-Event-ID", last_event_id);
  cli.Get("/api/v1/stream", headers, [&](const char* data, std::size_t len) {
    buffer.append(data, len);
    for (auto end = buffer.find("\n\n"); end != std::string::npos; end = buffer.find("\n\n")) {
      const auto frame = buffer.substr(0, end);
      buffer.erase(0, end + 2);
      if (frame.rfind("id: ", 0) == 0) ids.push_back(std::stoull(frame.substr(4)));
    }
    return ids.size() < want;
  });
  return ids;
}

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("empty store answers an empty alert list") {
    Service svc(ephemeral());
    const int port = svc.start();
    httplib::Client cli("127.0.0.1", port);
    const auto res = cli.Get("/api/v1/alerts?since=0");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body == "[]");
    CHECK(get(cli, "/api/v1/traces") == json::array());
    CHECK(get(cli, "/api/v1/sim/runs") == json::array());
    CHECK(get(cli, "/api/v1/stats/network")["run_id"].is_null());
    svc.stop();
  }

  TEST_CASE("attack past the horizon is a 400 WindowOutOfHorizon") {
    Service svc(ephemeral());
    httplib::Client cli("127.0.0.1", svc.start());
    auto sc = scenario();
    sc["attacks"] = json::array();
    int status = 0;
    const auto run = post(cli, "/api/v1/sim/run", {{"scenario", sc}, {"start", false}}, status);
    CHECK(status == 201);
    CHECK(run["status"] == "IDLE");
    const json attack = {{"kind", "SIGNALING_STORM"}, {"start", 1000}, {"stop", 2500}, {"bot_group", "bots"},
                         {"params", {{"ping_period", 15}}}};
    const auto err = post(cli, "/api/v1/sim/attack", {{"run_id", run["run_id"]}, {"attack", attack}}, status);
    CHECK(status == 400);
    CHECK(err["error"] == "WindowOutOfHorizon");

    json fine = attack;
    fine["stop"] = 2000;
    const auto ok = post(cli, "/api/v1/sim/attack", {{"run_id", run["run_id"]}, {"attack", fine}}, status);
    CHECK(status == 200);
    CHECK(ok["attacks"] == 1);
  }

  TEST_CASE("storm run produces SIGNALING_STORM alerts; ack is idempotent") {
    Service svc(ephemeral());
    httplib::Client cli("127.0.0.1", svc.start());
    cli.set_read_timeout(60, 0);
    int status = 0;
    const auto run = post(cli, "/api/v1/sim/run", {{"scenario", scenario()}, {"wait", true}}, status);
    CHECK(status == 202);
    CHECK(run["status"] == "DONE");
    CHECK_FALSE(run.contains("error"));

    const auto alerts = get(cli, "/api/v1/alerts");
    REQUIRE(alerts.size() > 0);
    bool storm = false;
    for (const auto& a : alerts) storm = storm || a["attack_class"] == "SIGNALING_STORM";
    CHECK(storm);
    CHECK(alerts.size() == run["alerts"].get<std::size_t>());

    const auto storms = get(cli, "/api/v1/alerts?class=SIGNALING_STORM&limit=2");
    CHECK(storms.size() == 2);
    CHECK(get(cli, "/api/v1/alerts?until=1000") == json::array());

    const auto id = alerts[0]["alert_id"].get<std::uint64_t>();
    const auto path = "/api/v1/alerts/" + std::to_string(id) + "/ack";
    const auto first = post(cli, path, json::object(), status);
    CHECK(status == 200);
    CHECK(first["acked"] == true);
    CHECK(post(cli, path, json::object(), status) == first);
    CHECK(get(cli, "/api/v1/alerts?acked=true").size() == 1);
    post(cli, "/api/v1/alerts/999999/ack", json::object(), status);
    CHECK(status == 404);

    const auto stats = get(cli, "/api/v1/stats/network");
    CHECK(stats["run_id"] == run["run_id"]);
    CHECK(stats["events"] == run["events"]);

    // Repeated GETs on a quiescent store return identical bytes.
    CHECK(cli.Get("/api/v1/alerts")->body == cli.Get("/api/v1/alerts")->body);
  }

  TEST_CASE("error statuses") {
    Service svc(ephemeral());
    httplib::Client cli("127.0.0.1", svc.start());
    cli.set_read_timeout(60, 0);
    int status = 0;
    post(cli, "/api/v1/sim/run", {{"run_id", "r7"}}, status);
    CHECK(status == 404);
    get(cli, "/api/v1/stats/network?run_id=r3", 404);
    post(cli, "/api/v1/sim/attack", {{"run_id", "r1"}, {"attack", json::object()}}, status);
    CHECK(status == 404);
    post(cli, "/api/v1/sim/run", {{"bogus", 1}}, status);
    CHECK(status == 400);
    get(cli, "/api/v1/alerts?colour=red", 400);
    get(cli, "/api/v1/alerts?class=NOPE", 400);
    get(cli, "/api/v1/traces?limit=0", 400);

    auto sc = scenario();
    sc["ue_groups"][0]["profile"] = "MIXED";
    post(cli, "/api/v1/sim/run", {{"scenario", sc}}, status);
    CHECK(status == 400);

    post(cli, "/api/v1/sim/run", {{"scenario", scenario()}, {"wait", true}}, status);
    CHECK(status == 202);
    post(cli, "/api/v1/sim/run", {{"run_id", "r1"}}, status);
    CHECK(status == 409);
    const json attack = {{"kind", "SIGNALING_STORM"}, {"start", 0}, {"stop", 10}, {"bot_group", "bots"},
                         {"params", {{"ping_period", 15}}}};
    post(cli, "/api/v1/sim/attack", {{"run_id", "r1"}, {"attack", attack}}, status);
    CHECK(status == 409);
  }

  TEST_CASE("traces route delegates to the store") {
    Service svc(ephemeral());
    dci::AttackTrace t;
    t.ts_ms = 5;
    t.source = {dci::Source::Type::kHoneynode, "h1"};
    t.event_kind = dci::TraceKind::kConnection;
    t.remote = dci::Remote{*dci::parse_ipv4("10.1.2.3"), 443};
    svc.store().ingest(t);
    t.ts_ms = 9;
    t.remote->port = 80;
    svc.store().ingest(t);
    httplib::Client cli("127.0.0.1", svc.start());
    CHECK(get(cli, "/api/v1/traces").size() == 2);
    const auto one = get(cli, "/api/v1/traces?port=80");
    REQUIRE(one.size() == 1);
    CHECK(one[0]["ts_ms"] == 9);
    CHECK(get(cli, "/api/v1/traces?after_id=1").size() == 1);
  }

  TEST_CASE("alert hub fan-out and replay window") {
    AlertHub hub(3);
    hub.publish(alert_at(1));  // nobody listening yet: stored, no error
    CHECK(hub.join_cursor() == 0);
    for (int i = 2; i <= 5; ++i) hub.publish(alert_at(i));
    CHECK(hub.join_cursor() == 2);
    const auto after = hub.wait_after(2, std::chrono::milliseconds(0));
    REQUIRE(after.size() == 3);
    CHECK(after[0].alert_id == 3);
    CHECK(hub.wait_after(5, std::chrono::milliseconds(10)).empty());
    CHECK(hub.ack(4));
    CHECK(hub.ack(4));
    CHECK_FALSE(hub.ack(6));
    hub.close();
    CHECK(hub.wait_after(5, std::chrono::seconds(5)).empty());
  }

  TEST_CASE("two stream subscribers receive the same alerts in order") {
    Service svc(ephemeral());
    const int port = svc.start();
    std::vector<std::uint64_t> a, b;
    std::thread ta([&] { a = read_stream(port, 3); });
    std::thread tb([&] { b = read_stream(port, 3); });
    while (svc.hub().subscribers() < 2) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    for (int i = 0; i < 3; ++i) svc.hub().publish(alert_at(i));
    ta.join();
    tb.join();
    CHECK(a == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(b == a);
  }

  TEST_CASE("late subscriber gets the last 100 then live alerts") {
    Service svc(ephemeral());
    const int port = svc.start();
    for (int i = 0; i < 150; ++i) svc.hub().publish(alert_at(i));
    std::vector<std::uint64_t> ids;
    std::thread t([&] { ids = read_stream(port, 101); });
    while (svc.hub().subscribers() < 1) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    svc.hub().publish(alert_at(151));
    t.join();
    REQUIRE(ids.size() == 101);
    for (std::size_t i = 0; i < ids.size(); ++i) CHECK(ids[i] == 51 + i);

    const auto resumed = read_stream(port, 3, "148");
    CHECK(resumed == std::vector<std::uint64_t>{149, 150, 151});
  }

  TEST_CASE("stop ends open streams and is idempotent") {
    Service svc(ephemeral());
    const int port = svc.start();
    std::atomic<bool> finished = false;
    std::thread t([&] {
      read_stream(port, 1);
      finished = true;
    });
    while (svc.hub().subscribers() < 1) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    const auto begin = std::chrono::steady_clock::now();
    svc.stop();
    t.join();
    CHECK(finished);
    CHECK(std::chrono::steady_clock::now() - begin < std::chrono::seconds(5));
    CHECK(svc.hub().subscribers() == 0);
    svc.stop();
  }

  TEST_CASE("config parsing") {
    const auto c = service_config_from_json(json{{"bind", "0.0.0.0:9090"}, {"store_dir", "s"}, {"replay", 10}}, "/tmp");
    CHECK(c.host == "0.0.0.0");
    CHECK(c.port == 9090);
    CHECK(*c.store_dir == std::filesystem::path("/tmp/s"));
    CHECK(c.replay == 10);
    ServiceConfig d;
    CHECK_THROWS_AS(apply_bind(d, "nohost"), Error);
    CHECK_THROWS_AS(service_config_from_json(json{{"colour", 1}}, "."), Error);
  }
}
