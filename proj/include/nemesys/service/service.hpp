#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "nemesys/dci/store.hpp"
#include "nemesys/detect/pipeline.hpp"
#include "nemesys/netsim/simulator.hpp"
#include "nemesys/service/alert_hub.hpp"

namespace httplib {
class Server;
}

namespace nemesys::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> store_dir;  // volatile trace store when absent
  std::optional<std::filesystem::path> static_dir;  // console bundle served at /
  detect::DetectorConfig detector;
  std::size_t replay = 100;
  double stats_bucket = 10.0;  // seconds per timeline bucket in /stats/network
};

/// JSON keys: bind ("host:port"), store_dir, static_dir, detector (a detector
/// config object), replay, stats_bucket_s. Relative paths resolve against
/// `base_dir`. MalformedConfig on unknown keys.
ServiceConfig service_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// "host:port"; MalformedConfig when unparsable.
void apply_bind(ServiceConfig& config, const std::string& bind);

enum class RunStatus { kIdle, kRunning, kDone };
std::string_view to_string(RunStatus s);

struct RunSession {
  std::string run_id;
  RunStatus status = RunStatus::kIdle;
  nlohmann::json scenario;  // config document, attacks included
  std::optional<nlohmann::json> detector;
  std::string error;  // set when a started run failed
  std::shared_ptr<const netsim::TraceSet> trace;
  std::size_t alerts = 0;
};

nlohmann::ordered_json to_json(const RunSession& run);

/// HTTP front end. Routes:
///   GET  /api/v1/alerts            since, until, class, scope, acked, after_id, limit
///   POST /api/v1/alerts/{id}/ack
///   GET  /api/v1/traces            trace store filter keys, see dci::Filter
///   GET  /api/v1/stats/network     run_id (default: latest finished run)
///   GET  /api/v1/sim/runs
///   POST /api/v1/sim/run           {"scenario":{..}} creates a run, {"run_id":..} starts an idle one
///   POST /api/v1/sim/attack        {"run_id":..,"attack":{..}} adds an attack to an idle run
///   GET  /api/v1/stream            text/event-stream of alerts
/// Errors are {"error":<code>,"message":..} with 400, 404 or 409.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts serving on a background thread; returns the port.
  int start();
  /// Closes streams, stops the listener and the run worker. Idempotent.
  void stop();

  AlertHub& hub() { return hub_; }
  dci::TraceStore& store() { return *store_; }

 private:
  void install_routes();
  void worker_loop();
  void execute(const std::string& run_id);
  RunSession* find_run(const std::string& run_id);  // caller holds runs_mu_

  ServiceConfig config_;
  AlertHub hub_;
  std::unique_ptr<dci::TraceStore> store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  int port_ = -1;

  std::mutex runs_mu_;
  std::condition_variable runs_cv_;
  std::vector<RunSession> runs_;  // run "rN" at index N - 1
  std::deque<std::string> queue_;
  bool stopping_ = false;
  std::thread worker_;
  std::mutex stop_mu_;
  bool stopped_ = false;
};

}  // namespace nemesys::service
