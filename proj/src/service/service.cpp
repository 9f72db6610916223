#include "nemesys/service/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "nemesys/attacks/attack_spec.hpp"
#include "nemesys/common/error.hpp"
#include "nemesys/netsim/scenario.hpp"
#include "nemesys/netsim/trace_io.hpp"

namespace nemesys::service {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";

[[noreturn]] void bad_config(const std::string& msg) {
  throw Error(ErrorCode::kMalformedConfig, "service config: " + msg);
}

// Request-level failure carrying its HTTP status.
struct HttpError {
  int status;
  std::string code;
  std::string message;
};

void send(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const HttpError& e) {
  send(res, e.status, ordered_json{{"error", e.code}, {"message", e.message}});
}

// Runs a handler, turning exceptions into error documents.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const HttpError& e) {
    send_error(res, e);
  } catch (const Error& e) {
    const int status = is_validation_error(e.code()) ? 400 : 500;
    send_error(res, {status, std::string(to_string(e.code())), e.detail()});
  } catch (const std::exception& e) {
    send_error(res, {500, "Internal", e.what()});
  }
}

json parse_body(const httplib::Request& req) {
  try {
    json doc = json::parse(req.body);
    if (!doc.is_object()) throw HttpError{400, "MalformedRequest", "body must be a JSON object"};
    return doc;
  } catch (const json::exception& ex) {
    throw HttpError{400, "MalformedRequest", ex.what()};
  }
}

template <typename T>
T param_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || end != value.data() + value.size()) {
    throw HttpError{400, "MalformedFilter", "bad value for " + key + ": '" + value + "'"};
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> params_of(const httplib::Request& req) {
  return {req.params.begin(), req.params.end()};
}

ordered_json alerts_response(const AlertHub& hub, const httplib::Request& req) {
  std::optional<double> since, until;
  std::optional<detect::AttackClass> cls;
  std::optional<features::Scope> scope;
  std::optional<bool> acked;
  std::uint64_t after_id = 0;
  std::optional<std::size_t> limit;
  std::set<std::string> seen;
  for (const auto& [key, value] : req.params) {
    if (!seen.insert(key).second) throw HttpError{400, "MalformedFilter", "key '" + key + "' given twice"};
    if (key == "since") {
      since = param_number<double>(key, value);
    } else if (key == "until") {
      until = param_number<double>(key, value);
    } else if (key == "class") {
      cls = detect::parse_attack_class(value);
      if (!cls) throw HttpError{400, "MalformedFilter", "unknown class '" + value + "'"};
    } else if (key == "scope") {
      scope = features::parse_scope(value);
    } else if (key == "acked") {
      if (value != "true" && value != "false") throw HttpError{400, "MalformedFilter", "acked must be true or false"};
      acked = value == "true";
    } else if (key == "after_id") {
      after_id = param_number<std::uint64_t>(key, value);
    } else if (key == "limit") {
      limit = param_number<std::size_t>(key, value);
    } else {
      throw HttpError{400, "MalformedFilter", "unknown key '" + key + "'"};
    }
  }
  ordered_json out = ordered_json::array();
  for (const auto& a : hub.all()) {
    if (limit && out.size() >= *limit) break;
    if (a.alert_id <= after_id) continue;
    if (since && a.ts < *since) continue;
    if (until && a.ts >= *until) continue;
    if (cls && a.attack_class != *cls) continue;
    if (scope && !(a.scope == *scope)) continue;
    if (acked && a.acked != *acked) continue;
    out.push_back(detect::to_json(a));
  }
  return out;
}

ordered_json network_stats(const RunSession& run, double bucket) {
  const auto& trace = *run.trace;
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> by_kind;  // events, messages
  const auto buckets = static_cast<std::size_t>(std::ceil(trace.horizon / bucket));
  std::vector<std::uint64_t> timeline(std::max<std::size_t>(buckets, 1), 0);
  std::uint64_t messages = 0;
  for (const auto& e : trace.signaling) {
    auto& k = by_kind[std::string(netsim::to_string(e.kind))];
    ++k.first;
    k.second += static_cast<std::uint64_t>(e.cost);
    messages += static_cast<std::uint64_t>(e.cost);
    const auto b = std::min(timeline.size() - 1, static_cast<std::size_t>(e.ts / bucket));
    timeline[b] += static_cast<std::uint64_t>(e.cost);
  }
  ordered_json kinds = ordered_json::object();
  for (const auto& [name, counts] : by_kind) kinds[name] = {{"events", counts.first}, {"messages", counts.second}};
  ordered_json series = ordered_json::array();
  for (std::size_t i = 0; i < timeline.size(); ++i) {
    series.push_back({{"t", static_cast<double>(i) * bucket}, {"messages", timeline[i]}});
  }
  ordered_json doc;
  doc["run_id"] = run.run_id;
  doc["horizon_s"] = trace.horizon;
  doc["events"] = trace.signaling.size();
  doc["messages"] = messages;
  doc["cdrs"] = trace.cdrs.size();
  doc["by_kind"] = kinds;
  doc["bucket_s"] = bucket;
  doc["timeline"] = series;
  doc["stations"] = netsim::stations_to_json(trace.stations);
  return doc;
}

}  // namespace

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kIdle:
      return "IDLE";
    case RunStatus::kRunning:
      return "RUNNING";
    case RunStatus::kDone:
      return "DONE";
  }
  return "?";
}

ordered_json to_json(const RunSession& run) {
  ordered_json doc;
  doc["run_id"] = run.run_id;
  doc["status"] = to_string(run.status);
  doc["horizon_s"] = run.scenario.value("horizon_s", json(nullptr));
  doc["attacks"] = run.scenario.contains("attacks") ? run.scenario["attacks"].size() : 0;
  if (run.trace) {
    doc["events"] = run.trace->signaling.size();
    doc["cdrs"] = run.trace->cdrs.size();
  }
  doc["alerts"] = run.alerts;
  if (!run.error.empty()) doc["error"] = run.error;
  return doc;
}

void apply_bind(ServiceConfig& config, const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0) bad_config("bind must be host:port, got '" + bind + "'");
  int port = -1;
  const auto text = bind.substr(colon + 1);
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
  if (ec != std::errc{} || end != text.data() + text.size() || port < 0 || port > 65535) {
    bad_config("bad port in '" + bind + "'");
  }
  config.host = bind.substr(0, colon);
  config.port = port;
}

ServiceConfig service_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  ServiceConfig c;
  if (!doc.is_object()) bad_config("expected an object");
  const auto resolve = [&](const json& v) {
    const std::filesystem::path p = v.get<std::string>();
    return p.is_absolute() ? p : base_dir / p;
  };
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "bind") {
        apply_bind(c, value.get<std::string>());
      } else if (key == "store_dir") {
        c.store_dir = resolve(value);
      } else if (key == "static_dir") {
        c.static_dir = resolve(value);
      } else if (key == "detector") {
        c.detector = detect::detector_config_from_json(value);
      } else if (key == "replay") {
        c.replay = value.get<std::size_t>();
      } else if (key == "stats_bucket_s") {
        c.stats_bucket = value.get<double>();
        if (!(c.stats_bucket > 0)) bad_config("stats_bucket_s must be positive");
      } else {
        bad_config("unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& ex) {
    bad_config(ex.what());
  }
  return c;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)), hub_(config_.replay), server_(std::make_unique<httplib::Server>()) {
  store_ = config_.store_dir ? std::make_unique<dci::TraceStore>(*config_.store_dir) : std::make_unique<dci::TraceStore>();
  install_routes();
  worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() { stop(); }

RunSession* Service::find_run(const std::string& run_id) {
  if (run_id.size() < 2 || run_id[0] != 'r') return nullptr;
  std::size_t n = 0;
  const auto [end, ec] = std::from_chars(run_id.data() + 1, run_id.data() + run_id.size(), n);
  if (ec != std::errc{} || end != run_id.data() + run_id.size() || n == 0 || n > runs_.size()) return nullptr;
  return &runs_[n - 1];
}

void Service::install_routes() {
  auto& s = *server_;
  s.new_task_queue = [] { return new httplib::ThreadPool(16); };

  s.Get("/api/v1/alerts", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, alerts_response(hub_, req)); });
  });

  s.Post(R"(/api/v1/alerts/(\d+)/ack)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = param_number<std::uint64_t>("id", req.matches[1]);
      if (!hub_.ack(id)) throw HttpError{404, "UnknownAlert", "no alert " + std::to_string(id)};
      send(res, 200, detect::to_json(*hub_.get(id)));
    });
  });

  s.Get("/api/v1/traces", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto filter = dci::filter_from_pairs(params_of(req));
      ordered_json out = ordered_json::array();
      for (const auto& t : store_->query(filter)) out.push_back(dci::to_json(t));
      send(res, 200, out);
    });
  });

  s.Get("/api/v1/stats/network", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      RunSession run;
      {
        std::lock_guard lock(runs_mu_);
        if (req.has_param("run_id")) {
          const auto* found = find_run(req.get_param_value("run_id"));
          if (!found) throw HttpError{404, "UnknownRun", "no run " + req.get_param_value("run_id")};
          run = *found;
        } else {
          for (auto it = runs_.rbegin(); it != runs_.rend(); ++it) {
            if (it->trace) {
              run = *it;
              break;
            }
          }
          if (run.run_id.empty()) {
            send(res, 200, ordered_json{{"run_id", nullptr}, {"events", 0}, {"messages", 0}, {"cdrs", 0},
                                        {"by_kind", ordered_json::object()}, {"timeline", ordered_json::array()}});
            return;
          }
        }
      }
      if (!run.trace) throw HttpError{409, "RunNotFinished", run.run_id + " has no trace yet"};
      send(res, 200, network_stats(run, config_.stats_bucket));
    });
  });

  s.Get("/api/v1/sim/runs", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      ordered_json out = ordered_json::array();
      std::lock_guard lock(runs_mu_);
      for (const auto& r : runs_) out.push_back(to_json(r));
      send(res, 200, out);
    });
  });

  s.Post("/api/v1/sim/run", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      for (const auto& [key, v] : body.items()) {
        if (key != "scenario" && key != "run_id" && key != "detector" && key != "start" && key != "wait") {
          throw HttpError{400, "MalformedRequest", "unknown key '" + key + "'"};
        }
      }
      const bool start = body.value("start", true);
      const bool wait = body.value("wait", false);
      std::unique_lock lock(runs_mu_);
      if (stopping_) throw HttpError{409, "ShuttingDown", "service is stopping"};
      std::string run_id;
      if (body.contains("run_id")) {
        if (body.contains("scenario")) throw HttpError{400, "MalformedRequest", "give either run_id or scenario"};
        run_id = body["run_id"].get<std::string>();
        auto* run = find_run(run_id);
        if (!run) throw HttpError{404, "UnknownRun", "no run " + run_id};
        if (run->status != RunStatus::kIdle) {
          throw HttpError{409, "InvalidTransition", run_id + " is " + std::string(to_string(run->status))};
        }
        if (body.contains("detector")) run->detector = body["detector"];
      } else {
        if (!body.contains("scenario")) throw HttpError{400, "MalformedRequest", "missing scenario"};
        RunSession run;
        run.scenario = body["scenario"];
        netsim::build_scenario(run.scenario);  // reject bad configs up front
        if (body.contains("detector")) {
          detect::detector_config_from_json(body["detector"]);
          run.detector = body["detector"];
        }
        run.run_id = "r" + std::to_string(runs_.size() + 1);
        run_id = run.run_id;
        runs_.push_back(std::move(run));
      }
      if (start) {
        find_run(run_id)->status = RunStatus::kRunning;
        queue_.push_back(run_id);
        runs_cv_.notify_all();
      }
      if (wait && start) {
        runs_cv_.wait(lock, [&] { return stopping_ || find_run(run_id)->status == RunStatus::kDone; });
      }
      send(res, start ? 202 : 201, to_json(*find_run(run_id)));
    });
  });

  s.Post("/api/v1/sim/attack", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.contains("run_id") || !body.contains("attack")) {
        throw HttpError{400, "MalformedRequest", "body needs run_id and attack"};
      }
      std::lock_guard lock(runs_mu_);
      const auto run_id = body["run_id"].get<std::string>();
      auto* run = find_run(run_id);
      if (!run) throw HttpError{404, "UnknownRun", "no run " + run_id};
      if (run->status != RunStatus::kIdle) {
        throw HttpError{409, "InvalidTransition", run_id + " is " + std::string(to_string(run->status))};
      }
      json candidate = run->scenario;
      if (!candidate.contains("attacks")) candidate["attacks"] = json::array();
      candidate["attacks"].push_back(body["attack"]);
      netsim::build_scenario(candidate);  // validates the attack against the scenario
      run->scenario = std::move(candidate);
      send(res, 200, to_json(*run));
    });
  });

  s.Get("/api/v1/stream", [this](const httplib::Request& req, httplib::Response& res) {
    auto cursor = std::make_shared<std::uint64_t>(hub_.join_cursor());
    if (req.has_header("Last-Event-ID")) {
      try {
        *cursor = std::stoull(req.get_header_value("Last-Event-ID"));
      } catch (const std::exception&) {
      }
    }
    hub_.add_subscriber();
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [this, cursor](std::size_t, httplib::DataSink& sink) {
          const auto batch = hub_.wait_after(*cursor, std::chrono::milliseconds(500));
          if (hub_.closed()) {
            sink.done();
            return false;
          }
          if (batch.empty()) {
            const std::string ping = ": keep-alive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          for (const auto& a : batch) {
            const std::string frame = "id: " + std::to_string(a.alert_id) + "\nevent: alert\ndata: " +
                                      detect::to_json(a).dump() + "\n\n";
            if (!sink.write(frame.data(), frame.size())) return false;
            *cursor = a.alert_id;
          }
          return true;
        },
        [this](bool) { hub_.remove_subscriber(); });
  });

  if (config_.static_dir) s.set_mount_point("/", config_.static_dir->string());
}

void Service::worker_loop() {
  for (;;) {
    std::string run_id;
    {
      std::unique_lock lock(runs_mu_);
      runs_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      run_id = queue_.front();
      queue_.pop_front();
    }
    execute(run_id);
  }
}

void Service::execute(const std::string& run_id) {
  json scenario_doc;
  std::optional<json> detector_doc;
  {
    std::lock_guard lock(runs_mu_);
    const auto* run = find_run(run_id);
    scenario_doc = run->scenario;
    detector_doc = run->detector;
  }
  std::shared_ptr<const netsim::TraceSet> trace;
  std::vector<detect::Alert> alerts;
  std::string error;
  try {
    const auto sc = netsim::build_scenario(scenario_doc);
    auto t = std::make_shared<netsim::TraceSet>(netsim::run(sc));
    const auto cfg = detector_doc ? detect::detector_config_from_json(*detector_doc) : config_.detector;
    detect::DetectionInput in;
    in.events = t->signaling;
    in.cdrs = t->cdrs;
    in.horizon = sc.horizon;
    alerts = detect::run_detection(in, cfg).alerts;
    trace = std::move(t);
  } catch (const std::exception& ex) {
    error = ex.what();
  }
  for (auto& a : alerts) hub_.publish(std::move(a));
  {
    std::lock_guard lock(runs_mu_);
    auto* run = find_run(run_id);
    run->trace = trace;
    run->alerts = alerts.size();
    run->error = error;
    run->status = RunStatus::kDone;
  }
  runs_cv_.notify_all();
}

int Service::start() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ < 0) {
    throw Error(ErrorCode::kIo, "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void Service::stop() {
  std::lock_guard stop_lock(stop_mu_);
  if (stopped_) return;
  stopped_ = true;
  hub_.close();
  {
    std::lock_guard lock(runs_mu_);
    stopping_ = true;
  }
  runs_cv_.notify_all();
  server_->stop();
  if (listener_.joinable()) listener_.join();
  if (worker_.joinable()) worker_.join();
}

}  // namespace nemesys::service
