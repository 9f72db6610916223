#include "nemesys/cli/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "nemesys/common/error.hpp"
#include "nemesys/common/io.hpp"
#include "nemesys/dci/aggregate.hpp"
#include "nemesys/dci/cluster.hpp"
#include "nemesys/dci/enrich.hpp"
#include "nemesys/dci/store.hpp"
#include "nemesys/detect/dataset.hpp"
#include "nemesys/detect/pipeline.hpp"
#include "nemesys/honeynode/honeynode.hpp"
#include "nemesys/netsim/scenario.hpp"
#include "nemesys/netsim/trace_io.hpp"
#include "nemesys/service/service.hpp"

namespace nemesys::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const std::string kVersion = std::string("nemesys ") + NEMESYS_VERSION + " (compiler " + __VERSION__ + ", C++20)";

json load_json(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedConfig, path.string() + ": " + ex.what());
  }
}

std::string jsonl(const std::vector<ordered_json>& docs) {
  std::string text;
  for (const auto& d : docs) text += d.dump() + "\n";
  return text;
}

// Horizon of a simulated run: truth.json next to the events when present,
// otherwise the last event time rounded up to a whole second.
double infer_horizon(const fs::path& events_path, const std::vector<netsim::SignalingEvent>& events) {
  const auto truth = events_path.parent_path() / "truth.json";
  if (fs::exists(truth)) return load_json(truth).at("horizon_s").get<double>();
  return events.empty() ? 0.0 : std::ceil(events.back().ts);
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  json cfg = load_json(a.config);
  if (a.seed) cfg["seed"] = *a.seed;
  const auto sc = netsim::build_scenario(cfg);
  const auto trace = netsim::run(sc);
  netsim::write_run(a.out, sc, trace);
  out << "wrote " << trace.signaling.size() << " signaling events and " << trace.cdrs.size() << " CDRs to "
      << a.out << "\n";
  return 0;
}

// ---- detect -----------------------------------------------------------------

struct DetectArgs {
  std::string events, cdr, detector_config, model, out;
  std::optional<double> horizon;
  std::optional<std::uint64_t> seed;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
  const auto events = netsim::read_events_jsonl(a.events);
  std::vector<netsim::ChargingDataRecord> cdrs;
  fs::path cdr_path = a.cdr;
  if (cdr_path.empty() && fs::exists(fs::path(a.events).parent_path() / "cdr.csv")) {
    cdr_path = fs::path(a.events).parent_path() / "cdr.csv";
  }
  if (!cdr_path.empty()) cdrs = netsim::read_cdr_csv(cdr_path);

  auto cfg = a.detector_config.empty() ? detect::DetectorConfig{}
                                       : detect::detector_config_from_json(load_json(a.detector_config));
  if (a.seed) cfg.calibration.seed = *a.seed;
  std::optional<detect::RnnModel> model;
  if (!a.model.empty()) model = detect::load_model(a.model);

  detect::DetectionInput in;
  in.events = events;
  in.cdrs = cdrs;
  in.horizon = a.horizon ? *a.horizon : infer_horizon(a.events, events);
  const auto result = detect::run_detection(in, cfg, model ? &*model : nullptr);

  std::vector<ordered_json> docs;
  for (const auto& alert : result.alerts) docs.push_back(detect::to_json(alert));
  write_text_file(a.out, jsonl(docs));
  out << result.alerts.size() << " alerts (h=" << result.threshold_h << ") written to " << a.out << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> runs;
  std::string out;
  std::size_t epochs = 200;
  std::uint64_t seed = 1;
  double window = 10.0;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  std::vector<detect::LabeledWindow> data;
  for (const auto& dir : a.runs) {
    const auto events = netsim::read_events_jsonl(fs::path(dir) / "events.jsonl");
    const auto cdrs = fs::exists(fs::path(dir) / "cdr.csv") ? netsim::read_cdr_csv(fs::path(dir) / "cdr.csv")
                                                            : std::vector<netsim::ChargingDataRecord>{};
    const auto truth = load_json(fs::path(dir) / "truth.json");
    std::vector<attacks::AttackSpec> specs;
    for (const auto& doc : truth.at("attacks")) specs.push_back(attacks::attack_from_json(doc));
    std::vector<features::FeatureVector> fvs;
    for (const auto& w : features::windowize_range(events, cdrs, truth.at("horizon_s").get<double>(), a.window,
                                                   a.window, features::Scope::network())) {
      fvs.push_back(features::extract(w));
    }
    const auto labeled = detect::label_windows(fvs, specs);
    data.insert(data.end(), labeled.begin(), labeled.end());
  }
  if (data.empty()) throw Error(ErrorCode::kInsufficientData, "no labeled windows in the given runs");

  auto model = detect::default_rnn(a.seed);
  std::vector<features::FeatureVector> fvs;
  for (const auto& w : data) fvs.push_back(w.features);
  detect::fit_scaling(model, fvs);
  detect::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.seed = a.seed;
  detect::TrainReport report;
  model = detect::rnn_train(std::move(model), detect::to_samples(model, data), tc, &report);
  detect::save_model(a.out, model);
  out << "trained on " << data.size() << " windows: loss " << report.loss_history.front() << " -> "
      << report.loss_history.back() << ", training accuracy " << detect::accuracy(model, data) << "\n";
  return 0;
}

// ---- dci verbs --------------------------------------------------------------

int cmd_ingest(const std::vector<std::string>& files, const std::string& store_dir, std::ostream& out) {
  std::vector<dci::Feed> feeds;
  for (const auto& f : files) {
    dci::Feed feed{fs::path(f).filename().string(), {}};
    std::size_t line_no = 0;
    for (const auto& line : read_lines(f)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        feed.records.push_back(dci::trace_from_jsonl(line));
      } catch (const Error& e) {
        throw Error(e.code(), f + ":" + std::to_string(line_no) + ": " + e.detail());
      }
    }
    feeds.push_back(std::move(feed));
  }
  const auto merged = dci::aggregate_sources(feeds);
  dci::TraceStore store(store_dir);
  std::uint64_t first = 0, last = 0;
  for (const auto& t : merged) {
    last = store.ingest(t);
    if (first == 0) first = last;
  }
  out << "ingested " << merged.size() << " traces";
  if (!merged.empty()) out << " (ids " << first << ".." << last << ")";
  out << "\n";
  return 0;
}

int cmd_enrich(const std::string& tables_dir, const std::string& store_dir, std::ostream& out) {
  const auto tables = dci::load_tables(tables_dir);
  dci::TraceStore store(store_dir);
  std::size_t geo = 0, asn = 0, rdns = 0, os = 0;
  for (const auto& t : store.all()) {
    auto e = dci::enrich(t.base, tables);
    e.cluster_id = t.cluster_id;
    store.annotate(e);
    geo += e.geo.has_value();
    asn += e.asn.has_value();
    rdns += e.rdns.has_value();
    os += e.os_guess.has_value();
  }
  out << "enriched " << store.size() << " traces: geo " << geo << ", asn " << asn << ", rdns " << rdns
      << ", os " << os << "\n";
  return 0;
}

int cmd_query(const std::string& filter_text, const std::string& store_dir, std::ostream& out) {
  const auto filter = dci::parse_filter(filter_text);
  dci::TraceStore store(store_dir);
  for (const auto& t : store.query(filter)) out << dci::to_json(t).dump() << "\n";
  return 0;
}

int cmd_cluster(std::size_t k, std::uint64_t seed, const std::string& filter_text, const std::string& store_dir,
                std::ostream& out) {
  dci::TraceStore store(store_dir);
  const auto traces = store.query(dci::parse_filter(filter_text));
  std::vector<std::vector<double>> vectors;
  for (const auto& t : traces) vectors.push_back(dci::trace_vector(t.base));
  const auto r = dci::cluster_traces(vectors, k, seed);
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    auto e = traces[i];
    e.cluster_id = static_cast<std::uint32_t>(r.assignments[i]);
    store.annotate(e);
    ++sizes[r.assignments[i]];
  }
  ordered_json doc{{"traces", traces.size()},
                   {"k", k},
                   {"iterations", r.iterations},
                   {"objective", r.objective.back()},
                   {"sizes", sizes}};
  out << doc.dump() << "\n";
  return 0;
}

// ---- honeynode --------------------------------------------------------------

struct HoneynodeArgs {
  std::string config, events, out, log;
};

int cmd_honeynode(const HoneynodeArgs& a, std::ostream& out) {
  const auto cfg = honeynode::node_config_from_json(load_json(a.config), fs::path(a.config).parent_path());
  const auto events = honeynode::read_events_jsonl(a.events);
  honeynode::HoneyNode node{cfg.node_id, cfg.policy, {}, 0, honeynode::InfectionState::kClean};
  const honeynode::BehaviourContext ctx{&node.policy, &cfg.signatures};

  std::vector<ordered_json> forwarded;
  std::size_t signature_hits = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (honeynode::mediate(node, e) == honeynode::Decision::kForward) {
      forwarded.push_back(dci::to_json(honeynode::to_trace(e, node.node_id)));
    }
    signature_hits += honeynode::match_signature(e, cfg.signatures).has_value();
    if (!cfg.rules.empty()) {
      std::size_t from = i;
      while (from > 0 && events[from - 1].ts_ms > e.ts_ms - cfg.window_ms) --from;
      const double score = honeynode::behaviour_score(
          std::span(events).subspan(from, i - from + 1), cfg.rules, ctx);
      worst = std::max(worst, score);
      honeynode::apply_score(node, score, cfg.thresholds);
    }
  }
  write_text_file(a.out, jsonl(forwarded));
  if (!a.log.empty()) {
    std::vector<ordered_json> log;
    for (const auto& entry : node.event_log) log.push_back(honeynode::to_json(entry));
    write_text_file(a.log, jsonl(log));
  }
  ordered_json summary{{"node_id", node.node_id},
                       {"events", events.size()},
                       {"forwarded", forwarded.size()},
                       {"blocked", events.size() - forwarded.size()},
                       {"logged", node.event_log.size()},
                       {"signature_hits", signature_hits},
                       {"max_behaviour_score", worst},
                       {"infection_state", honeynode::to_string(node.infection_state)}};
  out << summary.dump() << "\n";
  return 0;
}

// ---- report -----------------------------------------------------------------

int cmd_report(const std::string& run_dir, const std::string& alerts_path, std::ostream& out) {
  const fs::path dir(run_dir);
  const auto events = netsim::read_events_jsonl(dir / "events.jsonl");
  ordered_json doc;
  doc["run"] = run_dir;
  if (fs::exists(dir / "truth.json")) doc["truth"] = load_json(dir / "truth.json");
  std::map<std::string, std::uint64_t> kinds;
  std::uint64_t messages = 0;
  for (const auto& e : events) {
    kinds[std::string(netsim::to_string(e.kind))] += static_cast<std::uint64_t>(e.cost);
    messages += static_cast<std::uint64_t>(e.cost);
  }
  doc["signaling_events"] = events.size();
  doc["signaling_messages"] = messages;
  doc["messages_by_kind"] = kinds;
  if (fs::exists(dir / "cdr.csv")) {
    const auto cdrs = netsim::read_cdr_csv(dir / "cdr.csv");
    std::map<std::string, std::int64_t> charges;
    for (const auto& c : cdrs) charges[std::string(netsim::to_string(c.service))] += c.charge_milli;
    ordered_json by_service = ordered_json::object();
    for (const auto& [k, v] : charges) by_service[k] = format_milli(v);
    doc["cdrs"] = cdrs.size();
    doc["charge_units_by_service"] = by_service;
  }
  const fs::path alerts = alerts_path.empty() ? dir / "alerts.jsonl" : fs::path(alerts_path);
  if (fs::exists(alerts)) {
    std::map<std::string, std::uint64_t> classes;
    std::optional<double> first;
    std::size_t n = 0;
    for (const auto& line : read_lines(alerts)) {
      if (line.empty()) continue;
      const auto a = detect::alert_from_json(json::parse(line));
      ++classes[std::string(detect::to_string(a.attack_class))];
      if (!first) first = a.ts;
      ++n;
    }
    doc["alerts"] = n;
    doc["alerts_by_class"] = classes;
    doc["first_alert_s"] = first ? json(*first) : json(nullptr);
  }
  out << doc.dump(2) << "\n";
  return 0;
}

// ---- serve ------------------------------------------------------------------

int cmd_serve(const std::string& config_path, const std::string& bind, double duration, std::ostream& out) {
  service::ServiceConfig cfg;
  if (!config_path.empty()) {
    cfg = service::service_config_from_json(load_json(config_path), fs::path(config_path).parent_path());
  }
  if (const char* env = std::getenv("NEMESYS_BIND"); env && *env) service::apply_bind(cfg, env);
  if (!bind.empty()) service::apply_bind(cfg, bind);

  // Handle SIGINT/SIGTERM synchronously; block them before any thread starts.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  service::Service svc(cfg);
  const int port = svc.start();
  out << "listening on " << cfg.host << ":" << port << std::endl;
  if (duration > 0) {
    timespec ts{static_cast<time_t>(duration), static_cast<long>((duration - std::floor(duration)) * 1e9)};
    sigtimedwait(&signals, nullptr, &ts);
  } else {
    int sig = 0;
    sigwait(&signals, &sig);
  }
  svc.stop();
  out << "stopped" << std::endl;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, Flavor flavor) {
  const bool full = flavor == Flavor::kFull;
  CLI::App app{full ? "Mobile core security testbed" : "Attack trace collection", full ? "nemesys" : "dci"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string store_dir = "dci_store";
  const auto add_store = [&](CLI::App* sub) {
    sub->add_option("--store", store_dir, "trace store directory")->capture_default_str();
  };

  SimulateArgs sim;
  DetectArgs det;
  TrainArgs train;
  HoneynodeArgs hn;
  std::string report_run, report_alerts, serve_config, serve_bind;
  double serve_duration = 0;
  if (full) {
    auto* s = app.add_subcommand("simulate", "run a scenario and write events.jsonl, cdr.csv, stations.json, truth.json");
    s->add_option("--config", sim.config, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", sim.out, "output directory")->required();
    s->add_option("--seed", sim.seed, "override the scenario seed");

    auto* d = app.add_subcommand("detect", "run the detectors over a signaling trace");
    d->add_option("--events", det.events, "events.jsonl")->required()->check(CLI::ExistingFile);
    d->add_option("--cdr", det.cdr, "cdr.csv (default: next to the events, if present)")->check(CLI::ExistingFile);
    d->add_option("--detector-config", det.detector_config, "detector config (JSON)")->check(CLI::ExistingFile);
    d->add_option("--model", det.model, "trained RNN model (JSON)")->check(CLI::ExistingFile);
    d->add_option("--horizon", det.horizon, "end of the trace in seconds (default: truth.json or last event)");
    d->add_option("--seed", det.seed, "calibration seed");
    d->add_option("--out", det.out, "alerts.jsonl")->required();

    auto* t = app.add_subcommand("train", "train the RNN detector on labeled simulated runs");
    t->add_option("--runs", train.runs, "run directories written by simulate")->required()->check(CLI::ExistingDirectory);
    t->add_option("--out", train.out, "model file")->required();
    t->add_option("--epochs", train.epochs)->capture_default_str();
    t->add_option("--seed", train.seed, "initial weights")->capture_default_str();
    t->add_option("--window", train.window, "window width in seconds")->capture_default_str();

    auto* h = app.add_subcommand("honeynode", "replay honeypot events through a mediating node");
    h->add_option("--config", hn.config, "node config (JSON)")->required()->check(CLI::ExistingFile);
    h->add_option("--events", hn.events, "honeypot events (JSONL)")->required()->check(CLI::ExistingFile);
    h->add_option("--out", hn.out, "forwarded traces.jsonl")->required();
    h->add_option("--log", hn.log, "wiretap log (JSONL)");

    auto* r = app.add_subcommand("report", "summarize a run directory");
    r->add_option("--run", report_run, "run directory")->required()->check(CLI::ExistingDirectory);
    r->add_option("--alerts", report_alerts, "alerts.jsonl (default: in the run directory)");

    auto* sv = app.add_subcommand("serve", "start the HTTP service");
    sv->add_option("--config", serve_config, "service config (JSON)")->check(CLI::ExistingFile);
    sv->add_option("--bind", serve_bind, "host:port, overrides NEMESYS_BIND");
    sv->add_option("--duration", serve_duration, "exit after this many seconds (0 = until signalled)");
  }

  std::vector<std::string> ingest_files;
  auto* ing = app.add_subcommand("ingest", "append traces.jsonl files to the store");
  ing->add_option("files", ingest_files, "traces.jsonl files, merged by time")->required()->check(CLI::ExistingFile);
  add_store(ing);

  std::string tables_dir;
  auto* en = app.add_subcommand("enrich", "annotate stored traces from enrichment tables");
  en->add_option("--tables", tables_dir, "directory with geo.csv, asn.csv, rdns.csv, os_sigs.csv")
      ->required()
      ->check(CLI::ExistingDirectory);
  add_store(en);

  std::string filter_text;
  auto* q = app.add_subcommand("query", "print matching traces as JSONL");
  q->add_option("filter", filter_text, "e.g. 'geo=ZZ event_kind=CONNECTION since=0 until=60000'");
  add_store(q);

  std::size_t k = 2;
  std::uint64_t cluster_seed = 1;
  std::string cluster_filter;
  auto* cl = app.add_subcommand("cluster", "k-means over stored traces, recording cluster ids");
  cl->add_option("--k", k)->required();
  cl->add_option("--seed", cluster_seed)->capture_default_str();
  cl->add_option("--filter", cluster_filter, "restrict to matching traces");
  add_store(cl);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << (app.get_name()) << ": " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string verb = sub->get_name();
    if (verb == "simulate") return cmd_simulate(sim, out);
    if (verb == "detect") return cmd_detect(det, out);
    if (verb == "train") return cmd_train(train, out);
    if (verb == "honeynode") return cmd_honeynode(hn, out);
    if (verb == "report") return cmd_report(report_run, report_alerts, out);
    if (verb == "serve") return cmd_serve(serve_config, serve_bind, serve_duration, out);
    if (verb == "ingest") return cmd_ingest(ingest_files, store_dir, out);
    if (verb == "enrich") return cmd_enrich(tables_dir, store_dir, out);
    if (verb == "query") return cmd_query(filter_text, store_dir, out);
    if (verb == "cluster") return cmd_cluster(k, cluster_seed, cluster_filter, store_dir, out);
    err << "unhandled verb " << verb << "\n";
    return 2;
  } catch (const Error& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    err << app.get_name() << ": " << e.what() << "\n";
    return 2;
  }
}

}  // namespace nemesys::cli
