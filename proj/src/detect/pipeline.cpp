#include "nemesys/detect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nemesys/common/error.hpp"

namespace nemesys::detect {

using features::FeatureVector;
using features::Scope;
using features::Window;
using netsim::ChargingDataRecord;
using netsim::ServiceKind;
using netsim::SignalingEvent;
using netsim::SignalingKind;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Inter-arrival times are exported at millisecond resolution, so
// simultaneous events are observed one tick apart.
constexpr double kMinGap = 1e-3;

[[noreturn]] void bad_config(const std::string& what) {
  throw Error(ErrorCode::kMalformedConfig, "detector config: " + what);
}

template <typename T>
T field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    bad_config(std::string("field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      bad_config("unknown field '" + key + "' in " + where);
    }
  }
}

bool is_premium(const ChargingDataRecord& c) { return c.service == ServiceKind::kPremiumSms; }

// Trailing window [end - width, end) cut from time-ordered inputs.
Window slice(std::span<const SignalingEvent> events, std::span<const ChargingDataRecord> cdrs_by_start, double end,
             double width, const Scope& scope) {
  Window w{end - width, width, scope, {}, {}};
  auto it = std::lower_bound(events.begin(), events.end(), w.start,
                             [](const SignalingEvent& e, double t) { return e.ts < t; });
  for (; it != events.end() && it->ts < end; ++it) {
    if (scope.contains(*it)) w.events.push_back(*it);
  }
  auto ct = std::lower_bound(cdrs_by_start.begin(), cdrs_by_start.end(), w.start,
                             [](const ChargingDataRecord& c, double t) { return c.start_ts < t; });
  for (; ct != cdrs_by_start.end() && ct->start_ts < end; ++ct) {
    if (scope.contains(*ct)) w.cdrs.push_back(*ct);
  }
  return w;
}

// A CUSUM fed from a stream of timestamps, window by window.
class Channel {
 public:
  Channel(std::string name, double lambda0, double lambda1, double h) : name_(std::move(name)) {
    state_.lambda0 = lambda0;
    state_.lambda1 = lambda1;
    state_.threshold_h = h;
    state_.validate();
  }

  DetectionVerdict observe(std::span<const double> stamps, double window_end, const Scope& scope) {
    DetectionVerdict verdict;
    verdict.ts = window_end;
    verdict.scope = scope;
    verdict.detector = DetectorKind::kCusum;
    verdict.channel = name_;
    verdict.threshold = state_.threshold_h;
    verdict.score = state_.s;
    for (double t : stamps) {
      auto [next, v] = cusum_update(state_, std::max(kMinGap, t - last_));
      state_ = next;
      last_ = t;
      if (v.alarmed && !verdict.alarmed) {
        verdict.alarmed = true;
        verdict.score = v.score;
      } else if (v.alarmed == verdict.alarmed) {
        verdict.score = std::max(verdict.score, v.score);
      }
    }
    return verdict;
  }

 private:
  std::string name_;
  CusumState state_;
  double last_ = 0.0;
};

}  // namespace

DetectorConfig detector_config_from_json(const json& doc) {
  if (!doc.is_object()) bad_config("expected a JSON object");
  reject_unknown(doc,
                 {"window_s", "stride_s", "classify_window_s", "baseline_window_s", "lambda0", "lambda1_factor",
                  "threshold_h", "calibration", "premium_channel", "rnn_threshold", "fusion", "classifier", "scopes"},
                 "detector config");
  DetectorConfig c;
  c.window = field(doc, "window_s", c.window);
  c.stride = field(doc, "stride_s", c.stride);
  c.classify_window = field(doc, "classify_window_s", c.classify_window);
  c.baseline_window = field(doc, "baseline_window_s", c.baseline_window);
  if (doc.contains("lambda0")) c.lambda0 = field(doc, "lambda0", 0.0);
  c.lambda1_factor = field(doc, "lambda1_factor", c.lambda1_factor);
  if (doc.contains("threshold_h")) c.threshold_h = field(doc, "threshold_h", 0.0);
  if (doc.contains("calibration")) {
    const auto& cal = doc.at("calibration");
    if (!cal.is_object()) bad_config("calibration must be an object");
    reject_unknown(cal, {"target_rate", "n_mc", "seed"}, "calibration");
    c.calibration.target_rate = field(cal, "target_rate", c.calibration.target_rate);
    c.calibration.n_mc = field(cal, "n_mc", c.calibration.n_mc);
    c.calibration.seed = field(cal, "seed", c.calibration.seed);
  }
  c.premium_channel = field(doc, "premium_channel", c.premium_channel);
  c.rnn_threshold = field(doc, "rnn_threshold", c.rnn_threshold);
  const auto fusion = field<std::string>(doc, "fusion", "any");
  if (fusion == "any") {
    c.fusion = FusionPolicy::kAny;
  } else if (fusion == "all") {
    c.fusion = FusionPolicy::kAll;
  } else {
    bad_config("fusion must be \"any\" or \"all\"");
  }
  if (doc.contains("classifier")) {
    const auto& cl = doc.at("classifier");
    if (!cl.is_object()) bad_config("classifier must be an object");
    reject_unknown(cl, {"ratio_tolerance", "promote_factor", "data_fraction", "botnet_ue_quota", "fraud_factor"},
                   "classifier");
    auto& k = c.classifier;
    k.ratio_tolerance = field(cl, "ratio_tolerance", k.ratio_tolerance);
    k.promote_factor = field(cl, "promote_factor", k.promote_factor);
    k.data_fraction = field(cl, "data_fraction", k.data_fraction);
    k.botnet_ue_quota = field(cl, "botnet_ue_quota", k.botnet_ue_quota);
    k.fraud_factor = field(cl, "fraud_factor", k.fraud_factor);
  }
  if (doc.contains("scopes")) {
    c.scopes.clear();
    for (const auto& s : field(doc, "scopes", std::vector<std::string>{})) {
      try {
        c.scopes.push_back(features::parse_scope(s));
      } catch (const Error&) {
        bad_config("bad scope '" + s + "'");
      }
    }
    if (c.scopes.empty()) bad_config("scopes must not be empty");
  }
  if (!(c.window > 0) || !(c.stride > 0) || !(c.classify_window > 0)) bad_config("windows must be positive");
  if (!(c.lambda1_factor > 1)) bad_config("lambda1_factor must exceed 1");
  if (c.lambda0 && !(*c.lambda0 > 0)) bad_config("lambda0 must be positive");
  if (c.threshold_h && !(*c.threshold_h > 0)) bad_config("threshold_h must be positive");
  return c;
}

ordered_json to_json(const DetectorConfig& c) {
  ordered_json doc;
  doc["window_s"] = c.window;
  doc["stride_s"] = c.stride;
  doc["classify_window_s"] = c.classify_window;
  doc["baseline_window_s"] = c.baseline_window;
  if (c.lambda0) doc["lambda0"] = *c.lambda0;
  doc["lambda1_factor"] = c.lambda1_factor;
  if (c.threshold_h) doc["threshold_h"] = *c.threshold_h;
  doc["calibration"] = ordered_json{{"target_rate", c.calibration.target_rate},
                                    {"n_mc", c.calibration.n_mc},
                                    {"seed", c.calibration.seed}};
  doc["premium_channel"] = c.premium_channel;
  doc["rnn_threshold"] = c.rnn_threshold;
  doc["fusion"] = c.fusion == FusionPolicy::kAny ? "any" : "all";
  doc["classifier"] = ordered_json{{"ratio_tolerance", c.classifier.ratio_tolerance},
                                   {"promote_factor", c.classifier.promote_factor},
                                   {"data_fraction", c.classifier.data_fraction},
                                   {"botnet_ue_quota", c.classifier.botnet_ue_quota},
                                   {"fraud_factor", c.classifier.fraud_factor}};
  ordered_json scopes = ordered_json::array();
  for (const auto& s : c.scopes) scopes.push_back(features::to_string(s));
  doc["scopes"] = std::move(scopes);
  return doc;
}

Baseline estimate_baseline(std::span<const SignalingEvent> events, std::span<const ChargingDataRecord> cdrs, double t0,
                           double t1, const Scope& scope, std::int64_t premium_milli_per_message) {
  if (!(t1 > t0)) throw Error(ErrorCode::kInsufficientData, "baseline span must be positive");
  Baseline b;
  b.duration = t1 - t0;
  double promotes = 0, premium = 0, charge = 0;
  for (const auto& e : events) {
    if (e.ts >= t0 && e.ts < t1 && e.kind == SignalingKind::kPromoteI2F && scope.contains(e)) promotes += 1;
  }
  for (const auto& c : cdrs) {
    if (c.start_ts >= t0 && c.start_ts < t1 && is_premium(c) && scope.contains(c)) {
      premium += 1;
      charge += static_cast<double>(c.charge_milli) / 1000.0;
    }
  }
  b.promote_rate = std::max(promotes, 1.0) / b.duration;
  b.premium_rate = std::max(premium, 1.0) / b.duration;
  b.premium_charge_rate = std::max(charge, static_cast<double>(premium_milli_per_message) / 1000.0) / b.duration;
  return b;
}

DetectionResult run_detection(const DetectionInput& in, const DetectorConfig& config, const RnnModel* model) {
  for (std::size_t i = 1; i < in.events.size(); ++i) {
    if (in.events[i].ts < in.events[i - 1].ts) throw Error(ErrorCode::kUnorderedStream, "signaling events out of order");
  }
  DetectionResult result;
  result.threshold_h = config.threshold_h
                           ? *config.threshold_h
                           : calibrate_threshold(1.0, config.lambda1_factor, config.calibration.target_rate,
                                                 config.calibration.n_mc, config.calibration.seed);

  std::vector<ChargingDataRecord> cdrs(in.cdrs.begin(), in.cdrs.end());
  std::stable_sort(cdrs.begin(), cdrs.end(),
                   [](const ChargingDataRecord& a, const ChargingDataRecord& b) { return a.start_ts < b.start_ts; });

  const bool external_baseline = in.baseline_horizon > 0;
  struct Pending {
    Alert alert;
    std::size_t scope_rank;
  };
  std::vector<Pending> pending;

  for (std::size_t rank = 0; rank < config.scopes.size(); ++rank) {
    const Scope& scope = config.scopes[rank];
    ScopeReport report;
    report.scope = scope;
    report.baseline = external_baseline
                          ? estimate_baseline(in.baseline_events, in.baseline_cdrs, 0.0, in.baseline_horizon, scope)
                          : estimate_baseline(in.events, cdrs, 0.0, std::min(config.baseline_window, in.horizon), scope);
    const double lambda0 = config.lambda0.value_or(report.baseline.promote_rate);
    Channel promote("PROMOTE_I2F", lambda0, config.lambda1_factor * lambda0, result.threshold_h);
    Channel premium("PREMIUM_SMS", report.baseline.premium_rate, config.lambda1_factor * report.baseline.premium_rate,
                    result.threshold_h);

    for (const auto& w : features::windowize_range(in.events, cdrs, in.horizon, config.window, config.stride, scope)) {
      std::vector<DetectionVerdict> verdicts;
      std::vector<double> stamps;
      for (const auto& e : w.events) {
        if (e.kind == SignalingKind::kPromoteI2F) stamps.push_back(e.ts);
      }
      verdicts.push_back(promote.observe(stamps, w.end(), scope));
      if (config.premium_channel) {
        stamps.clear();
        for (const auto& c : w.cdrs) {
          if (is_premium(c)) stamps.push_back(c.start_ts);
        }
        verdicts.push_back(premium.observe(stamps, w.end(), scope));
      }
      FeatureVector fv = features::extract(w);
      if (model) {
        DetectionVerdict v;
        v.ts = w.end();
        v.scope = scope;
        v.detector = DetectorKind::kRnn;
        v.channel = "features";
        v.score = rnn_attack_score(*model, fv);
        v.threshold = config.rnn_threshold;
        v.alarmed = v.score >= config.rnn_threshold;
        verdicts.push_back(v);
      }
      const bool any = std::any_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.alarmed; });
      if (any) {
        const auto context = features::extract(
            slice(in.events, cdrs, w.end(), std::max(config.classify_window, config.window), scope));
        if (auto alert = fuse(verdicts, context, report.baseline, config.classifier, config.fusion)) {
          pending.push_back(Pending{std::move(*alert), rank});
        }
      }
      report.features.push_back(std::move(fv));
      report.verdicts.push_back(std::move(verdicts));
    }
    result.scopes.push_back(std::move(report));
  }

  std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    if (a.alert.ts != b.alert.ts) return a.alert.ts < b.alert.ts;
    return a.scope_rank < b.scope_rank;
  });
  std::uint64_t id = 0;
  for (auto& p : pending) {
    p.alert.alert_id = ++id;
    result.alerts.push_back(std::move(p.alert));
  }
  return result;
}

}  // namespace nemesys::detect
