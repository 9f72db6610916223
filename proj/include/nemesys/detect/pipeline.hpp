#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "nemesys/detect/classify.hpp"
#include "nemesys/detect/rnn.hpp"

namespace nemesys::detect {

struct Calibration {
  double target_rate = 1e-4;
  std::uint64_t n_mc = 1000000;
  std::uint64_t seed = 7;
};

struct DetectorConfig {
  double window = 10.0;
  double stride = 10.0;
  double classify_window = 30.0;  // trailing span whose features feed classification
  double baseline_window = 600.0;  // attack-free lead-in used when no baseline is supplied
  std::optional<double> lambda0;   // PROMOTE_I2F events/s, overrides the baseline estimate
  double lambda1_factor = 10.0;
  std::optional<double> threshold_h;  // skips calibration when set
  Calibration calibration;
  bool premium_channel = true;
  double rnn_threshold = 0.5;
  FusionPolicy fusion = FusionPolicy::kAny;
  ClassifierConfig classifier;
  std::vector<features::Scope> scopes{features::Scope::network()};
};

/// Unknown keys and wrong types raise MalformedConfig.
DetectorConfig detector_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const DetectorConfig& config);

/// Attack-free reference rates of one scope over [t0, t1). Rates are
/// floored at one event per span so that a CUSUM can always be built.
Baseline estimate_baseline(std::span<const netsim::SignalingEvent> events,
                           std::span<const netsim::ChargingDataRecord> cdrs, double t0, double t1,
                           const features::Scope& scope, std::int64_t premium_milli_per_message = 10000);

struct ScopeReport {
  features::Scope scope;
  Baseline baseline;
  std::vector<features::FeatureVector> features;  // one per detection window
  std::vector<std::vector<DetectionVerdict>> verdicts;  // parallel to features
};

struct DetectionResult {
  double threshold_h = 0.0;
  std::vector<ScopeReport> scopes;
  std::vector<Alert> alerts;  // ordered by (ts, scope), ids from 1
};

struct DetectionInput {
  std::span<const netsim::SignalingEvent> events;  // time-ordered
  std::span<const netsim::ChargingDataRecord> cdrs;
  double horizon = 0.0;  // end of the observed span; windows end at or before it
  // Optional attack-free reference trace; when absent the lead-in
  // [0, baseline_window) of the input is used.
  std::span<const netsim::SignalingEvent> baseline_events;
  std::span<const netsim::ChargingDataRecord> baseline_cdrs;
  double baseline_horizon = 0.0;
};

/// Windows the streams, runs a CUSUM on PROMOTE_I2F inter-arrival times
/// (and one on premium CDRs) per scope, scores each window with the RNN
/// when a model is given, then fuses and classifies.
DetectionResult run_detection(const DetectionInput& input, const DetectorConfig& config,
                              const RnnModel* model = nullptr);

}  // namespace nemesys::detect
