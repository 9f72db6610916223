#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nemesys/netsim/types.hpp"

namespace nemesys::features {

struct Scope {
  enum class Level { kNetwork, kCell, kUe };
  Level level = Level::kNetwork;
  std::string id;  // empty for kNetwork

  static Scope network() { return {}; }
  static Scope cell(std::string id) { return {Level::kCell, std::move(id)}; }
  static Scope ue(std::string id) { return {Level::kUe, std::move(id)}; }

  bool contains(const netsim::SignalingEvent& e) const;
  bool contains(const netsim::ChargingDataRecord& c) const;

  friend bool operator==(const Scope&, const Scope&) = default;
  friend auto operator<=>(const Scope&, const Scope&) = default;
};

// "network", "cell:c1", "ue:u0001"
std::string to_string(const Scope& scope);
Scope parse_scope(const std::string& text);

struct Window {
  double start = 0.0;
  double width = 0.0;
  Scope scope;
  std::vector<netsim::SignalingEvent> events;
  std::vector<netsim::ChargingDataRecord> cdrs;

  double end() const { return start + width; }
};

/// Cuts a time-ordered event stream into windows [k*stride, k*stride + width),
/// k >= 0, keeping only events inside `scope`. Windows run contiguously from
/// the first to the last window that contains an event, empty ones included.
/// Throws UnorderedStream if timestamps decrease, InvalidArgument on
/// non-positive width or stride.
std::vector<Window> windowize(std::span<const netsim::SignalingEvent> events, double width, double stride,
                              const Scope& scope);

/// Same cut over a fixed range: every window with start in [0, t_end - width],
/// with CDRs attached by start_ts. Used by the detection pipeline so that
/// quiet stretches still produce windows.
std::vector<Window> windowize_range(std::span<const netsim::SignalingEvent> events,
                                    std::span<const netsim::ChargingDataRecord> cdrs, double t_end, double width,
                                    double stride, const Scope& scope);

struct InterEventStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double cv = 0.0;        // 0 when the mean is 0
};

/// Statistics of consecutive gaps. Throws InsufficientData for fewer than 3 timestamps.
InterEventStats inter_event_stats(std::span<const double> timestamps);

struct Autocorr {
  double value = 0.0;
  bool zero_variance = false;
};

/// Pearson correlation of the pairs (x[t], x[t + lag]). A constant series
/// yields 0 with zero_variance set. Throws SeriesTooShort if size <= lag.
Autocorr autocorr(std::span<const double> series, std::size_t lag);

struct FeatureVector {
  double window_start = 0.0;
  double window_width = 0.0;
  Scope scope;
  std::array<double, netsim::kSignalingKindCount> rate_by_kind{};  // events / s
  double total_msg_rate = 0.0;                                     // cost-weighted messages / s
  double iet_mean = 0.0;
  double iet_var = 0.0;
  double iet_cv = 0.0;
  double lag1_autocorr = 0.0;  // of per-second event counts
  double promote_demote_ratio = 1.0;
  double active_ue_count = 0.0;
  double max_per_ue_rate = 0.0;     // events / s of the busiest UE
  double premium_charge_rate = 0.0;  // premium charge units / s
  bool iet_valid = false;
  bool autocorr_valid = false;
  bool autocorr_zero_variance = false;

  double rate(netsim::SignalingKind kind) const { return rate_by_kind[static_cast<std::size_t>(kind)]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Fewer than 3 events leave the inter-event and autocorrelation features
/// at 0 with their validity flags cleared.
FeatureVector extract(const Window& window);

// Ordered, lossless JSON form used for features.jsonl.
nlohmann::ordered_json to_json(const FeatureVector& fv);
FeatureVector feature_from_json(const nlohmann::json& doc);

/// Numeric features in a fixed order, for learned detectors.
inline constexpr std::size_t kFeatureCount = netsim::kSignalingKindCount + 9;
const std::array<std::string, kFeatureCount>& feature_names();
std::array<double, kFeatureCount> to_array(const FeatureVector& fv);

}  // namespace nemesys::features
