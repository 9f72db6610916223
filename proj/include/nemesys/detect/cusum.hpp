#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>

#include "nemesys/features/features.hpp"

namespace nemesys::detect {

enum class DetectorKind { kCusum, kRnn };
std::string_view to_string(DetectorKind kind);

struct DetectionVerdict {
  double ts = 0.0;
  features::Scope scope;
  DetectorKind detector = DetectorKind::kCusum;
  double score = 0.0;      // raw: CUSUM statistic before reset, RNN output activation
  bool alarmed = false;
  double threshold = 0.0;  // alarmed implies score >= threshold
  std::string channel;     // which stream a CUSUM watched, e.g. "PROMOTE_I2F"

  /// Score on [0, 1]: min(1, s / h) for CUSUM, the output activation for RNN.
  double normalized() const;

  friend bool operator==(const DetectionVerdict&, const DetectionVerdict&) = default;
};

/// Exponential inter-event CUSUM: the likelihood ratio of an event rate
/// lambda1 against lambda0, accumulated and clamped at zero.
struct CusumState {
  double lambda0 = 1.0;
  double lambda1 = 2.0;
  double threshold_h = 5.0;
  double s = 0.0;
  std::uint64_t n_obs = 0;
  std::optional<std::uint64_t> alarmed_at;  // observation index (1-based) of the latest alarm

  void validate() const;  // InvalidArgument unless lambda1 > lambda0 > 0 and h > 0

  friend bool operator==(const CusumState&, const CusumState&) = default;
};

/// One observation of inter-event time x (> 0, else NonPositiveObservation).
/// On alarm the statistic resets to 0 and alarmed_at is set; the verdict
/// carries the pre-reset value as its score.
std::pair<CusumState, DetectionVerdict> cusum_update(CusumState state, double x);

inline double cusum_increment(double lambda0, double lambda1, double x) {
  return std::log(lambda1 / lambda0) - (lambda1 - lambda0) * x;
}

/// Monte Carlo calibration under the lambda0 model: the smallest h on the
/// grid 0.25, 0.5, ..., 50 whose empirical alarm rate per observation does
/// not exceed the target. Throws InvalidArgument for a target outside
/// (0, 0.1], InsufficientSamples when n_mc < 10 / target, NoConvergence
/// when no grid point qualifies.
double calibrate_threshold(double lambda0, double lambda1, double target_rate, std::uint64_t n_mc, std::uint64_t seed);

/// Alarms per observation over n observations drawn at `rate`, restarting after each alarm.
double measure_alarm_rate(double lambda0, double lambda1, double h, double rate, std::uint64_t n, std::uint64_t seed);

}  // namespace nemesys::detect
