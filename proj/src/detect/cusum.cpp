#include "nemesys/detect/cusum.hpp"

#include <algorithm>
#include <vector>

#include "nemesys/common/error.hpp"
#include "nemesys/common/rng.hpp"

namespace nemesys::detect {

std::string_view to_string(DetectorKind kind) {
  return kind == DetectorKind::kCusum ? "CUSUM" : "RNN";
}

double DetectionVerdict::normalized() const {
  if (detector == DetectorKind::kRnn) return std::clamp(score, 0.0, 1.0);
  if (threshold <= 0) return 0.0;
  return std::clamp(score / threshold, 0.0, 1.0);
}

void CusumState::validate() const {
  if (!(lambda0 > 0) || !(lambda1 > lambda0)) {
    throw Error(ErrorCode::kInvalidArgument, "CUSUM needs lambda1 > lambda0 > 0");
  }
  if (!(threshold_h > 0)) throw Error(ErrorCode::kInvalidArgument, "CUSUM threshold must be positive");
}

std::pair<CusumState, DetectionVerdict> cusum_update(CusumState state, double x) {
  if (!(x > 0)) {
    throw Error(ErrorCode::kNonPositiveObservation, "inter-event time must be positive, got " + std::to_string(x));
  }
  state.validate();
  const double s = std::max(0.0, state.s + cusum_increment(state.lambda0, state.lambda1, x));
  ++state.n_obs;
  DetectionVerdict verdict;
  verdict.detector = DetectorKind::kCusum;
  verdict.score = s;
  verdict.threshold = state.threshold_h;
  verdict.alarmed = s >= state.threshold_h;
  if (verdict.alarmed) {
    state.s = 0.0;
    state.alarmed_at = state.n_obs;
  } else {
    state.s = s;
  }
  return {state, verdict};
}

namespace {

std::uint64_t count_alarms(const std::vector<double>& xs, double lambda0, double lambda1, double h,
                           std::uint64_t stop_after) {
  const double a = std::log(lambda1 / lambda0), b = lambda1 - lambda0;
  double s = 0.0;
  std::uint64_t alarms = 0;
  for (double x : xs) {
    s = std::max(0.0, s + a - b * x);
    if (s >= h) {
      s = 0.0;
      if (++alarms > stop_after) break;
    }
  }
  return alarms;
}

}  // namespace

double calibrate_threshold(double lambda0, double lambda1, double target_rate, std::uint64_t n_mc, std::uint64_t seed) {
  CusumState{lambda0, lambda1, 1.0}.validate();
  if (!(target_rate > 0) || target_rate > 0.1) {
    throw Error(ErrorCode::kInvalidArgument, "target false-alarm rate must lie in (0, 0.1]");
  }
  if (static_cast<double>(n_mc) < 10.0 / target_rate) {
    throw Error(ErrorCode::kInsufficientSamples,
                "n_mc=" + std::to_string(n_mc) + " is below 10/target=" + std::to_string(10.0 / target_rate));
  }
  RngStream rng(seed, "cusum/calibrate");
  std::vector<double> xs(n_mc);
  for (auto& x : xs) x = rng.exponential(lambda0);
  const auto allowed = static_cast<std::uint64_t>(std::floor(target_rate * static_cast<double>(n_mc)));
  for (int step = 1; step <= 200; ++step) {
    const double h = 0.25 * step;
    if (count_alarms(xs, lambda0, lambda1, h, allowed) <= allowed) return h;
  }
  throw Error(ErrorCode::kNoConvergence, "no threshold up to 50 meets the target false-alarm rate");
}

double measure_alarm_rate(double lambda0, double lambda1, double h, double rate, std::uint64_t n, std::uint64_t seed) {
  RngStream rng(seed, "cusum/measure");
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.exponential(rate);
  const auto alarms = count_alarms(xs, lambda0, lambda1, h, n);
  return n == 0 ? 0.0 : static_cast<double>(alarms) / static_cast<double>(n);
}

}  // namespace nemesys::detect
