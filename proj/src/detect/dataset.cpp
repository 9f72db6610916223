#include "nemesys/detect/dataset.hpp"

#include "nemesys/common/error.hpp"

namespace nemesys::detect {

std::vector<LabeledWindow> label_windows(std::span<const features::FeatureVector> windows,
                                         std::span<const attacks::AttackSpec> attacks) {
  std::vector<LabeledWindow> out;
  for (const auto& fv : windows) {
    const double start = fv.window_start, end = fv.window_start + fv.window_width;
    bool inside = false, touches = false;
    for (const auto& a : attacks) {
      if (start >= a.start && end <= a.stop) inside = true;
      if (start < a.stop && end > a.start) touches = true;
    }
    if (inside) {
      out.push_back({fv, 1.0});
    } else if (!touches) {
      out.push_back({fv, 0.0});
    }
  }
  return out;
}

std::vector<LabeledSample> to_samples(const RnnModel& model, std::span<const LabeledWindow> windows) {
  std::vector<LabeledSample> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    const double y = kTargetLow + (kTargetHigh - kTargetLow) * w.label;
    out.push_back({scale_inputs(model, w.features), {kTargetHigh + kTargetLow - y, y}});
  }
  return out;
}

double accuracy(const RnnModel& model, std::span<const LabeledWindow> windows, double threshold) {
  if (windows.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& w : windows) {
    try {
      const bool attack = rnn_attack_score(model, w.features) >= threshold;
      hits += attack == (w.label >= 0.5) ? 1 : 0;
    } catch (const Error& e) {
      // A window the model cannot evaluate counts as a miss.
      if (e.code() != ErrorCode::kUnstableNetwork && e.code() != ErrorCode::kNoConvergence) throw;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(windows.size());
}

}  // namespace nemesys::detect
