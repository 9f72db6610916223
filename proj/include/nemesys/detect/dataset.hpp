#pragma once

#include <span>
#include <vector>

#include "nemesys/attacks/attack_spec.hpp"
#include "nemesys/detect/rnn.hpp"

namespace nemesys::detect {

struct LabeledWindow {
  features::FeatureVector features;
  double label = 0.0;  // 1 inside an attack, 0 clear of every attack
};

/// Labels windows from ground truth. Windows that straddle an attack
/// boundary are ambiguous and dropped.
std::vector<LabeledWindow> label_windows(std::span<const features::FeatureVector> windows,
                                         std::span<const attacks::AttackSpec> attacks);

/// Activations stay strictly below 1 at any stable fixed point, so a target
/// of 1 would pull a neuron onto the stability boundary. Labels map to
/// these levels instead.
inline constexpr double kTargetLow = 0.1;
inline constexpr double kTargetHigh = 0.9;

/// Scaled inputs with targets (normal, attack) = (high, low) for label 0
/// and (low, high) for label 1.
std::vector<LabeledSample> to_samples(const RnnModel& model, std::span<const LabeledWindow> windows);

/// Share of windows whose attack score falls on the labeled side of `threshold`.
double accuracy(const RnnModel& model, std::span<const LabeledWindow> windows, double threshold = 0.5);

}  // namespace nemesys::detect
