#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nemesys/features/features.hpp"

namespace nemesys::detect {

/// Random neural network. Neuron i fires at rate r_i, sending excitatory
/// spikes to j with rate w_plus(i, j) and inhibitory ones with w_minus(i, j);
/// the remainder of r_i leaves the network. Its activation solves
///   q_i = lambda_plus_i / (r_i + lambda_minus_i),
///   lambda_plus_i  = Lambda_i + sum_j q_j w_plus(j, i),
///   lambda_minus_i = lambda_i + sum_j q_j w_minus(j, i).
/// Input neurons receive Lambda_i = ext_plus_i + input_gain * x_i * r_i for a
/// feature value x_i scaled to [0, 1].
struct RnnModel {
  std::size_t n = 0;
  std::vector<double> w_plus;   // n*n, row-major: w_plus[i*n + j] is i -> j
  std::vector<double> w_minus;  // n*n
  std::vector<double> departure;  // per neuron, >= 0; r_i must end up > 0
  std::vector<double> ext_plus;   // Lambda_i without input drive
  std::vector<double> ext_minus;  // lambda_i
  double input_gain = 0.5;
  std::vector<std::size_t> inputs;   // neuron of each input slot
  std::vector<std::size_t> outputs;  // output neurons, outputs.back() signals attack
  std::vector<std::string> input_features;  // feature name per input slot
  std::vector<double> scale_min, scale_max;  // per input slot
  bool self_loops = false;  // when false, training keeps the diagonal at 0

  double wp(std::size_t i, std::size_t j) const { return w_plus[i * n + j]; }
  double wm(std::size_t i, std::size_t j) const { return w_minus[i * n + j]; }
  double rate(std::size_t i) const;  // r_i
  void validate() const;             // InvalidArgument on shape or sign errors

  friend bool operator==(const RnnModel&, const RnnModel&) = default;
};

/// Fully connected, self-loop free network over every feature, with 4 hidden
/// and 2 output neurons (normal, attack). Weights U(0, init_scale) from seed.
RnnModel default_rnn(std::uint64_t seed, double init_scale = 0.1);

/// Small random model for numerical checks: n neurons, the first n_in
/// driven by inputs, the last n_out read as outputs.
RnnModel random_rnn(std::size_t n, std::size_t n_in, std::size_t n_out, std::uint64_t seed, double density = 1.0);

/// Scales a feature vector to the model's input slots (clamped to [0, 1]).
std::vector<double> scale_inputs(const RnnModel& model, const features::FeatureVector& fv);
/// Sets per-input min/max from a dataset.
void fit_scaling(RnnModel& model, std::span<const features::FeatureVector> data);

struct FixedPoint {
  std::vector<double> q;
  double residual = 0.0;  // max_i |q_i - lambda_plus_i / (r_i + lambda_minus_i)|
  std::size_t iterations = 0;
};

/// Damped fixed-point iteration to residual <= 1e-9 (typically ~1e-14).
/// Throws NoConvergence at the iteration cap, UnstableNetwork when some q_i
/// would reach 1.
FixedPoint rnn_fixed_point(const RnnModel& model, std::span<const double> x);
FixedPoint rnn_fixed_point(const RnnModel& model, const features::FeatureVector& fv);

struct RnnGradient {
  std::vector<double> d_plus;   // dE/dw_plus, row-major
  std::vector<double> d_minus;  // dE/dw_minus
  double loss = 0.0;            // E = 1/2 sum_o (q_o - y_o)^2
  double max_q = 0.0;           // largest activation at the fixed point
};

/// Exact gradient of E at the fixed point, by the adjoint of the
/// linearized fixed-point equations (one n x n solve).
RnnGradient rnn_grad(const RnnModel& model, std::span<const double> x, std::span<const double> target);

/// Loss alone, for finite-difference checks.
double rnn_loss(const RnnModel& model, std::span<const double> x, std::span<const double> target);

struct TrainConfig {
  std::size_t epochs = 200;
  double step = 1.0;
  double min_step = 1e-12;
  std::uint64_t seed = 1;  // initial weights when training from scratch
  // Steps that push any training activation above 1 - margin are refused,
  // keeping the model clear of saturation on inputs near the training data.
  double stability_margin = 0.05;
};

struct LabeledSample {
  std::vector<double> x;       // scaled inputs
  std::vector<double> target;  // per output neuron, in [0, 1]
};

struct TrainReport {
  std::vector<double> loss_history;  // mean loss after each accepted step, starting with the initial loss
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool stopped_at_margin = false;  // ended early, pinned against the stability margin
};

/// Full-batch projected gradient descent (weights clipped at 0). A step is
/// kept only if the mean loss does not rise by more than 1e-12 and the
/// stability margin holds, else the step size halves. Once the step falls
/// below min_step training stops if the margin was the binding refusal, and
/// throws DivergedTraining otherwise.
RnnModel rnn_train(RnnModel model, std::span<const LabeledSample> data, const TrainConfig& config,
                   TrainReport* report = nullptr);

/// Attack score: activation of the last output neuron.
double rnn_attack_score(const RnnModel& model, const features::FeatureVector& fv);

nlohmann::ordered_json to_json(const RnnModel& model);
RnnModel rnn_from_json(const nlohmann::json& doc);
void save_model(const std::filesystem::path& path, const RnnModel& model);
RnnModel load_model(const std::filesystem::path& path);

}  // namespace nemesys::detect
