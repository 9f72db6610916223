#include "nemesys/detect/rnn.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "nemesys/common/error.hpp"
#include "nemesys/common/io.hpp"
#include "nemesys/common/rng.hpp"

namespace nemesys::detect {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr double kUnstableMargin = 1e-12;
constexpr double kTargetResidual = 1e-13;
constexpr double kMaxResidual = 1e-9;
constexpr std::size_t kMaxIterations = 200000;

// Lambda_i for every neuron given scaled inputs.
std::vector<double> external_plus(const RnnModel& m, std::span<const double> x, const std::vector<double>& r) {
  std::vector<double> ext = m.ext_plus;
  for (std::size_t k = 0; k < m.inputs.size(); ++k) {
    const std::size_t i = m.inputs[k];
    ext[i] += m.input_gain * x[k] * r[i];
  }
  return ext;
}

struct Drive {
  std::vector<double> plus, minus;
};

Drive drive(const RnnModel& m, const std::vector<double>& q, const std::vector<double>& ext) {
  Drive d{ext, m.ext_minus};
  for (std::size_t j = 0; j < m.n; ++j) {
    if (q[j] == 0.0) continue;
    const double* wp = &m.w_plus[j * m.n];
    const double* wm = &m.w_minus[j * m.n];
    for (std::size_t i = 0; i < m.n; ++i) {
      d.plus[i] += q[j] * wp[i];
      d.minus[i] += q[j] * wm[i];
    }
  }
  return d;
}

std::vector<double> rates(const RnnModel& m) {
  std::vector<double> r(m.n);
  for (std::size_t i = 0; i < m.n; ++i) r[i] = m.rate(i);
  return r;
}

void check_x(const RnnModel& m, std::span<const double> x) {
  if (x.size() != m.inputs.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "expected " + std::to_string(m.inputs.size()) + " inputs, got " + std::to_string(x.size()));
  }
}

}  // namespace

double RnnModel::rate(std::size_t i) const {
  double r = departure[i];
  for (std::size_t j = 0; j < n; ++j) r += w_plus[i * n + j] + w_minus[i * n + j];
  return r;
}

void RnnModel::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, "RNN model: " + what); };
  if (n == 0) fail("no neurons");
  if (w_plus.size() != n * n || w_minus.size() != n * n) fail("weight matrices must be n x n");
  if (departure.size() != n || ext_plus.size() != n || ext_minus.size() != n) fail("per-neuron vectors must have n entries");
  for (std::size_t k = 0; k < n * n; ++k) {
    if (!(w_plus[k] >= 0) || !(w_minus[k] >= 0)) fail("weights must be non-negative");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(departure[i] >= 0)) fail("departure rates must be non-negative");
    if (!(rate(i) > 0)) fail("every neuron needs a positive firing rate");
    if (!(ext_plus[i] >= 0) || !(ext_minus[i] >= 0)) fail("external rates must be non-negative");
  }
  for (auto i : inputs) {
    if (i >= n) fail("input neuron out of range");
  }
  if (outputs.empty()) fail("no output neurons");
  for (auto o : outputs) {
    if (o >= n) fail("output neuron out of range");
  }
  if (!input_features.empty() && input_features.size() != inputs.size()) fail("input_features size mismatch");
  if (scale_min.size() != scale_max.size()) fail("scaling size mismatch");
  if (!scale_min.empty() && scale_min.size() != inputs.size()) fail("scaling size mismatch");
}

RnnModel default_rnn(std::uint64_t seed, double init_scale) {
  const std::size_t n_in = features::kFeatureCount, n_hidden = 4, n_out = 2;
  RnnModel m = random_rnn(n_in + n_hidden + n_out, n_in, n_out, seed);
  RngStream rng(seed, "rnn/default");
  for (std::size_t k = 0; k < m.n * m.n; ++k) {
    m.w_plus[k] = rng.uniform(0.0, init_scale);
    m.w_minus[k] = rng.uniform(0.0, init_scale);
  }
  for (std::size_t i = 0; i < m.n; ++i) {
    m.w_plus[i * m.n + i] = 0.0;
    m.w_minus[i * m.n + i] = 0.0;
    m.departure[i] = 1.0;
    m.ext_plus[i] = 0.0;
    m.ext_minus[i] = 0.0;
  }
  const auto& names = features::feature_names();
  m.input_features.assign(names.begin(), names.end());
  m.scale_min.assign(n_in, 0.0);
  m.scale_max.assign(n_in, 1.0);
  m.self_loops = false;
  return m;
}

RnnModel random_rnn(std::size_t n, std::size_t n_in, std::size_t n_out, std::uint64_t seed, double density) {
  if (n_in + n_out > n || n_out == 0) throw Error(ErrorCode::kInvalidArgument, "bad RNN shape");
  RnnModel m;
  m.n = n;
  m.w_plus.assign(n * n, 0.0);
  m.w_minus.assign(n * n, 0.0);
  RngStream rng(seed, "rnn/random");
  for (std::size_t k = 0; k < n * n; ++k) {
    if (rng.uniform() < density) m.w_plus[k] = rng.uniform(0.0, 0.5);
    if (rng.uniform() < density) m.w_minus[k] = rng.uniform(0.0, 0.5);
  }
  m.departure.resize(n);
  m.ext_plus.resize(n);
  m.ext_minus.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    m.departure[i] = rng.uniform(0.5, 1.5);
    m.ext_plus[i] = rng.uniform(0.0, 0.2);
    m.ext_minus[i] = rng.uniform(0.0, 0.2);
  }
  for (std::size_t i = 0; i < n_in; ++i) m.inputs.push_back(i);
  for (std::size_t i = n - n_out; i < n; ++i) m.outputs.push_back(i);
  m.self_loops = true;
  return m;
}

std::vector<double> scale_inputs(const RnnModel& m, const features::FeatureVector& fv) {
  const auto values = features::to_array(fv);
  const auto& names = features::feature_names();
  std::vector<double> x(m.inputs.size(), 0.0);
  for (std::size_t k = 0; k < m.inputs.size(); ++k) {
    const auto it = std::find(names.begin(), names.end(), m.input_features.at(k));
    if (it == names.end()) throw Error(ErrorCode::kInvalidArgument, "unknown model feature " + m.input_features[k]);
    const double v = values[static_cast<std::size_t>(it - names.begin())];
    const double lo = m.scale_min.empty() ? 0.0 : m.scale_min[k];
    const double hi = m.scale_max.empty() ? 1.0 : m.scale_max[k];
    x[k] = hi > lo ? std::clamp((v - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  }
  return x;
}

void fit_scaling(RnnModel& m, std::span<const features::FeatureVector> data) {
  const auto& names = features::feature_names();
  m.scale_min.assign(m.inputs.size(), 0.0);
  m.scale_max.assign(m.inputs.size(), 0.0);
  for (std::size_t k = 0; k < m.inputs.size(); ++k) {
    const auto idx = static_cast<std::size_t>(
        std::find(names.begin(), names.end(), m.input_features.at(k)) - names.begin());
    if (idx >= names.size()) throw Error(ErrorCode::kInvalidArgument, "unknown model feature " + m.input_features[k]);
    bool first = true;
    for (const auto& fv : data) {
      const double v = features::to_array(fv)[idx];
      m.scale_min[k] = first ? v : std::min(m.scale_min[k], v);
      m.scale_max[k] = first ? v : std::max(m.scale_max[k], v);
      first = false;
    }
  }
}

FixedPoint rnn_fixed_point(const RnnModel& m, std::span<const double> x) {
  check_x(m, x);
  const auto r = rates(m);
  const auto ext = external_plus(m, x, r);
  FixedPoint fp;
  fp.q.assign(m.n, 0.0);
  std::vector<double> next(m.n);
  double alpha = 1.0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < kMaxIterations; ++it) {
    const Drive d = drive(m, fp.q, ext);
    double residual = 0.0;
    for (std::size_t i = 0; i < m.n; ++i) {
      next[i] = d.plus[i] / (r[i] + d.minus[i]);
      if (next[i] >= 1.0 - kUnstableMargin) {
        throw Error(ErrorCode::kUnstableNetwork, "neuron " + std::to_string(i) + " saturates (q >= 1)");
      }
      residual = std::max(residual, std::abs(next[i] - fp.q[i]));
    }
    fp.iterations = it;
    fp.residual = residual;
    if (residual <= kTargetResidual) return fp;
    if (residual > previous && alpha > 1.0 / 64) alpha *= 0.5;
    previous = residual;
    for (std::size_t i = 0; i < m.n; ++i) fp.q[i] += alpha * (next[i] - fp.q[i]);
  }
  if (fp.residual <= kMaxResidual) return fp;
  throw Error(ErrorCode::kNoConvergence, "fixed point residual " + std::to_string(fp.residual) + " after " +
                                             std::to_string(kMaxIterations) + " iterations");
}

FixedPoint rnn_fixed_point(const RnnModel& m, const features::FeatureVector& fv) {
  return rnn_fixed_point(m, scale_inputs(m, fv));
}

double rnn_loss(const RnnModel& m, std::span<const double> x, std::span<const double> target) {
  const auto fp = rnn_fixed_point(m, x);
  double loss = 0.0;
  for (std::size_t k = 0; k < m.outputs.size(); ++k) {
    const double e = fp.q[m.outputs[k]] - target[k];
    loss += 0.5 * e * e;
  }
  return loss;
}

// Differentiating F_i = q_i (r_i + lambda_minus_i) - lambda_plus_i = 0 gives
// A dq = -dF/dw with A_ij = D_i delta_ij - w_plus(j,i) + q_i w_minus(j,i).
// With A^T z = dE/dq, dE/dw = -z . dF/dw. A weight (u, v) raises r_u (and
// the input drive of u, if u is an input) and feeds q_u into neuron v.
RnnGradient rnn_grad(const RnnModel& m, std::span<const double> x, std::span<const double> target) {
  if (target.size() != m.outputs.size()) throw Error(ErrorCode::kInvalidArgument, "target size mismatch");
  const auto fp = rnn_fixed_point(m, x);
  const auto r = rates(m);
  const auto ext = external_plus(m, x, r);
  const Drive d = drive(m, fp.q, ext);
  const std::size_t n = m.n;
  const auto& q = fp.q;

  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = -m.wp(j, i) + q[i] * m.wm(j, i);
    }
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += r[i] + d.minus[i];
  }
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  RnnGradient g;
  for (std::size_t k = 0; k < m.outputs.size(); ++k) {
    const double diff = q[m.outputs[k]] - target[k];
    e(static_cast<Eigen::Index>(m.outputs[k])) += diff;
    g.loss += 0.5 * diff * diff;
  }
  const Eigen::VectorXd z = a.transpose().partialPivLu().solve(e);
  g.max_q = *std::max_element(q.begin(), q.end());

  std::vector<double> s(n, 0.0);  // d Lambda_u / d r_u
  for (std::size_t k = 0; k < m.inputs.size(); ++k) s[m.inputs[k]] += m.input_gain * x[k];

  g.d_plus.assign(n * n, 0.0);
  g.d_minus.assign(n * n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const double zu = z(static_cast<Eigen::Index>(u));
    const double own = zu * (s[u] - q[u]);
    for (std::size_t v = 0; v < n; ++v) {
      const double zv = z(static_cast<Eigen::Index>(v));
      g.d_plus[u * n + v] = own + zv * q[u];
      g.d_minus[u * n + v] = own - zv * q[v] * q[u];
    }
  }
  return g;
}

namespace {

struct BatchEval {
  double loss = 0.0;
  std::vector<double> d_plus, d_minus;
  double max_q = 0.0;
};

BatchEval evaluate(const RnnModel& m, std::span<const LabeledSample> data) {
  BatchEval b;
  b.d_plus.assign(m.n * m.n, 0.0);
  b.d_minus.assign(m.n * m.n, 0.0);
  for (const auto& sample : data) {
    const auto g = rnn_grad(m, sample.x, sample.target);
    b.max_q = std::max(b.max_q, g.max_q);
    b.loss += g.loss;
    for (std::size_t k = 0; k < g.d_plus.size(); ++k) {
      b.d_plus[k] += g.d_plus[k];
      b.d_minus[k] += g.d_minus[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(data.size());
  b.loss *= inv;
  for (auto& v : b.d_plus) v *= inv;
  for (auto& v : b.d_minus) v *= inv;
  return b;
}

bool frozen(const RnnModel& m, std::size_t k) { return !m.self_loops && k / m.n == k % m.n; }

}  // namespace

RnnModel rnn_train(RnnModel model, std::span<const LabeledSample> data, const TrainConfig& config,
                   TrainReport* report) {
  model.validate();
  if (data.empty()) throw Error(ErrorCode::kInvalidArgument, "empty training set");
  for (const auto& s : data) {
    check_x(model, s.x);
    if (s.target.size() != model.outputs.size()) throw Error(ErrorCode::kInvalidArgument, "target size mismatch");
    for (double y : s.target) {
      if (y < 0 || y > 1) throw Error(ErrorCode::kInvalidArgument, "targets must lie in [0, 1]");
    }
  }
  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = {};

  BatchEval current = evaluate(model, data);
  rep.loss_history.push_back(current.loss);
  double step = config.step;
  const std::size_t nn = model.n * model.n;
  // A start already inside the margin may not go deeper, but is not refused outright.
  double ceiling = std::max(1.0 - config.stability_margin, current.max_q);
  bool margin_bound = false;
  std::size_t epoch = 0;
  while (epoch < config.epochs) {
    if (step < config.min_step) {
      // Pinned against the margin: stationary under the constraint, not diverging.
      if (margin_bound) {
        rep.stopped_at_margin = true;
        break;
      }
      throw Error(ErrorCode::kDivergedTraining, "step size fell below " + std::to_string(config.min_step));
    }
    RnnModel proposal = model;
    for (std::size_t k = 0; k < nn; ++k) {
      if (frozen(model, k)) continue;
      proposal.w_plus[k] = std::max(0.0, model.w_plus[k] - step * current.d_plus[k]);
      proposal.w_minus[k] = std::max(0.0, model.w_minus[k] - step * current.d_minus[k]);
    }
    BatchEval next;
    bool ok = true;
    try {
      next = evaluate(proposal, data);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnstableNetwork && e.code() != ErrorCode::kNoConvergence) throw;
      ok = false;
    }
    margin_bound = ok && next.max_q > ceiling;
    ok = ok && !margin_bound;
    if (ok && next.loss <= current.loss + 1e-12) {
      model = std::move(proposal);
      current = std::move(next);
      ceiling = std::max(1.0 - config.stability_margin, current.max_q);
      rep.loss_history.push_back(current.loss);
      ++rep.accepted;
      ++epoch;
      step *= 1.2;
    } else {
      ++rep.rejected;
      step *= 0.5;
    }
  }
  return model;
}

double rnn_attack_score(const RnnModel& m, const features::FeatureVector& fv) {
  return rnn_fixed_point(m, fv).q[m.outputs.back()];
}

ordered_json to_json(const RnnModel& m) {
  return ordered_json{{"n", m.n},
                      {"w_plus", m.w_plus},
                      {"w_minus", m.w_minus},
                      {"departure", m.departure},
                      {"ext_plus", m.ext_plus},
                      {"ext_minus", m.ext_minus},
                      {"input_gain", m.input_gain},
                      {"inputs", m.inputs},
                      {"outputs", m.outputs},
                      {"input_features", m.input_features},
                      {"scale_min", m.scale_min},
                      {"scale_max", m.scale_max},
                      {"self_loops", m.self_loops}};
}

RnnModel rnn_from_json(const json& doc) {
  RnnModel m;
  try {
    m.n = doc.at("n").get<std::size_t>();
    m.w_plus = doc.at("w_plus").get<std::vector<double>>();
    m.w_minus = doc.at("w_minus").get<std::vector<double>>();
    m.departure = doc.at("departure").get<std::vector<double>>();
    m.ext_plus = doc.at("ext_plus").get<std::vector<double>>();
    m.ext_minus = doc.at("ext_minus").get<std::vector<double>>();
    m.input_gain = doc.value("input_gain", 0.5);
    m.inputs = doc.at("inputs").get<std::vector<std::size_t>>();
    m.outputs = doc.at("outputs").get<std::vector<std::size_t>>();
    m.input_features = doc.value("input_features", std::vector<std::string>{});
    m.scale_min = doc.value("scale_min", std::vector<double>{});
    m.scale_max = doc.value("scale_max", std::vector<double>{});
    m.self_loops = doc.value("self_loops", false);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedConfig, std::string("model.json: ") + ex.what());
  }
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const RnnModel& model) {
  write_text_file(path, to_json(model).dump(2) + "\n");
}

RnnModel load_model(const std::filesystem::path& path) {
  try {
    return rnn_from_json(json::parse(read_text_file(path)));
  } catch (const json::parse_error& ex) {
    throw Error(ErrorCode::kMalformedConfig, path.string() + ": " + ex.what());
  }
}

}  // namespace nemesys::detect
