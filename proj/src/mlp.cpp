#include "minmc/mlp.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace minmc {

namespace {

constexpr int kHidden = 200;
constexpr int kRkhsGridPoints = 201;

Eigen::MatrixXd tanh_of(const Eigen::MatrixXd& z) {
  return z.array().tanh().matrix();
}

}  // namespace

std::string to_string(PenaltyMode mode) {
  switch (mode) {
    case PenaltyMode::None: return "none";
    case PenaltyMode::L2Feature: return "l2_feature";
    case PenaltyMode::Rkhs01: return "rkhs01";
  }
  throw std::logic_error("unknown penalty mode");
}

PenaltyMode penalty_mode_from_string(const std::string& name) {
  if (name == "none") return PenaltyMode::None;
  if (name == "l2_feature") return PenaltyMode::L2Feature;
  if (name == "rkhs01") return PenaltyMode::Rkhs01;
  throw std::invalid_argument("unknown penalty mode: " + name);
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_epsilon", adam_epsilon},
          {"lambda", lambda},
          {"penalty", to_string(penalty)},
          {"penalty_nodes", penalty_nodes},
          {"shuffle_seed", shuffle_seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.lambda = j.value("lambda", c.lambda);
  if (j.contains("penalty")) {
    c.penalty = penalty_mode_from_string(j.at("penalty").get<std::string>());
  }
  c.penalty_nodes = j.value("penalty_nodes", c.penalty_nodes);
  c.shuffle_seed = j.value("shuffle_seed", c.shuffle_seed);
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || !(learning_rate > 0.0)) {
    throw std::invalid_argument(
        "TrainConfig: epochs, batch size, learning rate must be positive");
  }
  if (lambda < 0.0) {
    throw std::invalid_argument("TrainConfig: lambda must be >= 0");
  }
  if (penalty == PenaltyMode::L2Feature && penalty_nodes < 1) {
    throw std::invalid_argument("TrainConfig: penalty_nodes must be >= 1");
  }
}

std::vector<int> MlpWeights::layer_sizes() const {
  std::vector<int> sizes;
  if (w.empty()) return sizes;
  sizes.push_back(static_cast<int>(w.front().cols()));
  for (const auto& m : w) sizes.push_back(static_cast<int>(m.rows()));
  return sizes;
}

bool MlpWeights::all_finite() const {
  for (const auto& m : w) {
    if (!m.allFinite()) return false;
  }
  for (const auto& v : b) {
    if (!v.allFinite()) return false;
  }
  return true;
}

Eigen::RowVectorXd MlpWeights::forward(const Eigen::MatrixXd& inputs) const {
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    h = tanh_of((w[l] * h).colwise() + b[l]);
  }
  return ((w.back() * h).colwise() + b.back()).row(0);
}

double MlpWeights::predict(const Eigen::VectorXd& theta) const {
  if (theta.size() != w.front().cols()) {
    throw std::invalid_argument("mlp predict: input dimension mismatch");
  }
  return forward(theta)(0);
}

double mlp_predict(const MlpWeights& weights, const Eigen::VectorXd& theta) {
  return weights.predict(theta);
}

nlohmann::json MlpWeights::to_json() const {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < w.size(); ++l) {
    nlohmann::json jw = nlohmann::json::array();
    for (Eigen::Index r = 0; r < w[l].rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < w[l].cols(); ++c) row.push_back(w[l](r, c));
      jw.push_back(std::move(row));
    }
    nlohmann::json jb = nlohmann::json::array();
    for (Eigen::Index r = 0; r < b[l].size(); ++r) jb.push_back(b[l][r]);
    layers.push_back({{"w", std::move(jw)}, {"b", std::move(jb)}});
  }
  return {{"layers", std::move(layers)}};
}

MlpWeights MlpWeights::from_json(const nlohmann::json& j) {
  MlpWeights out;
  for (const auto& layer : j.at("layers")) {
    const auto& jw = layer.at("w");
    const auto rows = static_cast<Eigen::Index>(jw.size());
    const auto cols = static_cast<Eigen::Index>(jw.at(0).size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        m(r, c) = jw.at(static_cast<std::size_t>(r))
                      .at(static_cast<std::size_t>(c))
                      .get<double>();
      }
    }
    const auto& jb = layer.at("b");
    Eigen::VectorXd v(static_cast<Eigen::Index>(jb.size()));
    for (Eigen::Index r = 0; r < v.size(); ++r) {
      v[r] = jb.at(static_cast<std::size_t>(r)).get<double>();
    }
    out.w.push_back(std::move(m));
    out.b.push_back(std::move(v));
  }
  return out;
}

MlpWeights init_mlp_weights(int input_dim, RngStream& rng) {
  if (input_dim < 1) {
    throw std::invalid_argument("init_mlp_weights: input_dim must be >= 1");
  }
  const std::vector<int> sizes = {input_dim, kHidden, kHidden, 1};
  MlpWeights weights;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd m(fan_out, fan_in);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = rng.uniform(-limit, limit);
      }
    }
    weights.w.push_back(std::move(m));
    weights.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return weights;
}

namespace detail {

Eigen::MatrixXd make_penalty_inputs(int input_dim, const TrainConfig& config,
                                    RngStream& rng) {
  switch (config.penalty) {
    case PenaltyMode::None:
      return Eigen::MatrixXd();
    case PenaltyMode::L2Feature: {
      Eigen::MatrixXd nodes(input_dim, config.penalty_nodes);
      for (Eigen::Index c = 0; c < nodes.cols(); ++c) {
        for (Eigen::Index r = 0; r < nodes.rows(); ++r) {
          nodes(r, c) = rng.normal();
        }
      }
      return nodes;
    }
    case PenaltyMode::Rkhs01: {
      if (input_dim != 1) {
        throw std::invalid_argument("Rkhs01 penalty requires 1-d inputs");
      }
      Eigen::MatrixXd grid(1, kRkhsGridPoints);
      for (int i = 0; i < kRkhsGridPoints; ++i) {
        grid(0, i) = static_cast<double>(i) /
                     static_cast<double>(kRkhsGridPoints - 1);
      }
      return grid;
    }
  }
  throw std::logic_error("unknown penalty mode");
}

namespace {

// Shared forward/backward over a batch. `out_grad` is dObjective/dOutput as
// a row vector; gradients accumulate into `obj`.
struct ForwardCache {
  Eigen::MatrixXd h1, h2;    // tanh activations
  Eigen::RowVectorXd out;
};

ForwardCache forward_cached(const MlpWeights& weights,
                            const Eigen::MatrixXd& inputs) {
  ForwardCache cache;
  cache.h1 = tanh_of((weights.w[0] * inputs).colwise() + weights.b[0]);
  cache.h2 = tanh_of((weights.w[1] * cache.h1).colwise() + weights.b[1]);
  cache.out = ((weights.w[2] * cache.h2).colwise() + weights.b[2]).row(0);
  return cache;
}

void backward_accumulate(const MlpWeights& weights,
                         const Eigen::MatrixXd& inputs,
                         const ForwardCache& cache,
                         const Eigen::RowVectorXd& out_grad,
                         MlpObjective& obj) {
  // Output layer.
  obj.grad_w[2].noalias() += out_grad * cache.h2.transpose();
  obj.grad_b[2][0] += out_grad.sum();

  // Hidden layer 2.
  Eigen::MatrixXd dz2 = (weights.w[2].transpose() * out_grad).eval();
  dz2.array() *= 1.0 - cache.h2.array().square();
  obj.grad_w[1].noalias() += dz2 * cache.h1.transpose();
  obj.grad_b[1].noalias() += dz2.rowwise().sum();

  // Hidden layer 1.
  Eigen::MatrixXd dz1 = (weights.w[1].transpose() * dz2).eval();
  dz1.array() *= 1.0 - cache.h1.array().square();
  obj.grad_w[0].noalias() += dz1 * inputs.transpose();
  obj.grad_b[0].noalias() += dz1.rowwise().sum();
}

}  // namespace

MlpObjective objective_and_gradient(const MlpWeights& weights,
                                    const Eigen::MatrixXd& batch_inputs,
                                    const Eigen::VectorXd& batch_targets,
                                    const TrainConfig& config,
                                    const Eigen::MatrixXd& penalty_inputs) {
  MlpObjective obj;
  for (const auto& m : weights.w) {
    obj.grad_w.emplace_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  }
  for (const auto& v : weights.b) {
    obj.grad_b.emplace_back(Eigen::VectorXd::Zero(v.size()));
  }

  // Data term: (1/|B|) sum (out - y)^2.
  const auto bsize = static_cast<double>(batch_inputs.cols());
  const ForwardCache cache = forward_cached(weights, batch_inputs);
  const Eigen::RowVectorXd residual = cache.out - batch_targets.transpose();
  obj.value = residual.squaredNorm() / bsize;
  backward_accumulate(weights, batch_inputs, cache, (2.0 / bsize) * residual,
                      obj);

  if (config.penalty == PenaltyMode::None || config.lambda == 0.0) {
    return obj;
  }

  if (config.penalty == PenaltyMode::L2Feature) {
    // lambda * (1/P) sum_p h(u_p)^2
    const auto p = static_cast<double>(penalty_inputs.cols());
    const ForwardCache pc = forward_cached(weights, penalty_inputs);
    obj.value += config.lambda * pc.out.squaredNorm() / p;
    backward_accumulate(weights, penalty_inputs, pc,
                        (config.lambda * 2.0 / p) * pc.out, obj);
    return obj;
  }

  // Rkhs01: 1/2 (y_0 + y_n)^2 + 1/2 int (h')^2 via finite differences on the
  // fixed grid; a quadratic functional of the grid outputs.
  const Eigen::Index n = penalty_inputs.cols();
  const double h = penalty_inputs(0, 1) - penalty_inputs(0, 0);
  const ForwardCache pc = forward_cached(weights, penalty_inputs);
  const Eigen::RowVectorXd& y = pc.out;

  Eigen::RowVectorXd deriv(n);
  deriv[0] = (y[1] - y[0]) / h;
  deriv[n - 1] = (y[n - 1] - y[n - 2]) / h;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    deriv[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
  }

  // Trapezoid weights for the uniform grid.
  Eigen::RowVectorXd tw = Eigen::RowVectorXd::Constant(n, h);
  tw[0] = tw[n - 1] = 0.5 * h;

  const double boundary = y[0] + y[n - 1];
  double penalty = 0.5 * boundary * boundary;
  penalty += 0.5 * (tw.array() * deriv.array().square()).sum();
  obj.value += config.lambda * penalty;

  Eigen::RowVectorXd ygrad = Eigen::RowVectorXd::Zero(n);
  ygrad[0] += boundary;
  ygrad[n - 1] += boundary;
  const Eigen::RowVectorXd wd = (tw.array() * deriv.array()).matrix();
  ygrad[0] += -wd[0] / h;
  ygrad[1] += wd[0] / h;
  ygrad[n - 2] += -wd[n - 1] / h;
  ygrad[n - 1] += wd[n - 1] / h;
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    ygrad[i - 1] += -wd[i] / (2.0 * h);
    ygrad[i + 1] += wd[i] / (2.0 * h);
  }
  backward_accumulate(weights, penalty_inputs, pc, config.lambda * ygrad, obj);
  return obj;
}

}  // namespace detail

MlpFit mlp_fit(const SampleSet& samples, const TrainConfig& config,
               RngStream& rng) {
  samples.validate();
  config.validate();
  const auto n = samples.size();
  const int d = static_cast<int>(samples.thetas.cols());

  MlpWeights weights = init_mlp_weights(d, rng);
  const Eigen::MatrixXd penalty_inputs =
      detail::make_penalty_inputs(d, config, rng);

  // Inputs are column-major batches (one sample per column).
  const Eigen::MatrixXd inputs = samples.thetas.transpose();

  // Adam state.
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (const auto& m : weights.w) {
    mw.emplace_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    vw.emplace_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
  }
  for (const auto& v : weights.b) {
    mb.emplace_back(Eigen::VectorXd::Zero(v.size()));
    vb.emplace_back(Eigen::VectorXd::Zero(v.size()));
  }

  RngStream shuffle_rng(config.shuffle_seed, 0x73687566);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  MlpFit fit;
  fit.config = config;
  fit.input_dim = d;

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates from the dedicated shuffle stream.
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index bsize =
          std::min<Eigen::Index>(config.batch_size, n - start);
      Eigen::MatrixXd bx(d, bsize);
      Eigen::VectorXd by(bsize);
      for (Eigen::Index k = 0; k < bsize; ++k) {
        const Eigen::Index idx = order[static_cast<std::size_t>(start + k)];
        bx.col(k) = inputs.col(idx);
        by[k] = samples.xs[idx];
      }

      detail::MlpObjective obj = detail::objective_and_gradient(
          weights, bx, by, config, penalty_inputs);
      if (!std::isfinite(obj.value)) {
        throw DivergedTrainingError("mlp_fit: objective became non-finite");
      }
      epoch_loss += obj.value;
      ++batches;

      // Adam update.
      ++step;
      const double bc1 = 1.0 - std::pow(config.adam_beta1, step);
      const double bc2 = 1.0 - std::pow(config.adam_beta2, step);
      for (std::size_t l = 0; l < weights.w.size(); ++l) {
        mw[l] = config.adam_beta1 * mw[l] + (1.0 - config.adam_beta1) * obj.grad_w[l];
        vw[l] = config.adam_beta2 * vw[l] +
                (1.0 - config.adam_beta2) * obj.grad_w[l].cwiseProduct(obj.grad_w[l]);
        weights.w[l].array() -=
            config.learning_rate * (mw[l].array() / bc1) /
            ((vw[l].array() / bc2).sqrt() + config.adam_epsilon);

        mb[l] = config.adam_beta1 * mb[l] + (1.0 - config.adam_beta1) * obj.grad_b[l];
        vb[l] = config.adam_beta2 * vb[l] +
                (1.0 - config.adam_beta2) * obj.grad_b[l].cwiseProduct(obj.grad_b[l]);
        weights.b[l].array() -=
            config.learning_rate * (mb[l].array() / bc1) /
            ((vb[l].array() / bc2).sqrt() + config.adam_epsilon);
      }
      if (!weights.all_finite()) {
        throw DivergedTrainingError("mlp_fit: weights became non-finite");
      }
    }
    fit.epoch_loss.push_back(epoch_loss / std::max(batches, 1));
  }

  fit.weights = std::move(weights);
  return fit;
}

}  // namespace minmc
