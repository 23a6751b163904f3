#pragma once
/**
 * @file mlp.hpp
 * @brief Feedforward network trainer: tanh hidden layers, identity output,
 *        manual backpropagation, Adam.
 *
 * The architecture is fixed to [d, 200, 200, 1]. Training minimizes
 *   (1/|B|) sum_{i in B} (h_w(Theta_i) - X_i)^2 + lambda * penalty(w)
 * with one of three penalty modes:
 *   - None:      no penalty (lambda ignored),
 *   - L2Feature: Monte Carlo L2(R) norm of the network, (1/P) sum_p h_w(u_p)^2
 *                over P fixed penalty nodes u_p ~ N(0, I_d),
 *   - Rkhs01:    the [0,1] RKHS norm 1/2 (h(1)+h(0))^2 + 1/2 int h'(t)^2 dt,
 *                realized on a fixed 201-point grid with finite differences
 *                (a fixed quadratic functional of network outputs, d = 1 only).
 *
 * Training is single-threaded and bit-deterministic given (data, config, rng).
 */

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "minmc/rng.hpp"
#include "minmc/sampling.hpp"

namespace minmc {

class DivergedTrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PenaltyMode { None, L2Feature, Rkhs01 };

struct TrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double lambda = 0.0;
  PenaltyMode penalty = PenaltyMode::None;
  int penalty_nodes = 256;           // L2Feature Monte Carlo size
  std::uint64_t shuffle_seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

std::string to_string(PenaltyMode mode);
PenaltyMode penalty_mode_from_string(const std::string& name);

/// Weight matrices and biases; layer l maps activations of width
/// layer_sizes[l] to layer_sizes[l+1].
struct MlpWeights {
  std::vector<Eigen::MatrixXd> w;  // w[l]: out x in
  std::vector<Eigen::VectorXd> b;

  std::vector<int> layer_sizes() const;
  bool all_finite() const;

  /// Forward pass for a batch of inputs (one column per sample).
  Eigen::RowVectorXd forward(const Eigen::MatrixXd& inputs) const;
  double predict(const Eigen::VectorXd& theta) const;

  nlohmann::json to_json() const;
  static MlpWeights from_json(const nlohmann::json& j);
};

struct MlpFit {
  MlpWeights weights;
  std::vector<double> epoch_loss;  // objective averaged over an epoch's batches
  TrainConfig config;
  int input_dim = 1;

  double predict(const Eigen::VectorXd& theta) const {
    return weights.predict(theta);
  }
};

/// Xavier-uniform initial weights for [d, 200, 200, 1].
MlpWeights init_mlp_weights(int input_dim, RngStream& rng);

/// Mini-batch Adam on the regularized empirical quadratic. Throws
/// DivergedTrainingError if the objective turns non-finite.
MlpFit mlp_fit(const SampleSet& samples, const TrainConfig& config,
               RngStream& rng);

double mlp_predict(const MlpWeights& weights, const Eigen::VectorXd& theta);

namespace detail {

/// Objective (data term + lambda * penalty) and its weight gradient for a
/// given batch; exposed for the finite-difference gradient test.
/// `penalty_inputs` holds the L2Feature nodes (d x P) or the Rkhs01 grid
/// (1 x 201) as prepared by mlp_fit.
struct MlpObjective {
  double value = 0.0;
  std::vector<Eigen::MatrixXd> grad_w;
  std::vector<Eigen::VectorXd> grad_b;
};

MlpObjective objective_and_gradient(const MlpWeights& weights,
                                    const Eigen::MatrixXd& batch_inputs,
                                    const Eigen::VectorXd& batch_targets,
                                    const TrainConfig& config,
                                    const Eigen::MatrixXd& penalty_inputs);

Eigen::MatrixXd make_penalty_inputs(int input_dim, const TrainConfig& config,
                                    RngStream& rng);

}  // namespace detail

}  // namespace minmc
