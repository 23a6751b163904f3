#pragma once
/**
 * @file estimators.hpp
 * @brief The three minimizers of the regularized empirical quadratic.
 *
 *  - krr_fit: exact kernel ridge regression via the representer theorem,
 *    alpha solves (G + N lambda I) alpha = y, h(.) = sum_i alpha_i k(Theta_i, .).
 *  - rf_ridge_fit: ridge regression in Monte Carlo feature space,
 *    minimizing (1/N) |A g - X|^2 + (lambda/D) |g|^2 with
 *    A = feature_matrix (the 1/D column scaling realizes the L2(R) inner
 *    product), solved through the D_eff x D_eff normal equations.
 *  - mlp_fit (mlp.hpp): the neural network trained with Adam.
 *
 * EstimatorFit wraps any of the three behind predict()/empirical_loss and a
 * versioned JSON artifact so surfaces can be re-evaluated without refitting.
 */

#include <Eigen/Dense>
#include <filesystem>
#include <variant>

#include <nlohmann/json_fwd.hpp>

#include "minmc/kernels.hpp"
#include "minmc/mlp.hpp"
#include "minmc/sampling.hpp"

namespace minmc {

struct KrrFit {
  Kernel kernel;
  Eigen::MatrixXd anchors;  // N x d training parameters
  Eigen::VectorXd alpha;
  double lambda = 0.0;

  double predict(const Eigen::VectorXd& theta) const;
  nlohmann::json to_json() const;
  static KrrFit from_json(const nlohmann::json& j);
};

/// Solves (G + N lambda I) alpha = y. lambda = 0 is allowed and falls back
/// to the jittered solve; a genuinely singular system raises
/// SingularMatrixError suggesting a positive ridge.
KrrFit krr_fit(const Kernel& kernel, const SampleSet& samples, double lambda);

double krr_predict(const KrrFit& fit, const Eigen::VectorXd& theta);

struct RfFit {
  FeatureNodes nodes;
  Eigen::VectorXd weights;  // D * d entries, node-major
  double lambda = 0.0;
  /// (1/D) |g|^2, the Monte Carlo H-norm of the fitted element.
  double h_norm_sq = 0.0;
  /// Set when the ridge-free system was rank-deficient (D_eff > N) and the
  /// jittered solve produced the minimum-norm solution.
  bool jitter_fallback = false;

  double predict(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd predict_many(const Eigen::MatrixXd& points) const;
  nlohmann::json to_json() const;
  static RfFit from_json(const nlohmann::json& j);
};

RfFit rf_ridge_fit(const FeatureNodes& nodes, const SampleSet& samples,
                   double lambda);

namespace detail {
/// Activation-generic fit (test hook mirroring feature_matrix_with).
RfFit rf_ridge_fit_with(const FeatureNodes& nodes, const SampleSet& samples,
                        double lambda, double (*activation)(double));
}  // namespace detail

/// A fitted surface of any estimator family.
using EstimatorFit = std::variant<MlpFit, KrrFit, RfFit>;

double predict(const EstimatorFit& fit, const Eigen::VectorXd& theta);
Eigen::VectorXd predict_many(const EstimatorFit& fit,
                             const Eigen::MatrixXd& points);

/// The unregularized empirical quadratic V_N at the fitted surface.
double empirical_loss(const EstimatorFit& fit, const SampleSet& samples);

/// Versioned JSON artifact: estimator payload plus (N, M, lambda, seed).
struct FitArtifact {
  EstimatorFit fit;
  Eigen::Index n = 0;
  int m = 1;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

void save_fit(const FitArtifact& artifact, const std::filesystem::path& path);
FitArtifact load_fit(const std::filesystem::path& path);

}  // namespace minmc
