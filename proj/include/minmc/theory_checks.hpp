#pragma once
/**
 * @file theory_checks.hpp
 * @brief Numerical verification of the operator-theoretic bounds and the
 *        convergence guarantees on finite-dimensional instances.
 *
 * The bounds are dimension-free statements about positive semidefinite
 * operators, so checking them on dense SPD matrices is faithful:
 *   - scalar_bound_check:      f(x) = lambda sqrt(x)/(lambda + x) <= sqrt(lambda)/2
 *   - ridge_shift_check:       |h_lambda - h_0|_{L2(mu)} <= sqrt(lambda) |h_0| / 2
 *                              with |v|_{L2(mu)} = sqrt(v^T Q v)
 *   - inverse_difference_check |(Q1+l)^-1 - (Q2+l)^-1|_op <= |Q1-Q2|_op / l^2
 *   - hilbert_mc_check:        E|mean_N - mu|^2 = E|b_1 - mu|^2 / N, for
 *                              Gaussian vectors and for k_Theta (x) k_Theta
 *                              matrices in the Frobenius (Hilbert-Schmidt) norm
 *
 * convergence_rate and loss_limit drive full estimator fits with the
 * schedule lambda_N = N^{-1/5} against the analytic Black-Scholes surface.
 */

#include <Eigen/Dense>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "minmc/estimators.hpp"
#include "minmc/linalg.hpp"
#include "minmc/models.hpp"
#include "minmc/rng.hpp"
#include "minmc/sampling.hpp"

namespace minmc {

/// Finite-dimensional stand-in for (Q, a, h0 = Q^{-1} a).
struct FiniteModel {
  Eigen::MatrixXd q;  // positive definite
  Eigen::VectorXd a;
  Eigen::VectorXd h0;

  void validate() const;
  /// Random SPD Q with eigenvalues in [eig_lo, eig_hi] and a random h0.
  static FiniteModel random(int dim, double eig_lo, double eig_hi,
                            RngStream& rng);
};

/// True iff lambda*sqrt(x)/(lambda+x) <= sqrt(lambda)/2 + 1e-12 for all xs.
bool scalar_bound_check(double lambda, std::span<const double> xs);

struct RidgeShiftEntry {
  double lambda = 0.0;
  double observed = 0.0;  // |h_lambda - h0|_{L2(mu)}
  double bound = 0.0;     // sqrt(lambda) |h0| / 2
  bool pass = false;
};

struct RidgeShiftReport {
  std::vector<RidgeShiftEntry> entries;  // sorted by lambda descending
  bool errors_decay = false;  // error at smallest lambda < error at largest
  bool all_pass = false;
  nlohmann::json to_json() const;
};

/// Verifies the ridge-shift bound for each lambda plus the decay property.
RidgeShiftReport ridge_shift_check(const FiniteModel& model,
                                   std::span<const double> lambdas);

bool inverse_difference_check(const SpdMatrix& q1, const SpdMatrix& q2,
                              double lambda);

struct HilbertMcReport {
  double vector_ratio = 0.0;  // N E|mean-mu|^2 / E|b1-mu|^2, Gaussian vectors
  double vector_band = 0.0;   // 3-sigma band of the replicate mean
  double hs_ratio = 0.0;      // same for k_Theta (x) k_Theta, Frobenius norm
  double hs_band = 0.0;
  bool pass = false;
  nlohmann::json to_json() const;
};

/// Requires reps >= 100. Both ratios should straddle 1 inside their bands;
/// N = 1 makes them identically 1.
HilbertMcReport hilbert_mc_check(int dim, int n, int reps, RngStream& rng);

struct RateConfig {
  ModelSpec model = ModelSpec::black_scholes(BsSpec{});
  ParamSpace space = ParamSpace::interval(0.0, 1.0, 100);
  std::vector<int> ns;   // increasing sample counts
  int reps = 20;
  int feature_count = 512;  // rf_ridge estimator nodes
  std::uint64_t node_seed = 2024;
};

struct RateReport {
  std::vector<int> ns;
  std::vector<double> lambdas;  // lambda_N = N^{-1/5}
  std::vector<double> errors;   // rep-averaged L2(mu) errors
  double slope = 0.0;           // least-squares slope of log e vs log N
  bool strictly_decreasing = false;
  bool high_variance_flag = false;  // reps == 1
  nlohmann::json to_json() const;
};

/// Fits rf_ridge with lambda_N = N^{-1/5} for each N and measures
/// |h_fit - h0|_{L2(mu)} by trapezoid quadrature against the analytic
/// Black-Scholes price. Throws std::invalid_argument for models without an
/// analytic surface.
RateReport convergence_rate(const RateConfig& config, RngStream& rng,
                            int threads = 1);

struct LossLimitReport {
  std::vector<int> ns;
  std::vector<double> lambdas;
  std::vector<double> losses;  // V_N(h_{N,lambda_N})
  double oracle = 0.0;         // E[Var(X | Theta)] / M
  nlohmann::json to_json() const;
};

/// Tracks the empirical loss along the lambda_N schedule against the nested
/// Monte Carlo estimate of E[Var(X|Theta)] (scaled by the pre-average width).
LossLimitReport loss_limit(const RateConfig& config, int pre_average_width,
                           RngStream& rng);

/// Nested Monte Carlo oracle for E[Var(X|Theta)]: outer draws over mu,
/// inner conditional second moments.
double conditional_variance_oracle(const ModelSpec& model,
                                   const ParamSpace& space, int outer,
                                   int inner, RngStream& rng);

/// Fuzzed appendix-bound suite: each check runs on `instances` random
/// instances; any violation fails the corresponding flag.
struct AppendixSuiteReport {
  int instances = 0;
  bool scalar_pass = false;
  bool ridge_shift_pass = false;
  bool ridge_monotone_pass = false;
  bool inverse_difference_pass = false;
  bool hilbert_mc_pass = false;

  bool all_pass() const {
    return scalar_pass && ridge_shift_pass && ridge_monotone_pass &&
           inverse_difference_pass && hilbert_mc_pass;
  }
  /// One JSON verdict object per check: {check, params, observed, bound, pass}.
  nlohmann::json to_json() const;
};

AppendixSuiteReport run_appendix_suite(int instances, std::uint64_t seed);

}  // namespace minmc
