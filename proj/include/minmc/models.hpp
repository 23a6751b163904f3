#pragma once
/**
 * @file models.hpp
 * @brief Conditional payoff samplers P_theta and analytic references.
 *
 * Two model families:
 *   - Black-Scholes European call, zero rate in the sampler. The model
 *     parameter theta maps to a volatility either affinely
 *     (sigma = (1+theta)/10 on [0,1]) or directly (sigma = theta).
 *   - Heston European call, simulated with full-truncation Euler on
 *     (log S, v). The variance starts at the long-run level by default so
 *     a 2-parameter (kappa, theta_var) surface stays 2-parameter.
 *
 * ModelSpec wraps either family behind a uniform "draw one payoff given
 * theta" interface for the sampling and harness layers.
 */

#include <Eigen/Dense>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "minmc/rng.hpp"

namespace minmc {

enum class VolMap { Affine01, Direct };

struct BsSpec {
  double spot = 100.0;
  double strike = 100.0;
  double rate = 0.0;
  double maturity = 1.0;
  VolMap vol_map = VolMap::Affine01;

  void validate() const;
  /// Maps a model parameter to a volatility; throws if theta is outside the
  /// map's domain (Affine01: [0,1]; Direct: theta > 0).
  double sigma_of(double theta) const;
};

/// Black-Scholes call price x*Phi(d1) - K*exp(-rT)*Phi(d1 - sigma*sqrt(T)).
/// sigma <= 0 is rejected; the zero-volatility limit is exposed only via
/// bs_intrinsic.
double bs_price(const BsSpec& spec, double sigma);

/// Discounted intrinsic value max(x - K e^{-rT}, 0), the sigma -> 0 limit.
double bs_intrinsic(const BsSpec& spec);

/// One payoff draw (x e^{Z_T} - K)_+ with Z_T ~ N(-sigma^2 T/2, sigma^2 T)
/// for sigma = sigma_of(theta). Requires rate == 0 (the sampler is defined
/// risk-neutrally at zero rate).
double bs_payoff_sample(const BsSpec& spec, double theta, RngStream& rng);

double european_call(double s, double k);

struct HestonSpec {
  double spot = 100.0;
  double strike = 100.0;
  double maturity = 1.0 / 12.0;
  double kappa = 1.0;      // mean-reversion rate
  double theta_var = 0.2;  // long-run variance
  double sigma_vol = 0.2;  // vol of vol
  double rho = -0.5;       // Brownian correlation
  double v0 = 0.2;         // initial variance
  int steps = 64;

  void validate() const;
};

/// Terminal price S_T under full-truncation Euler at zero rate:
///   v+ = max(v, 0)
///   v     <- v + kappa (theta - v+) dt + sigma sqrt(v+ dt) Z_v
///   log S <- log S - v+/2 dt + sqrt(v+ dt) Z_S
/// with corr(Z_S, Z_v) = rho.
double heston_terminal(const HestonSpec& spec, RngStream& rng);

/// How a 2- or 3-dimensional parameter theta fills a HestonSpec:
/// theta = (kappa, theta_var[, sigma_vol]); v0 tracks theta_var unless an
/// explicit value is configured.
struct HestonParamMap {
  int free_params = 2;  // 2: (kappa, theta_var); 3: + sigma_vol
  std::optional<double> fixed_v0;
};

/// A conditional sampler P_theta plus payoff.
class ModelSpec {
 public:
  static ModelSpec black_scholes(BsSpec spec);
  static ModelSpec heston(HestonSpec base, HestonParamMap map);

  int param_dim() const;
  /// Draws one payoff X ~ P_theta.
  double sample_payoff(const Eigen::VectorXd& theta, RngStream& rng) const;

  /// True for Black-Scholes: the price surface h0 is available in closed form.
  bool has_analytic_price() const;
  double analytic_price(const Eigen::VectorXd& theta) const;

  bool is_black_scholes() const { return bs_.has_value(); }
  const BsSpec& bs() const { return bs_.value(); }
  const HestonSpec& heston_base() const { return heston_.value(); }
  const HestonParamMap& heston_map() const { return heston_map_; }
  /// Heston spec with theta substituted per the parameter map.
  HestonSpec heston_at(const Eigen::VectorXd& theta) const;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);

 private:
  ModelSpec() = default;
  std::optional<BsSpec> bs_;
  std::optional<HestonSpec> heston_;
  HestonParamMap heston_map_;
};

}  // namespace minmc
