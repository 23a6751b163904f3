#include "minmc/models.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace minmc {

namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

void BsSpec::validate() const {
  if (!(spot > 0.0) || !(strike > 0.0) || !(maturity > 0.0)) {
    throw std::invalid_argument("BsSpec: spot, strike, maturity must be > 0");
  }
}

double BsSpec::sigma_of(double theta) const {
  switch (vol_map) {
    case VolMap::Affine01:
      if (theta < 0.0 || theta > 1.0) {
        throw std::invalid_argument("Affine01 vol map: theta outside [0,1]");
      }
      return (1.0 + theta) / 10.0;
    case VolMap::Direct:
      if (!(theta > 0.0)) {
        throw std::invalid_argument("Direct vol map: theta must be > 0");
      }
      return theta;
  }
  throw std::logic_error("unknown vol map");
}

double bs_price(const BsSpec& spec, double sigma) {
  spec.validate();
  if (!(sigma > 0.0)) {
    throw std::invalid_argument(
        "bs_price: sigma must be > 0 (use bs_intrinsic for the limit)");
  }
  const double st = sigma * std::sqrt(spec.maturity);
  const double d1 =
      (std::log(spec.spot / spec.strike) +
       (spec.rate + 0.5 * sigma * sigma) * spec.maturity) /
      st;
  return spec.spot * norm_cdf(d1) -
         spec.strike * std::exp(-spec.rate * spec.maturity) * norm_cdf(d1 - st);
}

double bs_intrinsic(const BsSpec& spec) {
  spec.validate();
  return std::max(spec.spot - spec.strike * std::exp(-spec.rate * spec.maturity),
                  0.0);
}

double bs_payoff_sample(const BsSpec& spec, double theta, RngStream& rng) {
  spec.validate();
  if (spec.rate != 0.0) {
    throw std::invalid_argument(
        "bs_payoff_sample: sampler is defined for zero rate");
  }
  const double sigma = spec.sigma_of(theta);
  const double var = sigma * sigma * spec.maturity;
  const double z = -0.5 * var + std::sqrt(var) * rng.normal();
  return european_call(spec.spot * std::exp(z), spec.strike);
}

double european_call(double s, double k) {
  if (s < 0.0 || k < 0.0) {
    throw std::invalid_argument("european_call: s and k must be >= 0");
  }
  return std::max(s - k, 0.0);
}

void HestonSpec::validate() const {
  if (!(spot > 0.0) || !(strike > 0.0) || !(maturity > 0.0)) {
    throw std::invalid_argument("HestonSpec: spot, strike, maturity must be > 0");
  }
  if (!(kappa > 0.0) || !(theta_var > 0.0) || !(v0 > 0.0)) {
    throw std::invalid_argument("HestonSpec: kappa, theta_var, v0 must be > 0");
  }
  if (sigma_vol < 0.0) {
    throw std::invalid_argument("HestonSpec: sigma_vol must be >= 0");
  }
  if (std::abs(rho) > 1.0) {
    throw std::invalid_argument("HestonSpec: |rho| must be <= 1");
  }
  if (steps < 1) {
    throw std::invalid_argument("HestonSpec: steps must be >= 1");
  }
}

double heston_terminal(const HestonSpec& spec, RngStream& rng) {
  spec.validate();
  const double dt = spec.maturity / static_cast<double>(spec.steps);
  const double sqrt_dt = std::sqrt(dt);

  double v = spec.v0;
  double log_s = std::log(spec.spot);
  for (int k = 0; k < spec.steps; ++k) {
    const auto [z_s, z_v] = rng.normal_pair_correlated(spec.rho);
    const double v_plus = std::max(v, 0.0);
    const double vol = std::sqrt(v_plus);
    log_s += -0.5 * v_plus * dt + vol * sqrt_dt * z_s;
    v += spec.kappa * (spec.theta_var - v_plus) * dt +
         spec.sigma_vol * vol * sqrt_dt * z_v;
  }
  return std::exp(log_s);
}

ModelSpec ModelSpec::black_scholes(BsSpec spec) {
  spec.validate();
  ModelSpec m;
  m.bs_ = spec;
  return m;
}

ModelSpec ModelSpec::heston(HestonSpec base, HestonParamMap map) {
  if (map.free_params != 2 && map.free_params != 3) {
    throw std::invalid_argument("ModelSpec: heston free_params must be 2 or 3");
  }
  base.validate();
  ModelSpec m;
  m.heston_ = base;
  m.heston_map_ = map;
  return m;
}

int ModelSpec::param_dim() const {
  return bs_ ? 1 : heston_map_.free_params;
}

HestonSpec ModelSpec::heston_at(const Eigen::VectorXd& theta) const {
  if (theta.size() != param_dim()) {
    throw std::invalid_argument("ModelSpec: theta dimension mismatch");
  }
  HestonSpec spec = *heston_;
  spec.kappa = theta[0];
  spec.theta_var = theta[1];
  if (heston_map_.free_params == 3) {
    spec.sigma_vol = theta[2];
  }
  spec.v0 = heston_map_.fixed_v0.value_or(spec.theta_var);
  return spec;
}

double ModelSpec::sample_payoff(const Eigen::VectorXd& theta,
                                RngStream& rng) const {
  if (bs_) {
    if (theta.size() != 1) {
      throw std::invalid_argument("ModelSpec: theta dimension mismatch");
    }
    return bs_payoff_sample(*bs_, theta[0], rng);
  }
  const HestonSpec spec = heston_at(theta);
  return european_call(heston_terminal(spec, rng), spec.strike);
}

bool ModelSpec::has_analytic_price() const { return bs_.has_value(); }

double ModelSpec::analytic_price(const Eigen::VectorXd& theta) const {
  if (!bs_) {
    throw std::invalid_argument(
        "analytic_price: only the Black-Scholes model has a closed form");
  }
  if (theta.size() != 1) {
    throw std::invalid_argument("ModelSpec: theta dimension mismatch");
  }
  return bs_price(*bs_, bs_->sigma_of(theta[0]));
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j;
  if (bs_) {
    j["kind"] = "black_scholes";
    j["spot"] = bs_->spot;
    j["strike"] = bs_->strike;
    j["rate"] = bs_->rate;
    j["maturity"] = bs_->maturity;
    j["vol_map"] = bs_->vol_map == VolMap::Affine01 ? "affine01" : "direct";
  } else {
    j["kind"] = "heston";
    j["spot"] = heston_->spot;
    j["strike"] = heston_->strike;
    j["maturity"] = heston_->maturity;
    j["sigma_vol"] = heston_->sigma_vol;
    j["rho"] = heston_->rho;
    j["steps"] = heston_->steps;
    j["free_params"] = heston_map_.free_params;
    if (heston_map_.fixed_v0) {
      j["v0"] = *heston_map_.fixed_v0;
    } else {
      j["v0"] = "track_theta_var";
    }
  }
  return j;
}

ModelSpec ModelSpec::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "black_scholes") {
    BsSpec spec;
    spec.spot = j.at("spot").get<double>();
    spec.strike = j.at("strike").get<double>();
    spec.rate = j.value("rate", 0.0);
    spec.maturity = j.at("maturity").get<double>();
    const std::string vm = j.at("vol_map").get<std::string>();
    if (vm == "affine01") {
      spec.vol_map = VolMap::Affine01;
    } else if (vm == "direct") {
      spec.vol_map = VolMap::Direct;
    } else {
      throw std::invalid_argument("unknown vol_map: " + vm);
    }
    return black_scholes(spec);
  }
  if (kind == "heston") {
    HestonSpec spec;
    spec.spot = j.at("spot").get<double>();
    spec.strike = j.at("strike").get<double>();
    spec.maturity = j.at("maturity").get<double>();
    spec.sigma_vol = j.at("sigma_vol").get<double>();
    spec.rho = j.at("rho").get<double>();
    spec.steps = j.value("steps", 64);
    HestonParamMap map;
    map.free_params = j.at("free_params").get<int>();
    if (j.contains("v0") && j.at("v0").is_number()) {
      map.fixed_v0 = j.at("v0").get<double>();
      spec.v0 = *map.fixed_v0;
    }
    return heston(spec, map);
  }
  throw std::invalid_argument("unknown model kind: " + kind);
}

}  // namespace minmc
