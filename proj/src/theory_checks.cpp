#include "minmc/theory_checks.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "minmc/parallel.hpp"
#include "minmc/stats.hpp"

namespace minmc {

void FiniteModel::validate() const {
  if (q.rows() != q.cols() || q.rows() != a.size() || a.size() != h0.size()) {
    throw std::invalid_argument("FiniteModel: inconsistent dimensions");
  }
  if ((q * h0 - a).norm() > 1e-10 * std::max(1.0, a.norm())) {
    throw std::invalid_argument("FiniteModel: Q h0 != a");
  }
}

FiniteModel FiniteModel::random(int dim, double eig_lo, double eig_hi,
                                RngStream& rng) {
  if (dim < 1 || !(eig_lo > 0.0) || !(eig_hi >= eig_lo)) {
    throw std::invalid_argument("FiniteModel::random: bad parameters");
  }
  // Random orthogonal basis from the QR of a Gaussian matrix.
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) g(r, c) = rng.normal();
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd v = qr.householderQ();

  Eigen::VectorXd eigs(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    eigs[i] = rng.uniform(eig_lo, eig_hi);
  }

  FiniteModel model;
  model.q = v * eigs.asDiagonal() * v.transpose();
  model.q = ((model.q + model.q.transpose()) / 2.0).eval();
  model.h0.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) model.h0[i] = rng.normal();
  model.a = model.q * model.h0;
  return model;
}

bool scalar_bound_check(double lambda, std::span<const double> xs) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("scalar_bound_check: lambda must be > 0");
  }
  const double bound = 0.5 * std::sqrt(lambda) + 1e-12;
  for (double x : xs) {
    if (x < 0.0) {
      throw std::invalid_argument("scalar_bound_check: xs must be >= 0");
    }
    if (lambda * std::sqrt(x) / (lambda + x) > bound) {
      return false;
    }
  }
  return true;
}

RidgeShiftReport ridge_shift_check(const FiniteModel& model,
                                   std::span<const double> lambdas) {
  model.validate();
  if (lambdas.empty()) {
    throw std::invalid_argument("ridge_shift_check: no lambdas given");
  }
  std::vector<double> sorted(lambdas.begin(), lambdas.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (!(sorted.back() > 0.0)) {
    throw std::invalid_argument("ridge_shift_check: lambdas must be > 0");
  }

  const double h0_norm = model.h0.norm();
  RidgeShiftReport report;
  report.all_pass = true;
  for (double lambda : sorted) {
    Eigen::MatrixXd shifted = model.q;
    shifted.diagonal().array() += lambda;
    const Eigen::VectorXd h_lambda = solve_spd(shifted, model.a);
    const Eigen::VectorXd diff = h_lambda - model.h0;
    const double observed = std::sqrt(diff.dot(model.q * diff));
    const double bound = 0.5 * std::sqrt(lambda) * h0_norm + 1e-10;
    const bool pass = observed <= bound;
    report.all_pass = report.all_pass && pass;
    report.entries.push_back({lambda, observed, bound, pass});
  }
  report.errors_decay =
      report.entries.back().observed <= report.entries.front().observed;
  return report;
}

bool inverse_difference_check(const SpdMatrix& q1, const SpdMatrix& q2,
                              double lambda) {
  if (q1.dim() != q2.dim()) {
    throw std::invalid_argument("inverse_difference_check: dim mismatch");
  }
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("inverse_difference_check: lambda must be > 0");
  }
  const Eigen::Index n = q1.dim();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  Eigen::MatrixXd s1 = q1.entries();
  s1.diagonal().array() += lambda;
  Eigen::MatrixXd s2 = q2.entries();
  s2.diagonal().array() += lambda;

  const Eigen::MatrixXd inv1 = solve_spd(s1, id);
  const Eigen::MatrixXd inv2 = solve_spd(s2, id);

  const double lhs = operator_norm_sym(inv1 - inv2);
  const double rhs =
      operator_norm_sym(q1.entries() - q2.entries()) / (lambda * lambda);
  return lhs <= rhs + 1e-10;
}

namespace {

/// Draws the r-th replicate of N correlated Gaussian vectors; fn(b) is
/// called once per vector. Derivation by (rep, draw) keeps passes identical.
template <typename Fn>
void for_each_gaussian_draw(const Eigen::MatrixXd& chol, int n,
                            const RngStream& base, std::uint64_t rep, Fn&& fn) {
  RngStream rng = base.substream(rep);
  const Eigen::Index dim = chol.rows();
  Eigen::VectorXd z(dim), b(dim);
  for (int k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
    b.noalias() = chol * z;
    fn(b);
  }
}

/// Triangular-kernel coordinates of k_Theta on a fixed anchor grid.
template <typename Fn>
void for_each_kernel_matrix(const Eigen::VectorXd& anchors, int n,
                            const RngStream& base, std::uint64_t rep,
                            Fn&& fn) {
  RngStream rng = base.substream(rep ^ 0x9e3779b9ULL);
  const Eigen::Index m = anchors.size();
  Eigen::VectorXd v(m);
  Eigen::MatrixXd outer(m, m);
  for (int k = 0; k < n; ++k) {
    const double theta = rng.uniform01();
    for (Eigen::Index i = 0; i < m; ++i) {
      v[i] = 1.0 - std::abs(theta - anchors[i]);
    }
    outer.noalias() = v * v.transpose();
    fn(outer);
  }
}

}  // namespace

HilbertMcReport hilbert_mc_check(int dim, int n, int reps, RngStream& rng) {
  if (dim < 1 || n < 1) {
    throw std::invalid_argument("hilbert_mc_check: dim and n must be >= 1");
  }
  if (reps < 100) {
    throw std::invalid_argument("hilbert_mc_check: reps must be >= 100");
  }

  // Correlated covariance Sigma_ij = 0.5^|i-j| via its Cholesky factor.
  Eigen::MatrixXd sigma(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      sigma(i, j) = std::pow(0.5, std::abs(static_cast<double>(i - j)));
    }
  }
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();

  const Eigen::VectorXd anchors =
      Eigen::VectorXd::LinSpaced(std::max(dim, 2), 0.0, 1.0);

  HilbertMcReport report;

  // --- Gaussian vectors in R^dim ---
  {
    // Pass 1: pooled mean.
    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(dim);
    for (int r = 0; r < reps; ++r) {
      for_each_gaussian_draw(chol, n, rng, static_cast<std::uint64_t>(r),
                             [&](const Eigen::VectorXd& b) { pooled += b; });
    }
    pooled /= static_cast<double>(reps) * n;

    // Pass 2: replicate numerators and the pooled denominator.
    std::vector<double> numer(static_cast<std::size_t>(reps));
    double denom = 0.0;
    for (int r = 0; r < reps; ++r) {
      Eigen::VectorXd mean_r = Eigen::VectorXd::Zero(dim);
      for_each_gaussian_draw(chol, n, rng, static_cast<std::uint64_t>(r),
                             [&](const Eigen::VectorXd& b) {
                               mean_r += b;
                               denom += (b - pooled).squaredNorm();
                             });
      mean_r /= static_cast<double>(n);
      numer[static_cast<std::size_t>(r)] =
          static_cast<double>(n) * (mean_r - pooled).squaredNorm();
    }
    denom /= static_cast<double>(reps) * n;
    report.vector_ratio = mean(numer) / denom;
    report.vector_band = numer.size() > 1
                             ? 3.0 * std::sqrt(sample_variance(numer) /
                                               static_cast<double>(reps)) /
                                   denom
                             : 0.0;
  }

  // --- k_Theta (x) k_Theta matrices, Hilbert-Schmidt (Frobenius) norm ---
  {
    const Eigen::Index m = anchors.size();
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(m, m);
    for (int r = 0; r < reps; ++r) {
      for_each_kernel_matrix(anchors, n, rng, static_cast<std::uint64_t>(r),
                             [&](const Eigen::MatrixXd& b) { pooled += b; });
    }
    pooled /= static_cast<double>(reps) * n;

    std::vector<double> numer(static_cast<std::size_t>(reps));
    double denom = 0.0;
    for (int r = 0; r < reps; ++r) {
      Eigen::MatrixXd mean_r = Eigen::MatrixXd::Zero(m, m);
      for_each_kernel_matrix(anchors, n, rng, static_cast<std::uint64_t>(r),
                             [&](const Eigen::MatrixXd& b) {
                               mean_r += b;
                               denom += (b - pooled).squaredNorm();
                             });
      mean_r /= static_cast<double>(n);
      numer[static_cast<std::size_t>(r)] =
          static_cast<double>(n) * (mean_r - pooled).squaredNorm();
    }
    denom /= static_cast<double>(reps) * n;
    report.hs_ratio = mean(numer) / denom;
    report.hs_band = numer.size() > 1
                         ? 3.0 * std::sqrt(sample_variance(numer) /
                                           static_cast<double>(reps)) /
                               denom
                         : 0.0;
  }

  report.pass = std::abs(report.vector_ratio - 1.0) <=
                    report.vector_band + 1e-9 &&
                std::abs(report.hs_ratio - 1.0) <= report.hs_band + 1e-9;
  return report;
}

namespace {

/// L2(mu) distance between a fitted surface and the analytic price on the
/// evaluation grid (1-d, uniform mu).
double l2_mu_error(const ModelSpec& model, const ParamSpace& space,
                   const EstimatorFit& fit) {
  const Eigen::MatrixXd grid = space.grid();
  const Eigen::VectorXd fitted = predict_many(fit, grid);
  std::vector<double> sq(static_cast<std::size_t>(grid.rows()));
  std::vector<double> xs(static_cast<std::size_t>(grid.rows()));
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const double diff = fitted[i] - model.analytic_price(grid.row(i).transpose());
    sq[static_cast<std::size_t>(i)] = diff * diff;
    xs[static_cast<std::size_t>(i)] = grid(i, 0);
  }
  return std::sqrt(trapezoid(sq, xs) / space.volume());
}

void validate_rate_config(const RateConfig& config) {
  if (!config.model.has_analytic_price()) {
    throw std::invalid_argument(
        "convergence_rate: model has no analytic surface (unsupported model)");
  }
  if (config.ns.size() < 2) {
    throw std::invalid_argument("convergence_rate: need at least two Ns");
  }
  for (std::size_t i = 1; i < config.ns.size(); ++i) {
    if (config.ns[i] <= config.ns[i - 1]) {
      throw std::invalid_argument("convergence_rate: Ns must be increasing");
    }
  }
  const double decades = std::log10(static_cast<double>(config.ns.back()) /
                                    static_cast<double>(config.ns.front()));
  if (decades < 1.5) {
    throw std::invalid_argument(
        "convergence_rate: Ns must span at least 1.5 decades");
  }
  if (config.reps < 1 || config.feature_count < 1) {
    throw std::invalid_argument("convergence_rate: bad reps/feature_count");
  }
  if (config.space.dims() != config.model.param_dim()) {
    throw std::invalid_argument("convergence_rate: space/model dim mismatch");
  }
}

}  // namespace

RateReport convergence_rate(const RateConfig& config, RngStream& rng,
                            int threads) {
  validate_rate_config(config);

  const FeatureNodes nodes =
      FeatureNodes::generate(config.model.param_dim(), config.feature_count,
                             NodeDistribution::gaussian(), config.node_seed);

  const auto n_levels = config.ns.size();
  const auto cells = static_cast<std::int64_t>(n_levels) * config.reps;
  std::vector<double> cell_errors(static_cast<std::size_t>(cells));

  const RngStream base = rng;  // cells derive from the caller's stream
  parallel_for_index(cells, threads, [&](std::int64_t cell) {
    const auto level = static_cast<std::size_t>(cell) / config.reps;
    const auto rep = static_cast<std::uint64_t>(
        static_cast<std::size_t>(cell) % config.reps);
    const int n = config.ns[level];
    const double lambda =
        std::pow(static_cast<double>(n), -0.2);  // lambda_N = N^{-1/5}

    RngStream cell_rng =
        base.substream(level * 1000003ULL + 17ULL).substream(rep);
    RngStream theta_rng = cell_rng.substream(0);
    RngStream payoff_rng = cell_rng.substream(1);

    const Eigen::MatrixXd thetas = draw_thetas(config.space, n, theta_rng);
    const SampleSet samples =
        build_samples(config.model, thetas, /*m=*/1, payoff_rng);
    const RfFit fit = rf_ridge_fit(nodes, samples, lambda);
    cell_errors[static_cast<std::size_t>(cell)] =
        l2_mu_error(config.model, config.space, EstimatorFit(fit));
  });

  RateReport report;
  report.ns = config.ns;
  report.high_variance_flag = config.reps == 1;
  for (std::size_t level = 0; level < n_levels; ++level) {
    report.lambdas.push_back(
        std::pow(static_cast<double>(config.ns[level]), -0.2));
    double acc = 0.0;
    for (int rep = 0; rep < config.reps; ++rep) {
      acc += cell_errors[level * static_cast<std::size_t>(config.reps) +
                         static_cast<std::size_t>(rep)];
    }
    report.errors.push_back(acc / config.reps);
  }

  report.strictly_decreasing = true;
  for (std::size_t i = 1; i < report.errors.size(); ++i) {
    if (!(report.errors[i] < report.errors[i - 1])) {
      report.strictly_decreasing = false;
    }
  }

  // Least-squares slope of log e against log N.
  const auto k = static_cast<double>(n_levels);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n_levels; ++i) {
    const double x = std::log(static_cast<double>(config.ns[i]));
    const double y = std::log(report.errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  report.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return report;
}

LossLimitReport loss_limit(const RateConfig& config, int pre_average_width,
                           RngStream& rng) {
  validate_rate_config(config);
  if (pre_average_width < 1) {
    throw std::invalid_argument("loss_limit: pre-average width must be >= 1");
  }

  const FeatureNodes nodes =
      FeatureNodes::generate(config.model.param_dim(), config.feature_count,
                             NodeDistribution::gaussian(), config.node_seed);

  LossLimitReport report;
  report.ns = config.ns;

  RngStream oracle_rng = rng.substream(0xfeedULL);
  report.oracle = conditional_variance_oracle(config.model, config.space,
                                              /*outer=*/1000, /*inner=*/10000,
                                              oracle_rng) /
                  static_cast<double>(pre_average_width);

  for (std::size_t level = 0; level < config.ns.size(); ++level) {
    const int n = config.ns[level];
    const double lambda = std::pow(static_cast<double>(n), -0.2);
    report.lambdas.push_back(lambda);

    RngStream cell_rng = rng.substream(level * 7919ULL + 1ULL);
    RngStream theta_rng = cell_rng.substream(0);
    RngStream payoff_rng = cell_rng.substream(1);
    const Eigen::MatrixXd thetas = draw_thetas(config.space, n, theta_rng);
    const SampleSet samples =
        build_samples(config.model, thetas, pre_average_width, payoff_rng);
    const RfFit fit = rf_ridge_fit(nodes, samples, lambda);
    report.losses.push_back(empirical_loss(EstimatorFit(fit), samples));
  }
  return report;
}

double conditional_variance_oracle(const ModelSpec& model,
                                   const ParamSpace& space, int outer,
                                   int inner, RngStream& rng) {
  if (outer < 1 || inner < 2) {
    throw std::invalid_argument(
        "conditional_variance_oracle: outer >= 1 and inner >= 2 required");
  }
  RngStream theta_rng = rng.substream(0);
  const Eigen::MatrixXd thetas = draw_thetas(space, outer, theta_rng);

  double acc = 0.0;
  for (int i = 0; i < outer; ++i) {
    RngStream inner_rng = rng.substream(static_cast<std::uint64_t>(i) + 1);
    const Eigen::VectorXd theta = thetas.row(i).transpose();
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j < inner; ++j) {
      const double y = model.sample_payoff(theta, inner_rng);
      m1 += y;
      m2 += y * y;
    }
    m1 /= static_cast<double>(inner);
    m2 /= static_cast<double>(inner);
    // Unbiased conditional variance.
    acc += (m2 - m1 * m1) * static_cast<double>(inner) /
           static_cast<double>(inner - 1);
  }
  return acc / static_cast<double>(outer);
}

AppendixSuiteReport run_appendix_suite(int instances, std::uint64_t seed) {
  if (instances < 1) {
    throw std::invalid_argument("run_appendix_suite: instances must be >= 1");
  }
  RngStream rng(seed, 0xA99E4D1ULL);
  AppendixSuiteReport report;
  report.instances = instances;
  report.scalar_pass = true;
  report.ridge_shift_pass = true;
  report.ridge_monotone_pass = true;
  report.inverse_difference_pass = true;
  report.hilbert_mc_pass = true;

  for (int k = 0; k < instances; ++k) {
    RngStream inst = rng.substream(static_cast<std::uint64_t>(k));

    // f(x) = lambda sqrt(x)/(lambda + x) <= sqrt(lambda)/2, swept over a
    // log-spaced x grid plus the boundary cases {0, lambda}.
    {
      RngStream r = inst.substream(1);
      const double lambda = std::pow(10.0, r.uniform(-6.0, 2.0));
      std::vector<double> xs = {0.0, lambda};
      for (int i = 0; i < 64; ++i) {
        xs.push_back(std::pow(10.0, -8.0 + 16.0 * i / 63.0));
      }
      report.scalar_pass =
          report.scalar_pass && scalar_bound_check(lambda, xs);
    }

    // Ridge-shift bound plus monotone decay of the error in lambda.
    {
      RngStream r = inst.substream(2);
      const int dim = 2 + static_cast<int>(r.next_u64() % 49);
      const FiniteModel model = FiniteModel::random(dim, 0.1, 10.0, r);
      std::vector<double> lambdas;
      for (int i = 0; i < 20; ++i) {
        lambdas.push_back(std::pow(10.0, -6.0 + 6.0 * i / 19.0));
      }
      const RidgeShiftReport rs = ridge_shift_check(model, lambdas);
      report.ridge_shift_pass =
          report.ridge_shift_pass && rs.all_pass && rs.errors_decay;
      for (std::size_t i = 1; i < rs.entries.size(); ++i) {
        // entries are sorted by descending lambda.
        if (rs.entries[i].observed > rs.entries[i - 1].observed + 1e-12) {
          report.ridge_monotone_pass = false;
        }
      }
    }

    // Difference-of-inverse bound on random PSD pairs.
    {
      RngStream r = inst.substream(3);
      const int dim = 30;
      auto random_psd = [&](double scale) {
        Eigen::MatrixXd b(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
          for (Eigen::Index j = 0; j < dim; ++j) b(i, j) = r.normal();
        }
        Eigen::MatrixXd q = scale * (b * b.transpose()) / dim;
        return SpdMatrix((q + q.transpose()) / 2.0);
      };
      const SpdMatrix q1 = random_psd(1.0);
      const SpdMatrix q2 = random_psd(r.uniform(0.5, 2.0));
      const double lambda_steps[] = {0.01, 0.1, 1.0};
      const double lambda = lambda_steps[k % 3];
      report.inverse_difference_pass =
          report.inverse_difference_pass &&
          inverse_difference_check(q1, q2, lambda);
    }

    // Monte Carlo identity in Hilbert space at randomized (dim, N).
    {
      RngStream r = inst.substream(4);
      const int dim = 1 + static_cast<int>(r.next_u64() % 20);
      const int n = 1 + static_cast<int>(r.next_u64() % 100);
      const HilbertMcReport mc = hilbert_mc_check(dim, n, 120, r);
      report.hilbert_mc_pass = report.hilbert_mc_pass && mc.pass;
    }
  }
  return report;
}

nlohmann::json AppendixSuiteReport::to_json() const {
  nlohmann::json verdicts = nlohmann::json::array();
  auto entry = [&](const char* check, bool pass, const char* bound) {
    verdicts.push_back({{"check", check},
                        {"params", {{"instances", instances}}},
                        {"observed", pass ? "all instances hold" : "violation"},
                        {"bound", bound},
                        {"pass", pass}});
  };
  entry("scalar_bound", scalar_pass, "f(x) <= sqrt(lambda)/2");
  entry("ridge_shift", ridge_shift_pass,
        "|h_lambda - h0|_L2(mu) <= sqrt(lambda) |h0| / 2");
  entry("ridge_shift_monotone", ridge_monotone_pass,
        "error non-increasing as lambda decreases");
  entry("inverse_difference", inverse_difference_pass,
        "|(Q1+l)^-1 - (Q2+l)^-1|_op <= |Q1 - Q2|_op / l^2");
  entry("hilbert_mc", hilbert_mc_pass,
        "N E|mean - mu|^2 / E|b1 - mu|^2 = 1 within 3 sigma");
  return verdicts;
}

nlohmann::json RidgeShiftReport::to_json() const {
  nlohmann::json entries_json = nlohmann::json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"lambda", e.lambda},
                            {"observed", e.observed},
                            {"bound", e.bound},
                            {"pass", e.pass}});
  }
  return {{"check", "ridge_shift"},
          {"entries", std::move(entries_json)},
          {"errors_decay", errors_decay},
          {"pass", all_pass && errors_decay}};
}

nlohmann::json HilbertMcReport::to_json() const {
  return {{"check", "hilbert_mc"},
          {"observed", {{"vector_ratio", vector_ratio}, {"hs_ratio", hs_ratio}}},
          {"bound", {{"vector_band", vector_band}, {"hs_band", hs_band}}},
          {"pass", pass}};
}

nlohmann::json RateReport::to_json() const {
  return {{"check", "convergence_rate"},
          {"ns", ns},
          {"lambdas", lambdas},
          {"errors", errors},
          {"slope", slope},
          {"strictly_decreasing", strictly_decreasing},
          {"high_variance_flag", high_variance_flag}};
}

nlohmann::json LossLimitReport::to_json() const {
  return {{"check", "loss_limit"},
          {"ns", ns},
          {"lambdas", lambdas},
          {"losses", losses},
          {"oracle", oracle}};
}

}  // namespace minmc
