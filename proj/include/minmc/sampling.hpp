#pragma once
/**
 * @file sampling.hpp
 * @brief Parameter-measure sampling and joint sample construction.
 *
 * ParamSpace is a box Gamma with the product-uniform measure mu and an
 * equidistant evaluation grid. build_samples realizes the pre-averaging
 * scheme: for each Theta_i it draws M conditionally i.i.d. payoffs and
 * stores their mean, so the conditional variance of X_i is Var_theta(Y)/M.
 *
 * Payoff streams are derived per row index, so a parallel build would
 * produce exactly the sequential result; the draw counter audits that a
 * build consumes exactly M*N payoff draws.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "minmc/models.hpp"
#include "minmc/rng.hpp"

namespace minmc {

struct ParamSpace {
  std::vector<std::pair<double, double>> bounds;  // per-dimension [lo, hi]
  std::vector<int> grid_points;                   // per-dimension counts

  int dims() const { return static_cast<int>(bounds.size()); }
  void validate() const;

  static ParamSpace interval(double lo, double hi, int grid = 100);
  static ParamSpace box(std::vector<std::pair<double, double>> bounds,
                        std::vector<int> grid);

  /// Cartesian-product evaluation grid, one point per row, the last
  /// dimension varying fastest.
  Eigen::MatrixXd grid() const;
  /// Volume of the box (normalizing constant of mu).
  double volume() const;

  nlohmann::json to_json() const;
  static ParamSpace from_json(const nlohmann::json& j);
};

/// N i.i.d. draws from the product-uniform measure on the box (N x d).
Eigen::MatrixXd draw_thetas(const ParamSpace& space, int n, RngStream& rng);

struct SampleSet {
  Eigen::MatrixXd thetas;  // N x d
  Eigen::VectorXd xs;      // N pre-averaged payoffs
  int pre_average_width = 1;
  std::uint64_t seed = 0;       // provenance
  std::uint64_t stream_id = 0;  // provenance
  /// Total conditional payoff draws consumed while building (M*N audit).
  std::uint64_t payoff_draws = 0;

  Eigen::Index size() const { return xs.size(); }
  void validate() const;
};

/// Builds {(Theta_i, X_i)} with X_i the mean of M payoff draws from
/// P_{Theta_i}. Row i uses rng.substream(i), so results do not depend on
/// evaluation order.
SampleSet build_samples(const ModelSpec& model, const Eigen::MatrixXd& thetas,
                        int m, RngStream& rng);

/// CSV with header theta_1..theta_d,x,m (17 significant digits).
void write_samples_csv(const SampleSet& samples,
                       const std::filesystem::path& path);
SampleSet read_samples_csv(const std::filesystem::path& path);

}  // namespace minmc
