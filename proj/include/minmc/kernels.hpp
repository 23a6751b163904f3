#pragma once
/**
 * @file kernels.hpp
 * @brief Reproducing kernels and feature maps used by the estimators.
 *
 * Four kernel families are supported:
 *   - Triangular on [0,1]:            k(x,y) = 1 - |x-y|
 *   - Laplace on R (scale c):         k(x,y) = c * exp(-|x-y|)
 *   - Filipovic on [0,inf), w(z)=e^z: k(x,y) = 2 - exp(-min(x,y))
 *   - FeatureMapMC on R^d:            k(x,y) = (1/D) sum_j <tanh(x+u_j), tanh(y+u_j)>
 * where the tanh in the last line acts component-wise on R^d and <.,.> is
 * the R^d dot product, so the Monte Carlo kernel is a sum of per-coordinate
 * kernels. For d = 1 this reduces to (1/D) sum_j tanh(x+u_j) tanh(y+u_j).
 *
 * The triangular kernel's RKHS inner product
 *   <f,g> = 1/2 (f(1)+f(0))(g(1)+g(0)) + 1/2 int_0^1 f'(x) g'(x) dx
 * is exposed in a finite-difference form for property tests.
 */

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "minmc/linalg.hpp"

namespace minmc {

enum class KernelFamily { Triangular, Laplace, Filipovic, FeatureMapMC };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

/// Law of the feature nodes u_1..u_D (the measure R of the feature map).
struct NodeDistribution {
  enum class Kind { Gaussian, UniformBox };
  Kind kind = Kind::Gaussian;
  /// Per-dimension [lo, hi]; used only for UniformBox.
  std::vector<std::pair<double, double>> box;

  static NodeDistribution gaussian() { return {}; }
  static NodeDistribution uniform_box(
      std::vector<std::pair<double, double>> bounds);

  nlohmann::json to_json() const;
  static NodeDistribution from_json(const nlohmann::json& j);
};

/// Monte Carlo feature nodes: D points in R^d, reproducible from the seed.
class FeatureNodes {
 public:
  static FeatureNodes generate(int dim, int count,
                               const NodeDistribution& distribution,
                               std::uint64_t seed);

  int dim() const { return static_cast<int>(nodes_.cols()); }
  int count() const { return static_cast<int>(nodes_.rows()); }
  /// D x d matrix, one node per row.
  const Eigen::MatrixXd& nodes() const { return nodes_; }
  const NodeDistribution& distribution() const { return distribution_; }
  std::uint64_t seed() const { return seed_; }

  nlohmann::json to_json() const;
  static FeatureNodes from_json(const nlohmann::json& j);

 private:
  FeatureNodes(Eigen::MatrixXd nodes, NodeDistribution distribution,
               std::uint64_t seed);

  Eigen::MatrixXd nodes_;
  NodeDistribution distribution_;
  std::uint64_t seed_;
};

/// A kernel instance (family + parameters). Immutable and cheap to copy.
class Kernel {
 public:
  static Kernel triangular();
  static Kernel laplace(double scale);
  static Kernel filipovic();
  static Kernel feature_map(FeatureNodes nodes);

  KernelFamily family() const { return family_; }
  int dim() const;
  double laplace_scale() const { return laplace_scale_; }
  const FeatureNodes& nodes() const;

  /// k(x, y). Throws std::invalid_argument if a point is outside the
  /// kernel's domain.
  double eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  double eval(double x, double y) const;

  /// Gram matrix G_ij = k(p_i, p_j) for the rows of `points` (N x d).
  /// The upper triangle is computed and mirrored.
  SpdMatrix gram(const Eigen::MatrixXd& points) const;

  /// Bound on k(t,t) over the supported domain (assumption A1 surrogate).
  double diagonal_bound() const;

  nlohmann::json to_json() const;
  static Kernel from_json(const nlohmann::json& j);

 private:
  explicit Kernel(KernelFamily family) : family_(family) {}

  void check_domain(const Eigen::VectorXd& p) const;

  KernelFamily family_;
  double laplace_scale_ = 1.0;
  std::shared_ptr<const FeatureNodes> nodes_;
};

/// Triangular-RKHS inner product of two functions sampled on a uniform grid
/// over [0,1] (>= 101 points): boundary term plus trapezoid quadrature of
/// f'g' with central differences (one-sided at the endpoints).
double rkhs_inner_triangular(std::span<const double> f_values,
                             std::span<const double> g_values,
                             std::span<const double> grid);

/// N x (D*d) feature matrix A with A_{i,(j,c)} = tanh(theta_{i,c} + u_{j,c}) / D,
/// columns flattened node-major ((j,c) -> j*d + c). Row i dotted with a
/// weight vector g realizes the Monte Carlo inner product E_R[<g, phi_theta>].
Eigen::MatrixXd feature_matrix(const FeatureNodes& nodes,
                               const Eigen::MatrixXd& points);

namespace detail {
/// Activation-generic variant (test hook; the public surface is tanh).
Eigen::MatrixXd feature_matrix_with(const FeatureNodes& nodes,
                                    const Eigen::MatrixXd& points,
                                    double (*activation)(double));
}  // namespace detail

}  // namespace minmc
