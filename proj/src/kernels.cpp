#include "minmc/kernels.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "minmc/rng.hpp"
#include "minmc/stats.hpp"

namespace minmc {

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Triangular: return "triangular";
    case KernelFamily::Laplace: return "laplace";
    case KernelFamily::Filipovic: return "filipovic";
    case KernelFamily::FeatureMapMC: return "feature_map";
  }
  throw std::logic_error("unknown kernel family");
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "triangular") return KernelFamily::Triangular;
  if (name == "laplace") return KernelFamily::Laplace;
  if (name == "filipovic") return KernelFamily::Filipovic;
  if (name == "feature_map") return KernelFamily::FeatureMapMC;
  throw std::invalid_argument("unknown kernel kind: " + name);
}

nlohmann::json NodeDistribution::to_json() const {
  if (kind == Kind::Gaussian) {
    return {{"kind", "gaussian"}};
  }
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& [lo, hi] : box) jb.push_back({lo, hi});
  return {{"kind", "uniform_box"}, {"box", std::move(jb)}};
}

NodeDistribution NodeDistribution::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "gaussian") return gaussian();
  if (kind == "uniform_box") {
    std::vector<std::pair<double, double>> box;
    for (const auto& b : j.at("box")) {
      box.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
    }
    return uniform_box(std::move(box));
  }
  throw std::invalid_argument("unknown node distribution: " + kind);
}

NodeDistribution NodeDistribution::uniform_box(
    std::vector<std::pair<double, double>> bounds) {
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) {
      throw std::invalid_argument("NodeDistribution: box needs lo < hi");
    }
  }
  NodeDistribution d;
  d.kind = Kind::UniformBox;
  d.box = std::move(bounds);
  return d;
}

FeatureNodes::FeatureNodes(Eigen::MatrixXd nodes, NodeDistribution distribution,
                           std::uint64_t seed)
    : nodes_(std::move(nodes)),
      distribution_(std::move(distribution)),
      seed_(seed) {}

FeatureNodes FeatureNodes::generate(int dim, int count,
                                    const NodeDistribution& distribution,
                                    std::uint64_t seed) {
  if (dim < 1 || count < 1) {
    throw std::invalid_argument("FeatureNodes: dim and count must be >= 1");
  }
  if (distribution.kind == NodeDistribution::Kind::UniformBox &&
      distribution.box.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("FeatureNodes: box bounds must match dim");
  }
  RngStream rng(seed, /*stream_id=*/0x6e6f6465);  // dedicated node stream
  Eigen::MatrixXd nodes(count, dim);
  for (int j = 0; j < count; ++j) {
    for (int c = 0; c < dim; ++c) {
      if (distribution.kind == NodeDistribution::Kind::Gaussian) {
        nodes(j, c) = rng.normal();
      } else {
        const auto& [lo, hi] = distribution.box[static_cast<std::size_t>(c)];
        nodes(j, c) = rng.uniform(lo, hi);
      }
    }
  }
  return FeatureNodes(std::move(nodes), distribution, seed);
}

Kernel Kernel::triangular() { return Kernel(KernelFamily::Triangular); }

Kernel Kernel::laplace(double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("laplace kernel: scale must be positive");
  }
  Kernel k(KernelFamily::Laplace);
  k.laplace_scale_ = scale;
  return k;
}

Kernel Kernel::filipovic() { return Kernel(KernelFamily::Filipovic); }

Kernel Kernel::feature_map(FeatureNodes nodes) {
  Kernel k(KernelFamily::FeatureMapMC);
  k.nodes_ = std::make_shared<const FeatureNodes>(std::move(nodes));
  return k;
}

int Kernel::dim() const {
  return family_ == KernelFamily::FeatureMapMC ? nodes_->dim() : 1;
}

const FeatureNodes& Kernel::nodes() const {
  if (!nodes_) {
    throw std::logic_error("kernel has no feature nodes");
  }
  return *nodes_;
}

double Kernel::diagonal_bound() const {
  switch (family_) {
    case KernelFamily::Triangular: return 1.0;
    case KernelFamily::Laplace: return laplace_scale_;
    case KernelFamily::Filipovic: return 2.0;
    case KernelFamily::FeatureMapMC:
      return static_cast<double>(dim());  // |tanh| <= 1 per coordinate
  }
  throw std::logic_error("unknown kernel family");
}

void Kernel::check_domain(const Eigen::VectorXd& p) const {
  if (p.size() != dim()) {
    throw std::invalid_argument("kernel: point dimension mismatch");
  }
  if (!p.allFinite()) {
    throw std::invalid_argument("kernel: point must be finite");
  }
  switch (family_) {
    case KernelFamily::Triangular:
      if (p[0] < 0.0 || p[0] > 1.0) {
        throw std::invalid_argument("triangular kernel: point outside [0,1]");
      }
      break;
    case KernelFamily::Filipovic:
      if (p[0] < 0.0) {
        throw std::invalid_argument("filipovic kernel: point outside [0,inf)");
      }
      break;
    case KernelFamily::Laplace:
    case KernelFamily::FeatureMapMC:
      break;
  }
}

double Kernel::eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  check_domain(x);
  check_domain(y);
  double value = 0.0;
  switch (family_) {
    case KernelFamily::Triangular:
      value = 1.0 - std::abs(x[0] - y[0]);
      break;
    case KernelFamily::Laplace:
      value = laplace_scale_ * std::exp(-std::abs(x[0] - y[0]));
      break;
    case KernelFamily::Filipovic:
      // 1 + int_0^{x^y} e^{-z} dz = 2 - exp(-min(x,y))
      value = 2.0 - std::exp(-std::min(x[0], y[0]));
      break;
    case KernelFamily::FeatureMapMC: {
      const Eigen::MatrixXd& u = nodes_->nodes();
      const double inv_d = 1.0 / static_cast<double>(u.rows());
      double acc = 0.0;
      for (Eigen::Index j = 0; j < u.rows(); ++j) {
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          acc += std::tanh(x[c] + u(j, c)) * std::tanh(y[c] + u(j, c));
        }
      }
      value = acc * inv_d;
      break;
    }
  }
  assert(std::abs(value) <= diagonal_bound() + 1e-12);
  return value;
}

double Kernel::eval(double x, double y) const {
  Eigen::VectorXd vx(1), vy(1);
  vx[0] = x;
  vy[0] = y;
  return eval(vx, vy);
}

SpdMatrix Kernel::gram(const Eigen::MatrixXd& points) const {
  if (points.rows() < 1) {
    throw std::invalid_argument("gram: need at least one point");
  }
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double v = eval(points.row(i).transpose(), points.row(j).transpose());
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return SpdMatrix(std::move(g));
}

nlohmann::json FeatureNodes::to_json() const {
  nlohmann::json j;
  j["dim"] = dim();
  j["node_count"] = count();
  j["node_seed"] = seed_;
  j["node_distribution"] = distribution_.to_json();
  return j;
}

FeatureNodes FeatureNodes::from_json(const nlohmann::json& j) {
  return generate(j.at("dim").get<int>(), j.at("node_count").get<int>(),
                  NodeDistribution::from_json(j.at("node_distribution")),
                  j.at("node_seed").get<std::uint64_t>());
}

nlohmann::json Kernel::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(family_);
  switch (family_) {
    case KernelFamily::Laplace:
      j["scale"] = laplace_scale_;
      break;
    case KernelFamily::FeatureMapMC:
      j.update(nodes_->to_json());
      break;
    default:
      break;
  }
  return j;
}

Kernel Kernel::from_json(const nlohmann::json& j) {
  switch (kernel_family_from_string(j.at("kind").get<std::string>())) {
    case KernelFamily::Triangular: return triangular();
    case KernelFamily::Laplace: return laplace(j.at("scale").get<double>());
    case KernelFamily::Filipovic: return filipovic();
    case KernelFamily::FeatureMapMC:
      return feature_map(FeatureNodes::from_json(j));
  }
  throw std::logic_error("unreachable");
}

double rkhs_inner_triangular(std::span<const double> f_values,
                             std::span<const double> g_values,
                             std::span<const double> grid) {
  const std::size_t n = grid.size();
  if (n < 101) {
    throw std::invalid_argument("rkhs_inner_triangular: grid too coarse");
  }
  if (f_values.size() != n || g_values.size() != n) {
    throw std::invalid_argument("rkhs_inner_triangular: length mismatch");
  }
  const double h = grid[1] - grid[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::abs((grid[i + 1] - grid[i]) - h) > 1e-9 * std::max(1.0, h)) {
      throw std::invalid_argument("rkhs_inner_triangular: grid must be uniform");
    }
  }

  auto derivative = [&](std::span<const double> y, std::size_t i) {
    if (i == 0) return (y[1] - y[0]) / h;
    if (i == n - 1) return (y[n - 1] - y[n - 2]) / h;
    return (y[i + 1] - y[i - 1]) / (2.0 * h);
  };

  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) {
    prod[i] = derivative(f_values, i) * derivative(g_values, i);
  }
  const double boundary = 0.5 * (f_values[n - 1] + f_values[0]) *
                          (g_values[n - 1] + g_values[0]);
  return boundary + 0.5 * trapezoid(prod, grid);
}

Eigen::MatrixXd feature_matrix(const FeatureNodes& nodes,
                               const Eigen::MatrixXd& points) {
  return detail::feature_matrix_with(nodes, points,
                                     [](double v) { return std::tanh(v); });
}

namespace detail {

Eigen::MatrixXd feature_matrix_with(const FeatureNodes& nodes,
                                    const Eigen::MatrixXd& points,
                                    double (*activation)(double)) {
  if (points.cols() != nodes.dim()) {
    throw std::invalid_argument("feature_matrix: point dimension mismatch");
  }
  const Eigen::Index n = points.rows();
  const Eigen::Index d = nodes.dim();
  const Eigen::Index count = nodes.count();
  const double inv_d = 1.0 / static_cast<double>(count);

  Eigen::MatrixXd a(n, count * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < count; ++j) {
      for (Eigen::Index c = 0; c < d; ++c) {
        a(i, j * d + c) =
            activation(points(i, c) + nodes.nodes()(j, c)) * inv_d;
      }
    }
  }
  return a;
}

}  // namespace detail

}  // namespace minmc
