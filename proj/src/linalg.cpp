#include "minmc/linalg.hpp"

#include <cmath>

namespace minmc {

SpdMatrix::SpdMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() == 0 || entries_.rows() != entries_.cols()) {
    throw std::invalid_argument("SpdMatrix: square non-empty matrix required");
  }
  if (!entries_.allFinite()) {
    throw std::invalid_argument("SpdMatrix: entries must be finite");
  }
  const double scale = entries_.cwiseAbs().maxCoeff();
  const double asym = (entries_ - entries_.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-12 * scale) {
    throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
  }
  // Remove the (tiny) asymmetry so downstream factorizations see an exactly
  // symmetric matrix.
  entries_ = ((entries_ + entries_.transpose()) / 2.0).eval();
}

double SpdMatrix::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entries_,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool SpdMatrix::is_numerically_psd() const {
  return min_eigenvalue() >= -1e-10 * trace() / static_cast<double>(dim());
}

namespace {

constexpr double kResidualTol = 1e-8;
constexpr int kMaxJitterEscalations = 3;

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& b) {
  const double bn = b.norm();
  const double rn = (a * x - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

}  // namespace

Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() != b.size()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  if (b.norm() == 0.0) {
    return Eigen::VectorXd::Zero(b.size());
  }

  const double dim = static_cast<double>(a.rows());
  double jitter = 1e-12 * a.trace() / dim;

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    Eigen::VectorXd x = llt.solve(b);
    if (relative_residual(a, x, b) <= kResidualTol) {
      return x;
    }
  }

  for (int attempt = 0; attempt <= kMaxJitterEscalations; ++attempt) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = llt.solve(b);
      if (relative_residual(a, x, b) <= kResidualTol) {
        return x;
      }
    }
    jitter *= 10.0;
  }
  throw SingularMatrixError(
      "solve_spd: Cholesky failed after jitter escalation");
}

Eigen::VectorXd solve_spd(const SpdMatrix& a, const Eigen::VectorXd& b) {
  return solve_spd(a.entries(), b);
}

Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows()) {
    throw std::invalid_argument("solve_spd: dimension mismatch");
  }
  const double dim = static_cast<double>(a.rows());
  double jitter = 1e-12 * a.trace() / dim;

  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    return llt.solve(b);
  }
  for (int attempt = 0; attempt <= kMaxJitterEscalations; ++attempt) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) {
      return llt.solve(b);
    }
    jitter *= 10.0;
  }
  throw SingularMatrixError(
      "solve_spd: Cholesky failed after jitter escalation");
}

double operator_norm_sym(const Eigen::MatrixXd& a, int max_iters, double tol) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("operator_norm_sym: square matrix required");
  }
  const Eigen::Index n = a.rows();

  // Power iteration on A^2: sign-insensitive, and the Rayleigh quotient
  // v^T A^2 v = |A v|^2 is sandwiched between the top two eigenvalues of
  // A^2, so the estimate degrades gracefully on clustered spectra.
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) * 1.337 + 0.7);
  }
  v.normalize();

  double norm_est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd av = a * v;
    const double next = av.norm();  // sqrt of the A^2 Rayleigh quotient
    if (next <= 1e-300) {
      return 0.0;
    }
    const Eigen::VectorXd aav = a * av;
    const double aav_norm = aav.norm();
    if (aav_norm <= 1e-300) {
      return next;
    }
    v = aav / aav_norm;
    if (std::abs(next - norm_est) <= tol * std::max(1.0, next)) {
      return next;
    }
    norm_est = next;
  }
  return norm_est;
}

}  // namespace minmc
