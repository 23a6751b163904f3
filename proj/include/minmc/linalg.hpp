#pragma once
/**
 * @file linalg.hpp
 * @brief Dense symmetric positive semidefinite matrices and solves.
 *
 * Backed by Eigen. solve_spd is a Cholesky solve with a diagonal-jitter
 * retry: if the factorization fails (or the residual is poor), a jitter of
 * 1e-12 * trace/dim is added and escalated by x10 at most three times
 * before giving up with SingularMatrixError.
 */

#include <Eigen/Dense>
#include <stdexcept>

namespace minmc {

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense symmetric matrix intended to be numerically PSD.
/// The constructor enforces symmetry (1e-12 relative tolerance) and
/// rejects NaN/Inf; eigenvalue-level PSD checks are exposed separately
/// because they cost O(dim^3).
class SpdMatrix {
 public:
  explicit SpdMatrix(Eigen::MatrixXd entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  double trace() const { return entries_.trace(); }

  /// Smallest eigenvalue (self-adjoint solver); test/validation use.
  double min_eigenvalue() const;
  /// Numerically PSD: min eigenvalue >= -1e-10 * trace/dim.
  bool is_numerically_psd() const;

 private:
  Eigen::MatrixXd entries_;
};

/// Solves A x = b for numerically PSD A. Relative residual of the returned
/// solution is at most 1e-8; otherwise SingularMatrixError is thrown after
/// the jitter escalation path is exhausted.
Eigen::VectorXd solve_spd(const SpdMatrix& a, const Eigen::VectorXd& b);

/// Same contract, without the SpdMatrix wrapper (symmetric input assumed).
Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Multi-RHS variant, shares the factorization.
Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Operator (spectral) norm of a symmetric matrix by power iteration.
double operator_norm_sym(const Eigen::MatrixXd& a, int max_iters = 50,
                         double tol = 1e-10);

}  // namespace minmc
