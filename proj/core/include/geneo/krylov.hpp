#pragma once

#include <Eigen/SparseCholesky>
#include <functional>
#include <limits>

#include "geneo/common.hpp"

namespace geneo {

/// Matrix-free operator handle. Wrapped matrices must outlive the handle.
struct LinearOperator {
  Eigen::Index n = 0;
  std::function<void(const Vector&, Vector&)> apply_fn;

  Vector operator()(const Vector& x) const {
    Vector y(n);
    apply_fn(x, y);
    return y;
  }

  static LinearOperator identity(Eigen::Index n);
  static LinearOperator from_matrix(const SparseMatrix& A);
};

struct SolveReport {
  int iterations = 0;
  bool converged = false;
  /// Lanczos estimate of cond(M^-1 A) from the CG coefficients; NaN for FGMRES.
  double condition_estimate = std::numeric_limits<double>::quiet_NaN();
  /// Convergence-criterion norm relative to iteration zero (preconditioned
  /// residual norm for PCG, true residual norm for FGMRES); entry i is the
  /// value after i iterations, so entry 0 is always 1.
  std::vector<double> residual_history;
  /// Plain 2-norm relative residual, same indexing.
  std::vector<double> residual_history_2norm;
  /// ||b - A x|| / ||b||, recomputed after the solve.
  double final_relative_residual = 0;
};

/// Preconditioned conjugate gradients with a zero initial guess. Convergence
/// criterion: sqrt(r'z)/sqrt(r0'z0) <= tol. Throws NumericsError when the
/// operator or preconditioner loses positive definiteness; reaching max_it is
/// reported, not thrown.
SolveReport pcg(const LinearOperator& A, const LinearOperator& M, const Vector& b, Vector& x,
                double tol, int max_it);

/// Flexible right-preconditioned GMRES (the preconditioner may change from
/// iteration to iteration). Zero initial guess, true-residual convergence.
SolveReport fgmres(const LinearOperator& A, const LinearOperator& M, const Vector& b, Vector& x,
                   double tol, int max_it, int restart = 50);

/// Deterministic sparse LDLT factorization (fill-reducing AMD ordering).
/// A pivot d with d <= pivot_rtol * max(d) marks the matrix singular.
class SparseFactorization {
 public:
  explicit SparseFactorization(const SparseMatrix& A, double pivot_rtol = 1e-12);

  bool singular() const { return singular_; }
  double min_pivot() const { return min_pivot_; }
  double max_pivot() const { return max_pivot_; }
  Eigen::Index rows() const { return ldlt_.rows(); }

  /// Throws NumericsError when the factorization was singular.
  Vector solve(const Vector& b) const;
  void solve_in_place(const Vector& b, Vector& x) const;

 private:
  Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
  bool singular_ = false;
  double min_pivot_ = 0, max_pivot_ = 0;
};

}  // namespace geneo
