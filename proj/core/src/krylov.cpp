#include "geneo/krylov.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace geneo {

LinearOperator LinearOperator::identity(Eigen::Index n) {
  return {n, [](const Vector& x, Vector& y) { y = x; }};
}

LinearOperator LinearOperator::from_matrix(const SparseMatrix& A) {
  return {A.rows(), [&A](const Vector& x, Vector& y) { y.noalias() = A * x; }};
}

namespace {

/// Extremal eigenvalues of the CG Lanczos tridiagonal built from the
/// alpha/beta recurrence coefficients.
double lanczos_condition(const std::vector<double>& alpha, const std::vector<double>& beta) {
  const int m = static_cast<int>(alpha.size());
  if (m == 0) return std::numeric_limits<double>::quiet_NaN();
  Vector diag(m), sub(std::max(m - 1, 0));
  for (int k = 0; k < m; ++k) {
    diag[k] = 1.0 / alpha[k];
    if (k > 0) diag[k] += beta[k - 1] / alpha[k - 1];
    if (k + 1 < m) sub[k] = std::sqrt(beta[k]) / alpha[k];
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (lo <= 0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace

SolveReport pcg(const LinearOperator& A, const LinearOperator& M, const Vector& b, Vector& x,
                double tol, int max_it) {
  SolveReport rep;
  x = Vector::Zero(A.n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }

  Vector r = b;
  Vector z(A.n), q(A.n);
  M.apply_fn(r, z);
  double rz = r.dot(z);
  if (!(rz > 0)) throw NumericsError("pcg: preconditioner is not positive definite (r'z <= 0)");
  const double rz0 = rz;
  Vector p = z;
  rep.residual_history.push_back(1.0);  // entry i = relative residual after i iterations
  rep.residual_history_2norm.push_back(1.0);

  std::vector<double> alphas, betas;
  for (int k = 1; k <= max_it; ++k) {
    A.apply_fn(p, q);
    const double pq = p.dot(q);
    if (!(pq > 0)) throw NumericsError("pcg: operator is not positive definite (p'Ap <= 0)");
    const double alpha = rz / pq;
    alphas.push_back(alpha);
    x += alpha * p;
    r -= alpha * q;
    rep.residual_history_2norm.push_back(r.norm() / bnorm);

    M.apply_fn(r, z);
    const double rz_new = r.dot(z);
    if (rz_new < 0) throw NumericsError("pcg: preconditioner is not positive definite (r'z < 0)");
    const double rel = std::sqrt(rz_new / rz0);
    rep.residual_history.push_back(rel);
    rep.iterations = k;
    if (rel <= tol) {
      rep.converged = true;
      break;
    }
    const double beta = rz_new / rz;
    betas.push_back(beta);
    p = z + beta * p;
    rz = rz_new;
  }

  rep.condition_estimate = lanczos_condition(alphas, betas);
  rep.final_relative_residual = (b - A(x)).norm() / bnorm;
  return rep;
}

SolveReport fgmres(const LinearOperator& A, const LinearOperator& M, const Vector& b, Vector& x,
                   double tol, int max_it, int restart) {
  SolveReport rep;
  x = Vector::Zero(A.n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    rep.converged = true;
    return rep;
  }
  if (restart < 1) throw ConfigError("fgmres: restart must be >= 1");

  Vector r = b;
  int total_it = 0;
  rep.residual_history.push_back(1.0);  // entry i = relative residual after i iterations
  rep.residual_history_2norm.push_back(1.0);
  while (total_it < max_it && !rep.converged) {
    const double beta = r.norm();
    if (beta / bnorm <= tol) {
      rep.converged = true;
      break;
    }
    const int m = std::min(restart, max_it - total_it);
    Matrix V(A.n, m + 1), Z(A.n, m);
    Matrix H = Matrix::Zero(m + 1, m);
    Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
    Vector g = Vector::Zero(m + 1);
    V.col(0) = r / beta;
    g[0] = beta;

    int j = 0;
    for (; j < m; ++j) {
      Vector z(A.n), w(A.n);
      M.apply_fn(V.col(j), z);
      Z.col(j) = z;
      A.apply_fn(z, w);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H(i, j) = w.dot(V.col(i));
        w -= H(i, j) * V.col(i);
      }
      H(j + 1, j) = w.norm();
      const bool breakdown = H(j + 1, j) < 1e-14 * beta;
      if (!breakdown) V.col(j + 1) = w / H(j + 1, j);

      // apply accumulated Givens rotations, then create the new one
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      const double denom = std::hypot(H(j, j), H(j + 1, j));
      cs[j] = H(j, j) / denom;
      sn[j] = H(j + 1, j) / denom;
      H(j, j) = denom;
      H(j + 1, j) = 0;
      g[j + 1] = -sn[j] * g[j];
      g[j] *= cs[j];

      ++total_it;
      const double rel = std::abs(g[j + 1]) / bnorm;
      rep.residual_history.push_back(rel);
      rep.residual_history_2norm.push_back(rel);  // right preconditioning: true residual
      rep.iterations = total_it;
      if (rel <= tol || breakdown) {
        rep.converged = rel <= tol;
        ++j;
        break;
      }
    }

    // x += Z * y with H(0:j,0:j) y = g(0:j)
    if (j > 0) {
      Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
      x.noalias() += Z.leftCols(j) * y;
    }
    r = b - A(x);
    if (r.norm() / bnorm <= tol) rep.converged = true;
  }

  rep.final_relative_residual = (b - A(x)).norm() / bnorm;
  return rep;
}

SparseFactorization::SparseFactorization(const SparseMatrix& A, double pivot_rtol) {
  if (A.rows() != A.cols()) throw ConfigError("SparseFactorization: matrix must be square");
  ldlt_.compute(A);
  if (ldlt_.info() != Eigen::Success) {
    singular_ = true;
    return;
  }
  const Vector d = ldlt_.vectorD();
  if (d.size() == 0) return;
  max_pivot_ = d.maxCoeff();
  min_pivot_ = d.minCoeff();
  if (!(max_pivot_ > 0) || min_pivot_ <= pivot_rtol * max_pivot_) singular_ = true;
}

Vector SparseFactorization::solve(const Vector& b) const {
  Vector x;
  solve_in_place(b, x);
  return x;
}

void SparseFactorization::solve_in_place(const Vector& b, Vector& x) const {
  if (singular_)
    throw NumericsError("SparseFactorization: matrix reported singular (min pivot " +
                        std::to_string(min_pivot_) + ", max pivot " + std::to_string(max_pivot_) +
                        "); no solve performed");
  x = ldlt_.solve(b);
}

}  // namespace geneo
