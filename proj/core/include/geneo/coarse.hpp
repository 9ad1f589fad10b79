#pragma once

#include <Eigen/Cholesky>
#include <limits>

#include "geneo/grid.hpp"
#include "geneo/schwarz.hpp"

namespace geneo {

/// Result of a per-subdomain generalized eigensolve, before and after mode
/// selection. Eigenvalues ascend; eigenvectors are 2-norm-unit local vectors.
struct EigenSelection {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;  // one column per converged eigenvalue
  int selected = 0;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  double next_eigenvalue = std::numeric_limits<double>::infinity();
  bool cap_bound = false;
  bool dense_fallback = false;
};

struct GeneoOptions {
  double rho = 1.0;          // threshold scale factor
  int k_max = 20;            // eigenpair cap per subdomain
  double shift_scale = 1e-6; // sigma = -shift_scale * trace(A)/n
  double residual_tol = 1e-8;
  int dense_fallback_dofs = 3000;
};

/// B = X A_overlap X with the partition-of-unity diagonal X.
SparseMatrix assemble_eigen_pencil(const SubdomainOperators& ops);

double default_shift(const SparseMatrix& a, double shift_scale);

/// Smallest eigenvalues of A p = lambda B p for semidefinite B, via
/// shift-and-invert Lanczos on (A+|sigma|B)^{-1}B in the B-inner product with
/// full reorthogonalization; dense congruence fallback below the dof limit.
/// The pencil is equilibrated by diag(A)^{-1/2} internally (a congruence, so
/// eigenvalues are exact) and sigma is rescaled with the mean diagonal.
/// Only pairs passing the residual check are returned.
EigenSelection solve_geneo(const SparseMatrix& a, const SparseMatrix& b, double sigma, int k_max,
                           double residual_tol = 1e-8, int dense_fallback_dofs = 3000);

struct SubdomainGeometry {
  double diam = 0.0;   // circumscribed-circle radius of the subdomain bounding box
  double width = 0.0;  // overlap depth times the minimal element extent across it
};

SubdomainGeometry subdomain_geometry(const StructuredGrid& grid,
                                     const OverlappingDecomposition& decomp, int subdomain);

/// Applies the geometric threshold tau = rho * diam / width to an ascending
/// eigenvalue list; fills selected / threshold / next_eigenvalue / cap_bound.
void select_modes(EigenSelection& eigs, const SubdomainGeometry& geom, double rho, int k_max);

struct EigenReportRow {
  int subdomain = 0;
  int k = 0;
  double lambda = 0.0;
  bool selected = false;
  double threshold = 0.0;
};

void write_eigen_report_csv(std::ostream& out, const std::vector<EigenReportRow>& rows);

/// Coarse space: per-subdomain basis slices (partition of unity applied,
/// supported away from artificial boundaries), the replicated coarse matrix,
/// and one factorization per worker.
struct CoarseSpace {
  std::vector<Matrix> basis;  // per subdomain: local dofs x m_j
  std::vector<int> offsets;   // size N+1, prefix sums of m_j
  Matrix a_coarse;            // symmetric N_H x N_H
  std::vector<Matrix> replicas;                         // one copy per worker
  std::vector<std::shared_ptr<Eigen::LLT<Matrix>>> factorizations;  // one per worker
  std::vector<int> dropped;   // global coarse indices removed by the pivot rule
  std::vector<EigenReportRow> report;

  int dim() const { return offsets.empty() ? 0 : offsets.back(); }
  int modes(int j) const { return offsets[j + 1] - offsets[j]; }
};

/// Computes A_H = R_H A R_H^T from local products (Phi_i^T Atilde_j) Phi_l
/// with neighbor-only basis-slice exchange and one tagged all-gather, then
/// replicates and factorizes per worker. Nearly dependent basis vectors are
/// dropped by a pivot rule (pivot <= 1e-12 * max pivot) and recorded.
void assemble_coarse_matrix(CoarseSpace& cs, const std::vector<SubdomainOperators>& ops,
                            SubdomainComm& comm);

CoarseSpace build_geneo_coarse_space(const std::vector<SubdomainOperators>& ops,
                                     const StructuredGrid& grid, SubdomainComm& comm,
                                     const GeneoOptions& opt);

/// Zero-energy-mode coarse space: per subdomain three translations and three
/// rotations about the centroid (elasticity), or one constant (diffusion),
/// partition-of-unity weighted and zeroed at global Dirichlet dofs.
CoarseSpace build_zem_coarse_space(const std::vector<SubdomainOperators>& ops,
                                   const StructuredGrid& grid, SubdomainComm& comm);

/// (R_H v)_i = Phi_i^T v: local dot products followed by a tagged all-gather.
Vector coarse_restrict(const CoarseSpace& cs, const std::vector<SubdomainOperators>& ops,
                       SubdomainComm& comm, const Vector& v);

/// R_H^T v_H: communication-free local contributions combined through the
/// usual neighbor consistency restoration.
Vector coarse_prolong(const CoarseSpace& cs, const SchwarzApplyEngine& engine, const Vector& v_h);

/// Two-level additive Schwarz: one-level corrections plus the coarse solve,
/// which every worker executes redundantly on its own replica.
class TwoLevelSchwarz {
 public:
  TwoLevelSchwarz(const std::vector<SubdomainOperators>& ops, SubdomainComm& comm,
                  int num_global_dofs, CoarseSpace coarse);
  Vector apply(const Vector& r) const;
  LinearOperator as_operator() const;

  const CoarseSpace& coarse() const { return coarse_; }
  const SchwarzApplyEngine& engine() const { return engine_; }
  long coarse_solves() const { return coarse_solves_; }

 private:
  SchwarzApplyEngine engine_;
  CoarseSpace coarse_;
  mutable long coarse_solves_ = 0;
};

}  // namespace geneo
