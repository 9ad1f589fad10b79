#include "geneo/coarse.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace geneo {

namespace {

double matrix_inf_norm(const SparseMatrix& m) {
  Vector row_sums = Vector::Zero(m.rows());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      row_sums[it.row()] += std::abs(it.value());
  return row_sums.size() == 0 ? 0.0 : row_sums.maxCoeff();
}

struct PencilPairs {
  std::vector<double> lambdas;
  std::vector<Vector> vectors;
  bool exhausted = false;  // the Lanczos run hit an invariant subspace
};

// D M D for diagonal D, built so the result is exactly symmetric when M is.
SparseMatrix scale_congruence(const SparseMatrix& m, const Vector& d) {
  SparseMatrix out(m.rows(), m.cols());
  std::vector<Triplet> triplets;
  triplets.reserve(m.nonZeros());
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                            it.value() * (d[it.row()] * d[it.col()]));
  out.setFromTriplets(triplets.begin(), triplets.end());
  out.makeCompressed();
  return out;
}

// Accepts Ritz pairs in ascending-lambda order while the explicit residual
// passes; stops at the first failure so the returned list is a true prefix of
// the spectrum.
void harvest_pairs(const std::vector<double>& thetas, const Matrix& theta_vectors,
                   const std::vector<Vector>& basis, const SparseMatrix& a, const SparseMatrix& b,
                   const SparseFactorization* refine, double abs_sigma, double a_norm,
                   double b_norm, int k_max, double residual_tol, PencilPairs& out) {
  const int m = static_cast<int>(thetas.size());
  for (int i = m - 1; i >= 0; --i) {
    if (static_cast<int>(out.lambdas.size()) >= k_max) break;
    const double theta = thetas[i];
    if (theta <= 1e-300) break;  // remaining pencil eigenvalues are effectively infinite
    double lambda = 1.0 / theta - abs_sigma;
    if (lambda < -1e-10 * a_norm) continue;
    if (lambda < 0.0) lambda = 0.0;
    Vector p = Vector::Zero(a.rows());
    if (basis.empty()) {
      p = theta_vectors.col(i);
    } else {
      for (std::size_t j = 0; j < basis.size(); ++j) p += theta_vectors(static_cast<int>(j), i) * basis[j];
    }
    const double pn = p.norm();
    if (!(pn > 0.0)) continue;
    p /= pn;
    if (refine) {
      // One inverse-iteration sweep scrubs the null(B) drift that the B inner
      // product cannot see; without it near-singular pencils fail the residual
      // test even though the Ritz values are converged.
      Vector q = refine->solve(b * p);
      const double qn = q.norm();
      if (qn > 0.0) p = q / qn;
    }
    const double resid = (a * p - lambda * (b * p)).norm();
    if (resid > residual_tol * (a_norm + lambda * b_norm)) break;
    out.lambdas.push_back(lambda);
    out.vectors.push_back(std::move(p));
  }
}

PencilPairs lanczos_pass(const SparseMatrix& a, const SparseMatrix& b,
                         const SparseFactorization& shifted, double abs_sigma, int k_max,
                         int steps, double residual_tol, double a_norm, double b_norm) {
  PencilPairs out;
  const int n = static_cast<int>(a.rows());
  steps = std::min(steps, n);

  std::mt19937 rng(0x9e3779b9u ^ static_cast<unsigned>(n));
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector z(n);
  for (int i = 0; i < n; ++i) z[i] = dist(rng);

  // Start in range((A+|s|B)^{-1} B) so modes outside range(B) never enter.
  Vector v = shifted.solve(b * z);
  Vector bv = b * v;
  double nrm2 = v.dot(bv);
  if (!(nrm2 > 0.0)) {
    out.exhausted = true;  // B vanishes on the reachable space
    return out;
  }
  const double nrm = std::sqrt(nrm2);
  v /= nrm;
  bv /= nrm;

  std::vector<Vector> basis{v}, b_basis{bv};
  std::vector<double> alpha, beta;
  bool exhausted = false;
  for (int k = 0; k < steps; ++k) {
    Vector w = shifted.solve(b_basis[k]);
    if (k > 0) w -= beta[k - 1] * basis[k - 1];
    const double ak = w.dot(b_basis[k]);
    w -= ak * basis[k];
    alpha.push_back(ak);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < basis.size(); ++i) w -= w.dot(b_basis[i]) * basis[i];
    Vector bw = b * w;
    const double bk2 = w.dot(bw);
    const double bk = bk2 > 0.0 ? std::sqrt(bk2) : 0.0;
    if (bk <= 1e-12 * (1.0 + std::abs(ak))) {
      exhausted = true;
      break;
    }
    if (k + 1 == steps) break;
    beta.push_back(bk);
    basis.push_back(w / bk);
    b_basis.push_back(bw / bk);
  }

  const int m = static_cast<int>(alpha.size());
  Vector diag = Eigen::Map<Vector>(alpha.data(), m);
  Vector sub = m > 1 ? Vector(Eigen::Map<Vector>(beta.data(), m - 1)) : Vector();
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success)
    throw NumericsError("solve_geneo: tridiagonal eigensolve failed");
  std::vector<double> thetas(es.eigenvalues().data(), es.eigenvalues().data() + m);
  harvest_pairs(thetas, es.eigenvectors(), basis, a, b, &shifted, abs_sigma, a_norm, b_norm,
                k_max, residual_tol, out);
  out.exhausted = exhausted;
  return out;
}

PencilPairs dense_pass(const SparseMatrix& a, const SparseMatrix& b, double abs_sigma, int k_max,
                       double residual_tol, double a_norm, double b_norm) {
  const int n = static_cast<int>(a.rows());
  Matrix ad = Matrix(a);
  Matrix bd = Matrix(b);
  Matrix c = ad + abs_sigma * bd;
  c = 0.5 * (c + c.transpose()).eval();
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success)
    throw NumericsError("solve_geneo: shifted pencil matrix is not positive definite");
  Matrix l = llt.matrixL();
  Matrix y = l.triangularView<Eigen::Lower>().solve(bd);
  Matrix m = l.triangularView<Eigen::Lower>().solve(y.transpose());
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericsError("solve_geneo: dense eigensolve failed");

  Matrix u = l.transpose();
  Matrix vectors(n, n);
  for (int i = 0; i < n; ++i)
    vectors.col(i) = u.triangularView<Eigen::Upper>().solve(es.eigenvectors().col(i));
  std::vector<double> thetas(es.eigenvalues().data(), es.eigenvalues().data() + n);
  PencilPairs out;
  harvest_pairs(thetas, vectors, {}, a, b, nullptr, abs_sigma, a_norm, b_norm, k_max,
                residual_tol, out);
  out.exhausted = true;  // the dense solve sees the whole spectrum
  return out;
}

// Maps the equilibrated eigenvectors back to the original variables and packs
// them; eigenvalues transfer unchanged under the congruence.
EigenSelection pack_selection(PencilPairs&& pairs, bool dense, const Vector& descale) {
  EigenSelection sel;
  sel.dense_fallback = dense;
  sel.eigenvalues = std::move(pairs.lambdas);
  const int k = static_cast<int>(sel.eigenvalues.size());
  if (k > 0) {
    sel.eigenvectors.resize(pairs.vectors[0].size(), k);
    for (int i = 0; i < k; ++i) {
      Vector q = descale.cwiseProduct(pairs.vectors[i]);
      const double qn = q.norm();
      sel.eigenvectors.col(i) = qn > 0.0 ? Vector(q / qn) : pairs.vectors[i];
    }
  }
  return sel;
}

}  // namespace

SparseMatrix assemble_eigen_pencil(const SubdomainOperators& ops) {
  const SparseMatrix& a_ov = ops.a_overlap_neumann;
  SparseMatrix b(a_ov.rows(), a_ov.cols());
  std::vector<Triplet> triplets;
  triplets.reserve(a_ov.nonZeros());
  for (int k = 0; k < a_ov.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a_ov, k); it; ++it) {
      const double v = ops.pou[it.row()] * it.value() * ops.pou[it.col()];
      if (v != 0.0) triplets.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), v);
    }
  }
  b.setFromTriplets(triplets.begin(), triplets.end());
  SparseMatrix bt = SparseMatrix(b.transpose());
  b = 0.5 * (b + bt);
  b.makeCompressed();
  return b;
}

double default_shift(const SparseMatrix& a, double shift_scale) {
  const int n = static_cast<int>(a.rows());
  if (n == 0) return 0.0;
  return -shift_scale * a.diagonal().sum() / n;
}

EigenSelection solve_geneo(const SparseMatrix& a, const SparseMatrix& b, double sigma, int k_max,
                           double residual_tol, int dense_fallback_dofs) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw ConfigError("solve_geneo: pencil matrices must be square and of equal size");
  const int n = static_cast<int>(a.rows());
  if (k_max <= 0 || n == 0 || b.nonZeros() == 0) return {};

  // Equilibrate the pencil: (A, B) -> (DAD, DBD) with D = diag(A)^{-1/2} is a
  // congruence, so the eigenvalues are preserved exactly while the coefficient
  // contrast disappears from the factorization and from the shift placement.
  // The shift scales with the mean diagonal so the caller-visible contract
  // (sigma proportional to trace(A)/n) carries over to the scaled operator.
  Vector descale(n);
  const Vector adiag = a.diagonal();
  for (int i = 0; i < n; ++i) descale[i] = adiag[i] > 0.0 ? 1.0 / std::sqrt(adiag[i]) : 1.0;
  const SparseMatrix ah = scale_congruence(a, descale);
  const SparseMatrix bh = scale_congruence(b, descale);

  double abs_sigma = std::abs(sigma);
  const double mean_diag = adiag.sum() / n;
  const double mean_diag_h = ah.diagonal().sum() / n;
  if (mean_diag > 0.0 && mean_diag_h > 0.0) abs_sigma *= mean_diag_h / mean_diag;

  const double a_norm = matrix_inf_norm(ah);
  const double b_norm = matrix_inf_norm(bh);
  SparseMatrix c = ah + abs_sigma * bh;

  std::unique_ptr<SparseFactorization> shifted;
  try {
    shifted = std::make_unique<SparseFactorization>(c);
  } catch (const NumericsError&) {
    shifted.reset();
  }
  if (!shifted || shifted->singular()) {
    if (n <= dense_fallback_dofs)
      return pack_selection(dense_pass(ah, bh, abs_sigma, k_max, residual_tol, a_norm, b_norm),
                            true, descale);
    throw NumericsError("solve_geneo: shifted matrix A + |sigma| B is singular");
  }

  PencilPairs pairs = lanczos_pass(ah, bh, *shifted, abs_sigma, k_max,
                                   std::max(3 * k_max, 60), residual_tol, a_norm, b_norm);
  if (static_cast<int>(pairs.lambdas.size()) < k_max && !pairs.exhausted) {
    PencilPairs retry = lanczos_pass(ah, bh, *shifted, abs_sigma, k_max,
                                     std::max(6 * k_max + 30, 150), residual_tol, a_norm, b_norm);
    if (retry.lambdas.size() > pairs.lambdas.size()) pairs = std::move(retry);
  }
  // Fall back to the dense congruence whenever Lanczos came up short and the
  // problem is small enough, including after an invariant-subspace breakdown:
  // a single Krylov vector reaches one direction per eigenspace, so an early
  // breakdown can hide the multiplicity of degenerate eigenvalues (rigid body
  // modes of floating subdomains are sixfold).
  if (static_cast<int>(pairs.lambdas.size()) < k_max && n <= dense_fallback_dofs) {
    return pack_selection(dense_pass(ah, bh, abs_sigma, k_max, residual_tol, a_norm, b_norm),
                          true, descale);
  }
  return pack_selection(std::move(pairs), false, descale);
}

SubdomainGeometry subdomain_geometry(const StructuredGrid& grid,
                                     const OverlappingDecomposition& decomp, int subdomain) {
  SubdomainGeometry geom;
  const auto& nodes = decomp.subdomain_nodes[subdomain];
  if (nodes.empty()) return geom;
  Vector3 lo = grid.node_coordinates[nodes[0]];
  Vector3 hi = lo;
  for (int node : nodes) {
    lo = lo.cwiseMin(grid.node_coordinates[node]);
    hi = hi.cwiseMax(grid.node_coordinates[node]);
  }
  geom.diam = 0.5 * (hi - lo).norm();

  double min_ext = std::numeric_limits<double>::infinity();
  for (int cell : decomp.overlap_cells[subdomain]) {
    const Vector3 ext = grid.cell_extents(cell);
    for (int d = 0; d < 3; ++d)
      if (decomp.shape[d] > 1) min_ext = std::min(min_ext, ext[d]);
  }
  if (std::isfinite(min_ext)) geom.width = decomp.overlap * min_ext;
  return geom;
}

void select_modes(EigenSelection& eigs, const SubdomainGeometry& geom, double rho, int k_max) {
  if (!(geom.width > 0.0)) {
    eigs.threshold = std::numeric_limits<double>::quiet_NaN();
    eigs.selected = 0;
    eigs.next_eigenvalue = eigs.eigenvalues.empty() ? std::numeric_limits<double>::infinity()
                                                    : eigs.eigenvalues.front();
    return;
  }
  eigs.threshold = rho * geom.diam / geom.width;
  int m = 0;
  while (m < static_cast<int>(eigs.eigenvalues.size()) && eigs.eigenvalues[m] <= eigs.threshold)
    ++m;
  eigs.cap_bound = m >= k_max;
  eigs.selected = std::min(m, k_max);
  eigs.next_eigenvalue = eigs.selected < static_cast<int>(eigs.eigenvalues.size())
                             ? eigs.eigenvalues[eigs.selected]
                             : std::numeric_limits<double>::infinity();
}

void write_eigen_report_csv(std::ostream& out, const std::vector<EigenReportRow>& rows) {
  out << "subdomain,k,lambda,selected,threshold\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.subdomain << ',' << r.k << ',' << r.lambda << ',' << (r.selected ? 1 : 0) << ','
        << r.threshold << '\n';
}

namespace {

// Sorted intersection of two subdomains' node lists, expanded to dof ids in
// the local numbering of each side. Both sides compute the same order.
void shared_dofs(const OverlappingDecomposition& decomp, int j, int l, int block_size,
                 std::vector<int>& local_j, std::vector<int>& local_l) {
  const auto& nj = decomp.subdomain_nodes[j];
  const auto& nl = decomp.subdomain_nodes[l];
  local_j.clear();
  local_l.clear();
  std::size_t a = 0, b = 0;
  while (a < nj.size() && b < nl.size()) {
    if (nj[a] < nl[b]) {
      ++a;
    } else if (nl[b] < nj[a]) {
      ++b;
    } else {
      for (int r = 0; r < block_size; ++r) {
        local_j.push_back(static_cast<int>(a) * block_size + r);
        local_l.push_back(static_cast<int>(b) * block_size + r);
      }
      ++a;
      ++b;
    }
  }
}

// Greedy incremental Cholesky: keeps columns whose pivot stays above
// 1e-12 times the largest pivot seen, dropping offenders as they appear.
std::vector<int> pivot_keep_list(const Matrix& a_h, std::vector<int>& dropped) {
  const int n = static_cast<int>(a_h.rows());
  std::vector<int> keep;
  Matrix l(n, n);  // lower factor over kept columns
  double max_pivot = 0.0;
  for (int k = 0; k < n; ++k) {
    const int m = static_cast<int>(keep.size());
    Vector w(m);
    for (int i = 0; i < m; ++i) w[i] = a_h(keep[i], k);
    l.topLeftCorner(m, m)
        .triangularView<Eigen::Lower>()
        .solveInPlace(w);
    const double pivot = a_h(k, k) - w.squaredNorm();
    if (pivot <= 1e-12 * std::max(max_pivot, a_h(k, k)) || !(pivot > 0.0)) {
      dropped.push_back(k);
      continue;
    }
    max_pivot = std::max(max_pivot, pivot);
    l.block(m, 0, 1, m) = w.transpose();
    l(m, m) = std::sqrt(pivot);
    keep.push_back(k);
  }
  return keep;
}

CoarseSpace init_coarse(const std::vector<SubdomainOperators>& ops) {
  CoarseSpace cs;
  cs.basis.resize(ops.size());
  cs.offsets.assign(ops.size() + 1, 0);
  return cs;
}

void finalize_offsets(CoarseSpace& cs) {
  for (std::size_t j = 0; j < cs.basis.size(); ++j)
    cs.offsets[j + 1] = cs.offsets[j] + static_cast<int>(cs.basis[j].cols());
}

}  // namespace

void assemble_coarse_matrix(CoarseSpace& cs, const std::vector<SubdomainOperators>& ops,
                            SubdomainComm& comm) {
  const auto& decomp = comm.decomposition();
  const int n = static_cast<int>(ops.size());
  finalize_offsets(cs);
  const int n_h = cs.dim();
  cs.a_coarse.resize(0, 0);
  cs.replicas.clear();
  cs.factorizations.clear();
  if (n_h == 0) return;

  std::vector<Matrix> products(n);  // Atilde_j * Phi_j
  comm.parallel_for(n, [&](int j) {
    if (cs.basis[j].cols() > 0) products[j] = ops[j].a_submatrix * cs.basis[j];
  });

  // Ship basis slices on shared dofs to every neighbor (column-major flatten).
  SubdomainComm::Mailbox outbox(n);
  for (int j = 0; j < n; ++j) {
    if (cs.basis[j].cols() == 0) continue;
    for (int l : decomp.neighbors[j]) {
      std::vector<int> lj, ll;
      shared_dofs(decomp, j, l, ops[j].block_size, lj, ll);
      if (lj.empty()) continue;
      Vector payload(static_cast<int>(lj.size()) * cs.basis[j].cols());
      int pos = 0;
      for (int c = 0; c < cs.basis[j].cols(); ++c)
        for (int idx : lj) payload[pos++] = cs.basis[j](idx, c);
      outbox[j].emplace_back(l, std::move(payload));
    }
  }
  SubdomainComm::Mailbox inbox = comm.neighbor_exchange(outbox);

  std::vector<Matrix> row_blocks(n);
  comm.parallel_for(n, [&](int j) {
    const int mj = static_cast<int>(cs.basis[j].cols());
    if (mj == 0) return;
    Matrix rows = Matrix::Zero(mj, n_h);
    rows.block(0, cs.offsets[j], mj, mj) = cs.basis[j].transpose() * products[j];
    for (const auto& [l, payload] : inbox[j]) {
      const int ml = cs.offsets[l + 1] - cs.offsets[l];
      if (ml == 0) continue;
      std::vector<int> lj, ll;
      shared_dofs(decomp, j, l, ops[j].block_size, lj, ll);
      const int ns = static_cast<int>(lj.size());
      if (payload.size() != static_cast<long>(ns) * ml)
        throw NumericsError("assemble_coarse_matrix: basis slice size mismatch");
      Matrix phi_l = Eigen::Map<const Matrix>(payload.data(), ns, ml);
      Matrix w_shared(ns, mj);
      for (int i = 0; i < ns; ++i) w_shared.row(i) = products[j].row(lj[i]);
      rows.block(0, cs.offsets[l], mj, ml) = w_shared.transpose() * phi_l;
    }
    row_blocks[j] = std::move(rows);
  });

  // One tagged all-gather replicates the row blocks on every worker.
  comm.record_allgather("coarse_matrix", static_cast<long>(n_h) * n_h);
  Matrix a_h = Matrix::Zero(n_h, n_h);
  for (int j = 0; j < n; ++j) {
    const int mj = cs.offsets[j + 1] - cs.offsets[j];
    if (mj > 0) a_h.block(cs.offsets[j], 0, mj, n_h) = row_blocks[j];
  }
  a_h = 0.5 * (a_h + a_h.transpose()).eval();

  std::vector<int> dropped;
  std::vector<int> keep = pivot_keep_list(a_h, dropped);
  if (!dropped.empty()) {
    cs.dropped = dropped;
    // Remove the offending basis columns and take the kept principal block.
    std::vector<uint8_t> is_dropped(n_h, 0);
    for (int d : dropped) is_dropped[d] = 1;
    for (int j = 0; j < n; ++j) {
      const int mj = cs.offsets[j + 1] - cs.offsets[j];
      if (mj == 0) continue;
      std::vector<int> cols;
      for (int k = 0; k < mj; ++k)
        if (!is_dropped[cs.offsets[j] + k]) cols.push_back(k);
      Matrix reduced(cs.basis[j].rows(), static_cast<int>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) reduced.col(static_cast<int>(k)) =
          cs.basis[j].col(cols[k]);
      cs.basis[j] = std::move(reduced);
    }
    Matrix compact(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c) compact(static_cast<int>(r), static_cast<int>(c)) = a_h(keep[r], keep[c]);
    a_h = std::move(compact);
    finalize_offsets(cs);
  }

  cs.a_coarse = a_h;
  if (cs.dim() == 0) return;
  cs.replicas.reserve(comm.workers());
  cs.factorizations.reserve(comm.workers());
  for (int w = 0; w < comm.workers(); ++w) {
    cs.replicas.push_back(cs.a_coarse);
    auto llt = std::make_shared<Eigen::LLT<Matrix>>(cs.replicas.back());
    if (llt->info() != Eigen::Success)
      throw NumericsError("assemble_coarse_matrix: coarse matrix factorization failed");
    cs.factorizations.push_back(std::move(llt));
  }
}

CoarseSpace build_geneo_coarse_space(const std::vector<SubdomainOperators>& ops,
                                     const StructuredGrid& grid, SubdomainComm& comm,
                                     const GeneoOptions& opt) {
  const auto& decomp = comm.decomposition();
  const int n = static_cast<int>(ops.size());
  CoarseSpace cs = init_coarse(ops);
  std::vector<std::vector<EigenReportRow>> rows(n);

  comm.parallel_for(n, [&](int j) {
    const SubdomainOperators& s = ops[j];
    const int nl = static_cast<int>(s.local_to_global.size());
    const SubdomainGeometry geom = subdomain_geometry(grid, decomp, j);
    SparseMatrix b = assemble_eigen_pencil(s);
    EigenSelection sel;
    if (b.nonZeros() > 0 && geom.width > 0.0) {
      const double sigma = default_shift(s.a_neumann, opt.shift_scale);
      sel = solve_geneo(s.a_neumann, b, sigma, opt.k_max, opt.residual_tol,
                        opt.dense_fallback_dofs);
    }
    select_modes(sel, geom, opt.rho, opt.k_max);

    Matrix basis(nl, sel.selected);
    for (int k = 0; k < sel.selected; ++k) {
      Vector phi = s.pou.cwiseProduct(sel.eigenvectors.col(k));
      basis.col(k) = phi;
    }
    cs.basis[j] = std::move(basis);
    for (int k = 0; k < static_cast<int>(sel.eigenvalues.size()); ++k)
      rows[j].push_back({j, k, sel.eigenvalues[k], k < sel.selected, sel.threshold});
  });

  for (int j = 0; j < n; ++j)
    cs.report.insert(cs.report.end(), rows[j].begin(), rows[j].end());
  assemble_coarse_matrix(cs, ops, comm);
  return cs;
}

CoarseSpace build_zem_coarse_space(const std::vector<SubdomainOperators>& ops,
                                   const StructuredGrid& grid, SubdomainComm& comm) {
  const auto& decomp = comm.decomposition();
  const int n = static_cast<int>(ops.size());
  CoarseSpace cs = init_coarse(ops);

  comm.parallel_for(n, [&](int j) {
    const SubdomainOperators& s = ops[j];
    const auto& nodes = decomp.subdomain_nodes[j];
    const int bs = s.block_size;
    const int nl = static_cast<int>(s.local_to_global.size());

    Vector3 centroid = Vector3::Zero();
    for (int node : nodes) centroid += grid.node_coordinates[node];
    centroid /= static_cast<double>(nodes.size());

    const int m = bs == 3 ? 6 : 1;
    Matrix basis = Matrix::Zero(nl, m);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (bs == 1) {
        basis(static_cast<int>(i), 0) = 1.0;
        continue;
      }
      const Vector3 d = grid.node_coordinates[nodes[i]] - centroid;
      const int row = static_cast<int>(i) * 3;
      basis(row + 0, 0) = 1.0;
      basis(row + 1, 1) = 1.0;
      basis(row + 2, 2) = 1.0;
      basis(row + 1, 3) = -d[2];  // rotation about x
      basis(row + 2, 3) = d[1];
      basis(row + 0, 4) = d[2];  // rotation about y
      basis(row + 2, 4) = -d[0];
      basis(row + 0, 5) = -d[1];  // rotation about z
      basis(row + 1, 5) = d[0];
    }
    for (int ldof = 0; ldof < nl; ++ldof) {
      const double w = s.dirichlet_mask[ldof] ? 0.0 : s.pou[ldof];
      basis.row(ldof) *= w;
    }
    // Exactly zero columns carry no information; the pivot rule would drop
    // them anyway, but removing them here keeps the report meaningful.
    std::vector<int> cols;
    for (int c = 0; c < m; ++c)
      if (basis.col(c).norm() > 0.0) cols.push_back(c);
    Matrix packed(nl, static_cast<int>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) packed.col(static_cast<int>(c)) = basis.col(cols[c]);
    cs.basis[j] = std::move(packed);
  });

  assemble_coarse_matrix(cs, ops, comm);
  return cs;
}

Vector coarse_restrict(const CoarseSpace& cs, const std::vector<SubdomainOperators>& ops,
                       SubdomainComm& comm, const Vector& v) {
  const int n = static_cast<int>(ops.size());
  Vector r_h = Vector::Zero(cs.dim());
  comm.parallel_for(n, [&](int j) {
    const int mj = cs.modes(j);
    if (mj == 0) return;
    const auto& l2g = ops[j].local_to_global;
    Vector local(static_cast<int>(l2g.size()));
    for (std::size_t i = 0; i < l2g.size(); ++i) local[static_cast<int>(i)] = v[l2g[i]];
    r_h.segment(cs.offsets[j], mj) = cs.basis[j].transpose() * local;
  });
  comm.record_allgather("coarse_restrict", cs.dim());
  return r_h;
}

Vector coarse_prolong(const CoarseSpace& cs, const SchwarzApplyEngine& engine, const Vector& v_h) {
  const auto& ops = engine.ops();
  const int n = static_cast<int>(ops.size());
  std::vector<Vector> contributions(n);
  engine.comm().parallel_for(n, [&](int j) {
    const int mj = cs.modes(j);
    Vector c = Vector::Zero(static_cast<int>(ops[j].local_to_global.size()));
    if (mj > 0) c = cs.basis[j] * v_h.segment(cs.offsets[j], mj);
    contributions[j] = std::move(c);
  });
  return engine.combine(contributions);
}

TwoLevelSchwarz::TwoLevelSchwarz(const std::vector<SubdomainOperators>& ops, SubdomainComm& comm,
                                 int num_global_dofs, CoarseSpace coarse)
    : engine_(ops, comm, num_global_dofs), coarse_(std::move(coarse)) {}

Vector TwoLevelSchwarz::apply(const Vector& r) const {
  std::vector<Vector> c = engine_.local_solves(r);
  if (coarse_.dim() > 0) {
    const Vector r_h = coarse_restrict(coarse_, engine_.ops(), engine_.comm(), r);
    // Every worker solves the replicated coarse system redundantly.
    const int workers = engine_.comm().workers();
    std::vector<Vector> v_h(workers);
    engine_.comm().parallel_for(workers,
                                [&](int w) { v_h[w] = coarse_.factorizations[w]->solve(r_h); });
    ++coarse_solves_;
    const Vector& v0 = v_h[0];
    const auto& ops = engine_.ops();
    engine_.comm().parallel_for(static_cast<int>(ops.size()), [&](int j) {
      const int mj = coarse_.modes(j);
      if (mj > 0) c[j] += coarse_.basis[j] * v0.segment(coarse_.offsets[j], mj);
    });
  }
  return engine_.combine(c);
}

LinearOperator TwoLevelSchwarz::as_operator() const {
  return LinearOperator{engine_.num_global_dofs(),
                        [this](const Vector& r, Vector& y) { y = apply(r); }};
}

}  // namespace geneo
