#include "geneo/assembly.hpp"

#include <algorithm>

namespace geneo {

void ElementOperator::cell_dofs(int cell, std::vector<int>& dofs) const {
  const int npc = grid_->nodes_per_cell();
  const int bs = block_size();
  const int* conn = grid_->cell_nodes(cell);
  dofs.resize(static_cast<std::size_t>(npc) * bs);
  for (int i = 0; i < npc; ++i)
    for (int r = 0; r < bs; ++r) dofs[i * bs + r] = conn[i] * bs + r;
}

ElasticityOperator::ElasticityOperator(const StructuredGrid& g, std::map<int, Matrix6> region_stiffness,
                                       int npts)
    : ElementOperator(g), C_(std::move(region_stiffness)), npts_(npts) {
  for (int c = 0; c < g.num_cells(); ++c)
    if (C_.find(g.cell_region[c]) == C_.end())
      throw ConfigError("ElasticityOperator: region " + std::to_string(g.cell_region[c]) +
                        " has no material assigned");
}

const Matrix6& ElasticityOperator::region_C(int region) const {
  auto it = C_.find(region);
  if (it == C_.end())
    throw ConfigError("ElasticityOperator: region " + std::to_string(region) +
                      " has no material assigned");
  return it->second;
}

Matrix ElasticityOperator::element_matrix(int cell) const {
  return element_stiffness_elasticity(grid_->cell_coordinates(cell), grid_->element_type,
                                      region_C(grid_->cell_region[cell]), npts_);
}

DiffusionOperator::DiffusionOperator(const StructuredGrid& g, const PermeabilityField& field,
                                     int npts)
    : ElementOperator(g), field_(&field), npts_(npts) {
  if (field.dims[0] != g.ncx || field.dims[1] != g.ncy || field.dims[2] != g.ncz)
    throw ConfigError("DiffusionOperator: permeability dims do not match the grid");
}

Matrix DiffusionOperator::element_matrix(int cell) const {
  return element_stiffness_diffusion(grid_->cell_coordinates(cell), grid_->element_type,
                                     field_->cell_tensor(cell), npts_);
}

void mark_dirichlet(const StructuredGrid& grid, const ElasticBCs& bcs,
                    std::vector<uint8_t>& flags, Vector& values) {
  if (!bcs.is_dirichlet) throw ConfigError("ElasticBCs: is_dirichlet predicate missing");
  const int n = grid.num_nodes();
  flags.assign(static_cast<std::size_t>(n) * 3, 0);
  values = Vector::Zero(static_cast<Eigen::Index>(n) * 3);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      if (bcs.is_dirichlet(grid.node_coordinates[i], r)) {
        flags[i * 3 + r] = 1;
        if (bcs.dirichlet_value) values[i * 3 + r] = bcs.dirichlet_value(grid.node_coordinates[i], r);
      }
}

void mark_dirichlet(const StructuredGrid& grid, const ScalarBCs& bcs,
                    std::vector<uint8_t>& flags, Vector& values) {
  if (!bcs.is_dirichlet) throw ConfigError("ScalarBCs: is_dirichlet predicate missing");
  const int n = grid.num_nodes();
  flags.assign(n, 0);
  values = Vector::Zero(n);
  for (int i = 0; i < n; ++i)
    if (bcs.is_dirichlet(grid.node_coordinates[i])) {
      flags[i] = 1;
      if (bcs.dirichlet_value) values[i] = bcs.dirichlet_value(grid.node_coordinates[i]);
    }
}

namespace {

/// Core symmetric-elimination assembly shared by both problem kinds.
SparseSystem assemble_global(const ElementOperator& op, const std::vector<uint8_t>& dirichlet,
                             const Vector& dirichlet_values) {
  const StructuredGrid& grid = op.grid();
  const int bs = op.block_size();
  const int ndofs = op.num_dofs();

  SparseSystem sys;
  sys.block_size = bs;
  sys.dirichlet = dirichlet;
  sys.dirichlet_values = dirichlet_values;
  sys.b = Vector::Zero(ndofs);

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(grid.num_cells()) * bs * bs *
               grid.nodes_per_cell() * grid.nodes_per_cell() / 2);
  std::vector<int> dofs;
  for (int c = 0; c < grid.num_cells(); ++c) {
    const Matrix Ke = op.element_matrix(c);
    op.cell_dofs(c, dofs);
    const int n = static_cast<int>(dofs.size());
    for (int i = 0; i < n; ++i) {
      if (dirichlet[dofs[i]]) continue;
      for (int j = 0; j < n; ++j) {
        if (dirichlet[dofs[j]]) {
          // inhomogeneous Dirichlet contribution moves to the rhs
          sys.b[dofs[i]] -= Ke(i, j) * dirichlet_values[dofs[j]];
        } else {
          trip.emplace_back(dofs[i], dofs[j], Ke(i, j));
        }
      }
    }
  }
  for (int d = 0; d < ndofs; ++d)
    if (dirichlet[d]) {
      trip.emplace_back(d, d, 1.0);
      sys.b[d] = dirichlet_values[d];
    }

  sys.A.resize(ndofs, ndofs);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.A.makeCompressed();
  return sys;
}

}  // namespace

SparseSystem assemble_elasticity(const StructuredGrid& grid,
                                 const std::map<int, Matrix6>& region_stiffness,
                                 const ElasticBCs& bcs, int npts) {
  ElasticityOperator op(grid, region_stiffness, npts);
  std::vector<uint8_t> flags;
  Vector values;
  mark_dirichlet(grid, bcs, flags, values);
  SparseSystem sys = assemble_global(op, flags, values);

  if (bcs.body_force) {
    std::vector<int> dofs;
    for (int c = 0; c < grid.num_cells(); ++c) {
      const Vector fe = element_body_load(grid.cell_coordinates(c), grid.element_type, 3,
                                          bcs.body_force, npts);
      op.cell_dofs(c, dofs);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        if (!flags[dofs[i]]) sys.b[dofs[i]] += fe[i];
    }
  }
  if (bcs.traction) {
    std::vector<int> dofs;
    for (const auto& face : grid.boundary_faces()) {
      const Vector fe = element_face_load(grid.cell_coordinates(face.cell), grid.element_type,
                                          face.side, 3, bcs.traction, npts);
      op.cell_dofs(face.cell, dofs);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        if (!flags[dofs[i]]) sys.b[dofs[i]] += fe[i];
    }
  }
  return sys;
}

SparseSystem assemble_diffusion(const StructuredGrid& grid, const PermeabilityField& field,
                                const ScalarBCs& bcs, int npts) {
  DiffusionOperator op(grid, field, npts);
  std::vector<uint8_t> flags;
  Vector values;
  mark_dirichlet(grid, bcs, flags, values);
  SparseSystem sys = assemble_global(op, flags, values);

  if (bcs.source) {
    std::vector<int> dofs;
    auto src3 = [&](const Vector3& x) { return Vector3(bcs.source(x), 0, 0); };
    for (int c = 0; c < grid.num_cells(); ++c) {
      const Vector fe = element_body_load(grid.cell_coordinates(c), grid.element_type, 1, src3,
                                          npts);
      op.cell_dofs(c, dofs);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        if (!flags[dofs[i]]) sys.b[dofs[i]] += fe[i];
    }
  }
  if (bcs.flux) {
    std::vector<int> dofs;
    auto flux3 = [&](const Vector3& x, const Vector3& n) { return Vector3(bcs.flux(x, n), 0, 0); };
    for (const auto& face : grid.boundary_faces()) {
      const Vector fe = element_face_load(grid.cell_coordinates(face.cell), grid.element_type,
                                          face.side, 1, flux3, npts);
      op.cell_dofs(face.cell, dofs);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        if (!flags[dofs[i]]) sys.b[dofs[i]] += fe[i];
    }
  }
  return sys;
}

SparseMatrix assemble_on_cells(const ElementOperator& op, const std::vector<int>& cells,
                               int num_local_nodes,
                               const std::function<int(int)>& local_node,
                               const std::vector<uint8_t>& eliminate, bool unit_diagonal) {
  const StructuredGrid& grid = op.grid();
  const int bs = op.block_size();
  const int npc = grid.nodes_per_cell();
  const int nl = num_local_nodes * bs;
  if (static_cast<int>(eliminate.size()) != nl)
    throw ConfigError("assemble_on_cells: eliminate mask size mismatch");

  std::vector<Triplet> trip;
  std::vector<int> ldofs(static_cast<std::size_t>(npc) * bs);
  for (int c : cells) {
    const Matrix Ke = op.element_matrix(c);
    const int* conn = grid.cell_nodes(c);
    for (int i = 0; i < npc; ++i) {
      const int ln = local_node(conn[i]);
      if (ln < 0)
        throw NumericsError("assemble_on_cells: cell node outside the local numbering");
      for (int r = 0; r < bs; ++r) ldofs[i * bs + r] = ln * bs + r;
    }
    for (std::size_t i = 0; i < ldofs.size(); ++i) {
      if (eliminate[ldofs[i]]) continue;
      for (std::size_t j = 0; j < ldofs.size(); ++j) {
        if (eliminate[ldofs[j]]) continue;
        trip.emplace_back(ldofs[i], ldofs[j], Ke(i, j));
      }
    }
  }
  if (unit_diagonal)
    for (int d = 0; d < nl; ++d)
      if (eliminate[d]) trip.emplace_back(d, d, 1.0);

  SparseMatrix A(nl, nl);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  return A;
}

}  // namespace geneo
