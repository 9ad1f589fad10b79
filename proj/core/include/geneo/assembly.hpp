#pragma once

#include <functional>
#include <map>
#include <memory>

#include "geneo/grid.hpp"
#include "geneo/materials.hpp"

namespace geneo {

/// Boundary conditions and loads for elasticity, described by geometric
/// predicates (evaluated at node coordinates for Dirichlet data and at face
/// quadrature points for tractions).
struct ElasticBCs {
  std::function<bool(const Vector3&, int)> is_dirichlet;        // (x, component)
  std::function<double(const Vector3&, int)> dirichlet_value;   // optional, default 0
  std::function<Vector3(const Vector3&, const Vector3&)> traction;  // (x, outward n), optional
  std::function<Vector3(const Vector3&)> body_force;                // optional
};

/// Boundary conditions for scalar diffusion.
struct ScalarBCs {
  std::function<bool(const Vector3&)> is_dirichlet;
  std::function<double(const Vector3&)> dirichlet_value;          // optional, default 0
  std::function<double(const Vector3&, const Vector3&)> flux;     // optional
  std::function<double(const Vector3&)> source;                   // optional
};

/// Assembled linear system with symmetric Dirichlet elimination: constrained
/// rows and columns are zeroed, the diagonal is set to one and b carries the
/// boundary value, so A stays SPD.
struct SparseSystem {
  SparseMatrix A;
  Vector b;
  int block_size = 1;
  std::vector<uint8_t> dirichlet;  // per dof
  Vector dirichlet_values;         // per dof, zero where unconstrained

  int num_dofs() const { return static_cast<int>(A.rows()); }
};

/// Produces element matrices and dof maps for one assembled problem; shared
/// by the global assembly and the per-subdomain Neumann-type assemblies.
class ElementOperator {
 public:
  virtual ~ElementOperator() = default;
  virtual int block_size() const = 0;
  virtual Matrix element_matrix(int cell) const = 0;
  const StructuredGrid& grid() const { return *grid_; }
  int num_dofs() const { return grid_->num_nodes() * block_size(); }
  void cell_dofs(int cell, std::vector<int>& dofs) const;

 protected:
  explicit ElementOperator(const StructuredGrid& g) : grid_(&g) {}
  const StructuredGrid* grid_;
};

/// Anisotropic elasticity: one Hooke matrix per mesh region (already rotated
/// to the global frame). Throws ConfigError for unresolved region ids.
class ElasticityOperator : public ElementOperator {
 public:
  ElasticityOperator(const StructuredGrid& g, std::map<int, Matrix6> region_stiffness,
                     int npts = 0);
  int block_size() const override { return 3; }
  Matrix element_matrix(int cell) const override;
  const Matrix6& region_C(int region) const;

 private:
  std::map<int, Matrix6> C_;
  int npts_;
};

/// Scalar diffusion with a cell-wise diagonal permeability field.
class DiffusionOperator : public ElementOperator {
 public:
  DiffusionOperator(const StructuredGrid& g, const PermeabilityField& field, int npts = 0);
  int block_size() const override { return 1; }
  Matrix element_matrix(int cell) const override;

 private:
  const PermeabilityField* field_;
  int npts_;
};

/// Per-dof Dirichlet flags/values from the predicates.
void mark_dirichlet(const StructuredGrid& grid, const ElasticBCs& bcs,
                    std::vector<uint8_t>& flags, Vector& values);
void mark_dirichlet(const StructuredGrid& grid, const ScalarBCs& bcs,
                    std::vector<uint8_t>& flags, Vector& values);

SparseSystem assemble_elasticity(const StructuredGrid& grid,
                                 const std::map<int, Matrix6>& region_stiffness,
                                 const ElasticBCs& bcs, int npts = 0);

SparseSystem assemble_diffusion(const StructuredGrid& grid, const PermeabilityField& field,
                                const ScalarBCs& bcs, int npts = 0);

/// Assembles the operator on a cell subset into a local numbering.
/// `local_node` maps a global node id to a local node id (or -1 outside);
/// `eliminate` flags local dofs whose rows/columns are dropped; when
/// `unit_diagonal` is set the eliminated diagonal entries become one
/// (Dirichlet style), otherwise the rows stay identically zero.
SparseMatrix assemble_on_cells(const ElementOperator& op, const std::vector<int>& cells,
                               int num_local_nodes,
                               const std::function<int(int)>& local_node,
                               const std::vector<uint8_t>& eliminate, bool unit_diagonal);

}  // namespace geneo
