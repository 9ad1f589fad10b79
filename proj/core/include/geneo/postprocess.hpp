#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <string>

#include "geneo/grid.hpp"

namespace geneo {

/// Per-element centroid stresses in the rotated material frame, in MPa.
struct StressField {
  std::vector<Vector6> stress;
  std::vector<int> region;
};

/// Interlaminar strengths in MPa.
struct Allowables {
  double s33 = 61.0;
  double s13 = 97.0;
  double s23 = 94.0;
};

/// Centroid strain from shape-function gradients, stress through the
/// element's global-frame stiffness, then rotated back into the material
/// frame of the element's region. `to_mpa` converts from the assembly units.
StressField recover_stress(const StructuredGrid& grid, const Vector& u,
                           const std::map<int, Matrix6>& region_stiffness,
                           const std::map<int, double>& region_angle_deg,
                           double to_mpa = 1000.0);

/// Quadratic interaction criterion on the interlaminar components; only the
/// tensile part of the through-thickness stress contributes.
double camanho(const Vector6& sigma_mpa, const Allowables& a);

struct FailureSummary {
  double f_max = 0.0;   // over interface-region elements
  double q_star = std::numeric_limits<double>::infinity();
};

/// q* = q / max F over elements whose region is listed as an interface.
/// A zero maximum leaves the infinity sentinel in place.
FailureSummary failure_load(double q_applied, const StressField& field,
                            const std::vector<int>& interface_regions, const Allowables& a);

/// Max over nodes of |u_component| for block vectors.
double max_displacement(const Vector& u, int block_size = 3, int component = 2);

struct VtkCellField {
  std::string name;
  std::vector<double> values;
};

/// Legacy ASCII VTK unstructured grid with optional nodal displacement
/// vectors (block size 3), an optional nodal scalar, and per-cell scalars.
void write_vtk(std::ostream& out, const StructuredGrid& grid, const Vector* displacement,
               const Vector* point_scalar, const std::string& point_scalar_name,
               const std::vector<VtkCellField>& cell_fields);
void write_vtk(std::ostream& out, const StructuredGrid& grid, const Vector* displacement,
               const std::vector<VtkCellField>& cell_fields);
void write_vtk(const std::string& path, const StructuredGrid& grid, const Vector* displacement,
               const std::vector<VtkCellField>& cell_fields);
void write_vtk(const std::string& path, const StructuredGrid& grid, const Vector* displacement,
               const Vector* point_scalar, const std::string& point_scalar_name,
               const std::vector<VtkCellField>& cell_fields);

}  // namespace geneo
