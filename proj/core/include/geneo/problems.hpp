#pragma once

#include <memory>

#include "geneo/assembly.hpp"
#include "geneo/io.hpp"
#include "geneo/postprocess.hpp"

namespace geneo {

/// Carbon-fiber ply constants in GPa (material frame, fibers along axis 1).
OrthotropicParams reference_ply_material();

/// Isotropic resin of the interface layers, E = 10 GPa, nu = 0.35.
Matrix6 reference_resin_stiffness();

/// The 12-ply laminate with 11 resin interfaces used by the plate studies:
/// plies of 0.23 mm (2 elements), interfaces of 0.02 mm (1 element), stacking
/// [-45/45/0/90/45/-45/-45/45/90/0/45/-45]. Region ids run bottom to top;
/// material_id 0 denotes a ply, 1 a resin interface.
std::vector<StackingRow> reference_plate_stacking();

/// Cantilever composite plate: clamped at x = 0, uniform downward pressure on
/// the top face, everything else traction-free. Units are GPa and mm.
struct PlateProblem {
  StructuredGrid grid;
  std::map<int, Matrix6> region_stiffness;  // global frame
  std::map<int, double> region_angle_deg;   // ply rotations about axis 3
  std::vector<int> interface_regions;
  double pressure = 1e-5;  // GPa (0.01 MPa)
  Allowables allowables;
  ElasticBCs bcs;

  SparseSystem assemble() const;
  std::unique_ptr<ElasticityOperator> make_operator() const;
};

PlateProblem make_plate_problem(const std::vector<StackingRow>& stacking, ElementType element,
                                int refinement = 0, int cells_x = 20, int cells_y = 5,
                                double extent_x = 100.0, double extent_y = 20.0);

/// Scalar Darcy pressure problem: u = 0 on the z = 0 face, zero flux
/// elsewhere, unit source.
struct DiffusionProblem {
  StructuredGrid grid;
  PermeabilityField field;
  ScalarBCs bcs;

  SparseSystem assemble() const;
  std::unique_ptr<DiffusionOperator> make_operator() const;
};

/// Box diffusion problem over an existing cell-wise permeability field.
DiffusionProblem make_diffusion_problem(PermeabilityField field, const Vector3& extents);

/// The reservoir benchmark domain (1200 x 2200 x 170 ft, 60 x 220 x 85
/// cells), optionally strided down to desk scale.
DiffusionProblem make_spe10_problem(const PermeabilityField& full_field, int stride = 1);

DiffusionProblem make_contrast_problem(const std::array<int, 3>& dims, double contrast,
                                       ContrastPattern pattern, unsigned seed);

}  // namespace geneo
