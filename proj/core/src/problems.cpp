#include "geneo/problems.hpp"

namespace geneo {

OrthotropicParams reference_ply_material() {
  OrthotropicParams p;
  p.E11 = 162.0;
  p.E22 = 10.0;
  p.E33 = 10.0;
  p.G23 = 3.5;
  p.G13 = 5.2;
  p.G12 = 5.2;
  p.nu12 = 0.35;
  p.nu13 = 0.35;
  p.nu23 = 0.5;
  return p;
}

Matrix6 reference_resin_stiffness() { return isotropic_stiffness(10.0, 0.35); }

std::vector<StackingRow> reference_plate_stacking() {
  const double angles[12] = {-45, 45, 0, 90, 45, -45, -45, 45, 90, 0, 45, -45};
  std::vector<StackingRow> rows;
  int region = 0;
  for (int ply = 0; ply < 12; ++ply) {
    rows.push_back({region++, angles[ply], 0.23, 2, 0});
    if (ply < 11) rows.push_back({region++, 0.0, 0.02, 1, 1});
  }
  return rows;
}

SparseSystem PlateProblem::assemble() const {
  return assemble_elasticity(grid, region_stiffness, bcs);
}

std::unique_ptr<ElasticityOperator> PlateProblem::make_operator() const {
  return std::make_unique<ElasticityOperator>(grid, region_stiffness);
}

PlateProblem make_plate_problem(const std::vector<StackingRow>& stacking, ElementType element,
                                int refinement, int cells_x, int cells_y, double extent_x,
                                double extent_y) {
  if (stacking.empty()) throw ConfigError("make_plate_problem: empty stacking sequence");
  GridSpec spec;
  spec.extent_x = extent_x;
  spec.extent_y = extent_y;
  spec.cells_x = cells_x;
  spec.cells_y = cells_y;
  spec.element_type = element;

  PlateProblem problem;
  const OrthotropicParams ply = reference_ply_material();
  const Matrix6 c_ply = orthotropic_stiffness(ply);
  const Matrix6 c_resin = reference_resin_stiffness();
  for (const auto& row : stacking) {
    spec.layers.push_back({row.region_id, row.thickness, row.elements_through_layer});
    if (problem.region_stiffness.count(row.region_id))
      throw ConfigError("make_plate_problem: duplicate region id " +
                        std::to_string(row.region_id));
    if (row.material_id == 0) {
      problem.region_stiffness[row.region_id] = rotate_stiffness(c_ply, row.orientation_deg);
      problem.region_angle_deg[row.region_id] = row.orientation_deg;
    } else if (row.material_id == 1) {
      problem.region_stiffness[row.region_id] = c_resin;
      problem.interface_regions.push_back(row.region_id);
    } else {
      throw ConfigError("make_plate_problem: unknown material id " +
                        std::to_string(row.material_id));
    }
  }
  problem.grid = build_layer_cake(refinement > 0 ? refine(spec, refinement) : spec);

  const double thickness = spec.total_thickness();
  const double q = problem.pressure;
  problem.bcs.is_dirichlet = [](const Vector3& x, int) { return x[0] < 1e-6; };
  problem.bcs.traction = [thickness, q](const Vector3& x, const Vector3&) {
    Vector3 t = Vector3::Zero();
    if (x[2] > thickness - 1e-6) t[2] = -q;
    return t;
  };
  return problem;
}

SparseSystem DiffusionProblem::assemble() const { return assemble_diffusion(grid, field, bcs); }

std::unique_ptr<DiffusionOperator> DiffusionProblem::make_operator() const {
  return std::make_unique<DiffusionOperator>(grid, field);
}

DiffusionProblem make_diffusion_problem(PermeabilityField field, const Vector3& extents) {
  DiffusionProblem problem;
  const auto dims = field.dims;
  problem.field = std::move(field);
  problem.grid = build_layer_cake(
      GridSpec::box(extents[0], extents[1], extents[2], dims[0], dims[1], dims[2]));
  problem.bcs.is_dirichlet = [](const Vector3& x) { return x[2] < 1e-9; };
  problem.bcs.source = [](const Vector3&) { return 1.0; };
  return problem;
}

DiffusionProblem make_spe10_problem(const PermeabilityField& full_field, int stride) {
  if (stride < 1) throw ConfigError("make_spe10_problem: stride must be >= 1");
  // Cell footage of the published domain over the given grid; strided cells
  // grow by the stride, and non-divisible tails are trimmed by the subsample.
  const double dx = 1200.0 / full_field.dims[0];
  const double dy = 2200.0 / full_field.dims[1];
  const double dz = 170.0 / full_field.dims[2];
  PermeabilityField field = stride > 1 ? subsample(full_field, stride) : full_field;
  const Vector3 extents(dx * stride * field.dims[0], dy * stride * field.dims[1],
                        dz * stride * field.dims[2]);
  return make_diffusion_problem(std::move(field), extents);
}

DiffusionProblem make_contrast_problem(const std::array<int, 3>& dims, double contrast,
                                       ContrastPattern pattern, unsigned seed) {
  PermeabilityField field = generate_synthetic_contrast(dims, contrast, pattern, seed);
  return make_diffusion_problem(std::move(field),
                                Vector3(static_cast<double>(dims[0]), static_cast<double>(dims[1]),
                                        static_cast<double>(dims[2])));
}

}  // namespace geneo
