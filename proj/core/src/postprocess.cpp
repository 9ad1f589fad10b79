#include "geneo/postprocess.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "geneo/element.hpp"
#include "geneo/materials.hpp"

namespace geneo {

StressField recover_stress(const StructuredGrid& grid, const Vector& u,
                           const std::map<int, Matrix6>& region_stiffness,
                           const std::map<int, double>& region_angle_deg, double to_mpa) {
  const int npc = grid.nodes_per_cell();
  if (u.size() != 3L * grid.num_nodes())
    throw ConfigError("recover_stress: displacement vector size does not match the grid");
  StressField field;
  field.stress.resize(grid.num_cells());
  field.region = grid.cell_region;

  // T(theta) maps global stress components into the frame of a ply whose
  // material axes sit at +theta about z.
  std::map<int, Matrix6> back_rotation;
  for (const auto& [region, angle] : region_angle_deg)
    back_rotation.emplace(region, voigt_stress_rotation(angle * M_PI / 180.0));

  for (int c = 0; c < grid.num_cells(); ++c) {
    const int region = grid.cell_region[c];
    auto stiff = region_stiffness.find(region);
    if (stiff == region_stiffness.end())
      throw ConfigError("recover_stress: no stiffness for region " + std::to_string(region));
    const NodeBlock coords = grid.cell_coordinates(c);
    const Matrix b = strain_displacement(coords, grid.element_type, Vector3::Zero());
    Vector ue(3 * npc);
    const int* conn = grid.cell_nodes(c);
    for (int i = 0; i < npc; ++i)
      for (int r = 0; r < 3; ++r) ue[3 * i + r] = u[3 * conn[i] + r];
    Vector6 sigma = stiff->second * (b * ue);
    auto rot = back_rotation.find(region);
    if (rot != back_rotation.end()) sigma = rot->second * sigma;
    field.stress[c] = to_mpa * sigma;
  }
  return field;
}

double camanho(const Vector6& sigma_mpa, const Allowables& a) {
  if (!(a.s33 > 0.0 && a.s13 > 0.0 && a.s23 > 0.0))
    throw ConfigError("camanho: allowables must be positive");
  const double t33 = std::max(sigma_mpa[2], 0.0) / a.s33;
  const double t23 = sigma_mpa[3] / a.s23;
  const double t13 = sigma_mpa[4] / a.s13;
  return std::sqrt(t33 * t33 + t13 * t13 + t23 * t23);
}

FailureSummary failure_load(double q_applied, const StressField& field,
                            const std::vector<int>& interface_regions, const Allowables& a) {
  FailureSummary summary;
  for (std::size_t c = 0; c < field.stress.size(); ++c) {
    bool interface = false;
    for (int r : interface_regions) interface = interface || r == field.region[c];
    if (!interface) continue;
    summary.f_max = std::max(summary.f_max, camanho(field.stress[c], a));
  }
  if (summary.f_max > 0.0) summary.q_star = q_applied / summary.f_max;
  return summary;
}

double max_displacement(const Vector& u, int block_size, int component) {
  if (block_size < 1 || component < 0 || component >= block_size)
    throw ConfigError("max_displacement: invalid block layout");
  double peak = 0.0;
  for (long i = component; i < u.size(); i += block_size) peak = std::max(peak, std::abs(u[i]));
  return peak;
}

void write_vtk(std::ostream& out, const StructuredGrid& grid, const Vector* displacement,
               const Vector* point_scalar, const std::string& point_scalar_name,
               const std::vector<VtkCellField>& cell_fields) {
  const int npc = grid.nodes_per_cell();
  if (displacement && displacement->size() != 3L * grid.num_nodes())
    throw ConfigError("write_vtk: displacement vector size does not match the grid");
  if (point_scalar && point_scalar->size() != grid.num_nodes())
    throw ConfigError("write_vtk: point scalar size does not match the grid");
  for (const auto& f : cell_fields)
    if (static_cast<int>(f.values.size()) != grid.num_cells())
      throw ConfigError("write_vtk: cell field '" + f.name + "' has the wrong length");

  out << "# vtk DataFile Version 3.0\n";
  out << "geneo results\n";
  out << "ASCII\n";
  out << "DATASET UNSTRUCTURED_GRID\n";
  out.precision(12);
  out << "POINTS " << grid.num_nodes() << " double\n";
  for (const auto& x : grid.node_coordinates) out << x[0] << ' ' << x[1] << ' ' << x[2] << '\n';

  out << "CELLS " << grid.num_cells() << ' ' << grid.num_cells() * (npc + 1) << '\n';
  for (int c = 0; c < grid.num_cells(); ++c) {
    out << npc;
    const int* conn = grid.cell_nodes(c);
    for (int i = 0; i < npc; ++i) out << ' ' << conn[i];
    out << '\n';
  }
  const int vtk_type = grid.element_type == ElementType::Hex8 ? 12 : 25;
  out << "CELL_TYPES " << grid.num_cells() << '\n';
  for (int c = 0; c < grid.num_cells(); ++c) out << vtk_type << '\n';

  if (displacement || point_scalar) {
    out << "POINT_DATA " << grid.num_nodes() << '\n';
    if (displacement) {
      out << "VECTORS displacement double\n";
      for (int i = 0; i < grid.num_nodes(); ++i)
        out << (*displacement)[3 * i] << ' ' << (*displacement)[3 * i + 1] << ' '
            << (*displacement)[3 * i + 2] << '\n';
    }
    if (point_scalar) {
      out << "SCALARS " << point_scalar_name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (int i = 0; i < grid.num_nodes(); ++i) out << (*point_scalar)[i] << '\n';
    }
  }
  if (!cell_fields.empty()) {
    out << "CELL_DATA " << grid.num_cells() << '\n';
    for (const auto& f : cell_fields) {
      out << "SCALARS " << f.name << " double 1\n";
      out << "LOOKUP_TABLE default\n";
      for (double v : f.values) out << v << '\n';
    }
  }
}

void write_vtk(std::ostream& out, const StructuredGrid& grid, const Vector* displacement,
               const std::vector<VtkCellField>& cell_fields) {
  write_vtk(out, grid, displacement, nullptr, "", cell_fields);
}

void write_vtk(const std::string& path, const StructuredGrid& grid, const Vector* displacement,
               const Vector* point_scalar, const std::string& point_scalar_name,
               const std::vector<VtkCellField>& cell_fields) {
  std::ofstream out(path);
  if (!out) throw IoError("write_vtk: cannot open '" + path + "' for writing");
  write_vtk(out, grid, displacement, point_scalar, point_scalar_name, cell_fields);
  if (!out) throw IoError("write_vtk: failed while writing '" + path + "'");
}

void write_vtk(const std::string& path, const StructuredGrid& grid, const Vector* displacement,
               const std::vector<VtkCellField>& cell_fields) {
  write_vtk(path, grid, displacement, nullptr, "", cell_fields);
}

}  // namespace geneo
