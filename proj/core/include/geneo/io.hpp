#pragma once

#include <fstream>
#include <string>

#include "geneo/grid.hpp"
#include "geneo/krylov.hpp"

namespace geneo {

/// One row of the layer-stacking CSV:
/// region_id,orientation_deg,thickness,elements_through_layer,material_id
struct StackingRow {
  int region_id = 0;
  double orientation_deg = 0.0;
  double thickness = 0.0;
  int elements_through_layer = 1;
  int material_id = 0;
};

std::vector<StackingRow> read_stacking_csv(std::istream& in);
std::vector<StackingRow> read_stacking_csv(const std::string& path);
void write_stacking_csv(std::ostream& out, const std::vector<StackingRow>& rows);

/// Matrix Market coordinate format (real general) for sparse matrices and
/// array format for dense vectors.
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market(const std::string& path, const SparseMatrix& a);
void write_matrix_market(std::ostream& out, const Matrix& a);
void write_matrix_market(const std::string& path, const Matrix& a);
void write_matrix_market(std::ostream& out, const Vector& v);
void write_matrix_market(const std::string& path, const Vector& v);

/// Residual history CSV: iteration,rel_residual.
void write_residual_csv(std::ostream& out, const SolveReport& report);
void write_residual_csv(const std::string& path, const SolveReport& report);

/// Opens an output file, throwing IoError instead of silently failing.
std::ofstream open_output(const std::string& path);

}  // namespace geneo
