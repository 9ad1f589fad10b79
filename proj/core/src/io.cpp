#include "geneo/io.hpp"

#include <sstream>

namespace geneo {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto begin = field.find_first_not_of(" \t\r");
    const auto end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos ? "" : field.substr(begin, end - begin + 1));
  }
  return fields;
}

double parse_number(const std::string& s, const std::string& what, int line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << "stacking CSV line " << line_no << ": cannot parse " << what << " from '" << s << "'";
    throw IoError(msg.str());
  }
}

}  // namespace

std::vector<StackingRow> read_stacking_csv(std::istream& in) {
  std::vector<StackingRow> rows;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.empty() || fields[0] != "region_id")
        throw IoError("stacking CSV: first row must be the header starting with 'region_id'");
      continue;
    }
    if (fields.size() != 5) {
      std::ostringstream msg;
      msg << "stacking CSV line " << line_no << ": expected 5 fields, got " << fields.size();
      throw IoError(msg.str());
    }
    StackingRow row;
    row.region_id = static_cast<int>(parse_number(fields[0], "region_id", line_no));
    row.orientation_deg = parse_number(fields[1], "orientation_deg", line_no);
    row.thickness = parse_number(fields[2], "thickness", line_no);
    row.elements_through_layer =
        static_cast<int>(parse_number(fields[3], "elements_through_layer", line_no));
    row.material_id = static_cast<int>(parse_number(fields[4], "material_id", line_no));
    if (row.thickness <= 0.0 || row.elements_through_layer < 1) {
      std::ostringstream msg;
      msg << "stacking CSV line " << line_no
          << ": thickness must be positive and elements_through_layer >= 1";
      throw IoError(msg.str());
    }
    rows.push_back(row);
  }
  if (!header_seen) throw IoError("stacking CSV: empty input");
  return rows;
}

std::vector<StackingRow> read_stacking_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("stacking CSV: cannot open '" + path + "'");
  return read_stacking_csv(in);
}

void write_stacking_csv(std::ostream& out, const std::vector<StackingRow>& rows) {
  out << "region_id,orientation_deg,thickness,elements_through_layer,material_id\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.region_id << ',' << r.orientation_deg << ',' << r.thickness << ','
        << r.elements_through_layer << ',' << r.material_id << '\n';
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nonZeros() << '\n';
  out.precision(17);
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

void write_matrix_market(std::ostream& out, const Matrix& a) {
  out << "%%MatrixMarket matrix array real general\n";
  out << a.rows() << ' ' << a.cols() << '\n';
  out.precision(17);
  for (long c = 0; c < a.cols(); ++c)
    for (long r = 0; r < a.rows(); ++r) out << a(r, c) << '\n';
}

void write_matrix_market(std::ostream& out, const Vector& v) {
  out << "%%MatrixMarket matrix array real general\n";
  out << v.size() << " 1\n";
  out.precision(17);
  for (long i = 0; i < v.size(); ++i) out << v[i] << '\n';
}

namespace {
template <typename T>
void write_mm_file(const std::string& path, const T& value) {
  std::ofstream out = open_output(path);
  write_matrix_market(out, value);
  if (!out) throw IoError("matrix market: failed while writing '" + path + "'");
}
}  // namespace

void write_matrix_market(const std::string& path, const SparseMatrix& a) { write_mm_file(path, a); }
void write_matrix_market(const std::string& path, const Matrix& a) { write_mm_file(path, a); }
void write_matrix_market(const std::string& path, const Vector& v) { write_mm_file(path, v); }

void write_residual_csv(std::ostream& out, const SolveReport& report) {
  out << "iteration,rel_residual\n";
  out.precision(17);
  for (std::size_t i = 0; i < report.residual_history.size(); ++i)
    out << i << ',' << report.residual_history[i] << '\n';
}

void write_residual_csv(const std::string& path, const SolveReport& report) {
  std::ofstream out = open_output(path);
  write_residual_csv(out, report);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace geneo
