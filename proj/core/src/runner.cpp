#include "geneo/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "geneo/coarse.hpp"
#include "geneo/io.hpp"
#include "geneo/krylov.hpp"
#include "geneo/postprocess.hpp"
#include "geneo/problems.hpp"
#include "geneo/schwarz.hpp"

namespace geneo {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing garbage");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
}

std::array<int, 3> parse_triple(const std::string& key, const std::string& value) {
  auto parts = split(value, value.find('x') != std::string::npos ? 'x' : ',');
  if (parts.size() != 3)
    throw ConfigError("config key '" + key + "': expected three integers like 4x1x1, got '" +
                      value + "'");
  return {parse_int(key, parts[0]), parse_int(key, parts[1]), parse_int(key, parts[2])};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool one_of(const std::string& v, std::initializer_list<const char*> allowed) {
  for (const char* a : allowed)
    if (v == a) return true;
  return false;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void set_config_value(RunConfig& c, const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("expected key=value, got '" + assignment + "'");
  std::string key = lower(trim(assignment.substr(0, eq)));
  std::string value = trim(assignment.substr(eq + 1));
  if (key.empty()) throw ConfigError("empty key in '" + assignment + "'");

  auto require_value = [&] {
    if (value.empty()) throw ConfigError("config key '" + key + "': value is empty");
  };

  if (key == "problem" || key == "element" || key == "adjacency" || key == "preconditioner" ||
      key == "solver" || key == "contrast_pattern") {
    require_value();
    value = lower(value);
  }

  if (key == "problem") c.problem = value;
  else if (key == "element") c.element = value;
  else if (key == "refine") c.refine = parse_int(key, value);
  else if (key == "cells_x") c.cells_x = parse_int(key, value);
  else if (key == "cells_y") c.cells_y = parse_int(key, value);
  else if (key == "partition") c.partition = parse_triple(key, value);
  else if (key == "partition_sweep") {
    c.partition_sweep.clear();
    for (const auto& item : split(value, ';')) c.partition_sweep.push_back(parse_triple(key, item));
  } else if (key == "overlap") c.overlap = parse_int(key, value);
  else if (key == "adjacency") c.adjacency = value;
  else if (key == "preconditioner") c.preconditioner = value;
  else if (key == "precond_sweep") {
    c.precond_sweep.clear();
    for (auto& item : split(value, ',')) c.precond_sweep.push_back(lower(item));
  } else if (key == "rho") c.rho = parse_double(key, value);
  else if (key == "shift_scale") c.shift_scale = parse_double(key, value);
  else if (key == "k_max") c.k_max = parse_int(key, value);
  else if (key == "solver") c.solver = value;
  else if (key == "tol") c.tol = parse_double(key, value);
  else if (key == "max_it") c.max_it = parse_int(key, value);
  else if (key == "output_dir") { require_value(); c.output_dir = value; }
  else if (key == "workers") c.workers = parse_int(key, value);
  else if (key == "stacking_file") c.stacking_file = value;
  else if (key == "spe10_file") c.spe10_file = value;
  else if (key == "spe10_dims") c.spe10_dims = parse_triple(key, value);
  else if (key == "spe10_stride") c.spe10_stride = parse_int(key, value);
  else if (key == "contrast_dims") c.contrast_dims = parse_triple(key, value);
  else if (key == "contrast") c.contrast = parse_double(key, value);
  else if (key == "contrast_sweep") {
    c.contrast_sweep.clear();
    for (const auto& item : split(value, ',')) c.contrast_sweep.push_back(parse_double(key, item));
  } else if (key == "contrast_pattern") c.contrast_pattern = value;
  else if (key == "seed") {
    long v = parse_int(key, value);
    if (v < 0) throw ConfigError("config key 'seed': must be nonnegative");
    c.seed = static_cast<unsigned>(v);
  } else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config(std::istream& in) {
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      set_config_value(c, line);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  try {
    return load_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void validate_config(const RunConfig& c) {
  if (!one_of(c.problem, {"plate_1a", "plate_1b", "spe10", "synthetic_contrast"}))
    throw ConfigError("problem must be plate_1a, plate_1b, spe10 or synthetic_contrast, got '" +
                      c.problem + "'");
  if (!one_of(c.element, {"hex8", "serendipity20"}))
    throw ConfigError("element must be hex8 or serendipity20, got '" + c.element + "'");
  if (!one_of(c.adjacency, {"face", "box"}))
    throw ConfigError("adjacency must be face or box, got '" + c.adjacency + "'");
  if (!one_of(c.solver, {"pcg", "fgmres"}))
    throw ConfigError("solver must be pcg or fgmres, got '" + c.solver + "'");

  std::vector<std::string> preconds =
      c.precond_sweep.empty() ? std::vector<std::string>{c.preconditioner} : c.precond_sweep;
  bool any_schwarz = false;
  for (const auto& p : preconds) {
    if (!one_of(p, {"none", "as1", "zem", "geneo"}))
      throw ConfigError("preconditioner must be none, as1, zem or geneo, got '" + p + "'");
    if (p != "none") any_schwarz = true;
  }
  if (any_schwarz && c.overlap < 1)
    throw ConfigError("overlap must be >= 1 for Schwarz preconditioners");
  if (c.overlap < 0) throw ConfigError("overlap must be >= 0");

  auto check_shape = [](const std::array<int, 3>& s) {
    for (int d = 0; d < 3; ++d)
      if (s[d] < 1) throw ConfigError("partition entries must be >= 1");
  };
  check_shape(c.partition);
  for (const auto& s : c.partition_sweep) check_shape(s);

  if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("tol must lie in (0, 1)");
  if (c.max_it < 1) throw ConfigError("max_it must be >= 1");
  if (c.refine < 0) throw ConfigError("refine must be >= 0");
  if (c.cells_x < 1 || c.cells_y < 1) throw ConfigError("cells_x and cells_y must be >= 1");
  if (c.workers < 1) throw ConfigError("workers must be >= 1");
  if (!(c.rho > 0.0)) throw ConfigError("rho must be > 0");
  if (c.shift_scale < 0.0) throw ConfigError("shift_scale must be >= 0");
  if (c.k_max < 0) throw ConfigError("k_max must be >= 0");
  if (c.spe10_stride < 1) throw ConfigError("spe10_stride must be >= 1");
  for (int d = 0; d < 3; ++d) {
    if (c.spe10_dims[d] < 1) throw ConfigError("spe10_dims entries must be >= 1");
    if (c.contrast_dims[d] < 1) throw ConfigError("contrast_dims entries must be >= 1");
  }
  if (c.problem == "spe10" && c.spe10_file.empty())
    throw ConfigError("problem=spe10 requires spe10_file");
  if (!one_of(c.contrast_pattern, {"layers", "channels"}))
    throw ConfigError("contrast_pattern must be layers or channels, got '" + c.contrast_pattern +
                      "'");
  if (c.contrast < 1.0) throw ConfigError("contrast must be >= 1");
  for (double v : c.contrast_sweep)
    if (v < 1.0) throw ConfigError("contrast_sweep entries must be >= 1");
}

void write_report_csv(std::ostream& out, const StudyReport& report) {
  out << "N,precond,iters,kappa,dimVH,t_setup,t_iterate,qoi\n";
  for (const auto& r : report.rows)
    out << r.n << ',' << r.precond << ',' << r.iters << ',' << fmt_double(r.kappa) << ','
        << r.dim_vh << ',' << fmt_double(r.t_setup) << ',' << fmt_double(r.t_iterate) << ','
        << fmt_double(r.qoi) << '\n';
}

namespace {

struct ProblemBundle {
  std::unique_ptr<PlateProblem> plate;
  std::unique_ptr<DiffusionProblem> diffusion;
  SparseSystem sys;
  std::unique_ptr<ElementOperator> op;

  const StructuredGrid& grid() const { return plate ? plate->grid : diffusion->grid; }
};

ProblemBundle build_problem(const RunConfig& c, double contrast) {
  ProblemBundle b;
  if (c.problem == "plate_1a" || c.problem == "plate_1b") {
    std::vector<StackingRow> stacking =
        c.stacking_file.empty() ? reference_plate_stacking() : read_stacking_csv(c.stacking_file);
    ElementType element =
        c.element == "hex8" ? ElementType::Hex8 : ElementType::Serendipity20;
    b.plate = std::make_unique<PlateProblem>(
        make_plate_problem(stacking, element, c.refine, c.cells_x, c.cells_y));
    b.sys = b.plate->assemble();
    b.op = b.plate->make_operator();
  } else if (c.problem == "spe10") {
    PermeabilityField field = load_spe10(c.spe10_file, c.spe10_dims);
    b.diffusion =
        std::make_unique<DiffusionProblem>(make_spe10_problem(field, c.spe10_stride));
    b.sys = b.diffusion->assemble();
    b.op = b.diffusion->make_operator();
  } else {  // synthetic_contrast
    ContrastPattern pattern =
        c.contrast_pattern == "layers" ? ContrastPattern::Layers : ContrastPattern::Channels;
    b.diffusion = std::make_unique<DiffusionProblem>(
        make_contrast_problem(c.contrast_dims, contrast, pattern, c.seed));
    b.sys = b.diffusion->assemble();
    b.op = b.diffusion->make_operator();
  }
  return b;
}

struct RunArtifacts {
  std::vector<std::pair<std::string, std::string>> files;  // name -> content
};

StudyRow run_one(const RunConfig& c, const ProblemBundle& bundle, const std::array<int, 3>& shape,
                 const std::string& precond, const std::string& tag, RunArtifacts& artifacts,
                 std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const auto& grid = bundle.grid();
  const int n_dofs = static_cast<int>(bundle.sys.b.size());

  auto t0 = clock::now();
  OverlappingDecomposition decomp =
      decompose(grid, shape, precond == "none" ? std::max(c.overlap, 0) : c.overlap,
                c.adjacency == "face" ? Adjacency::Face : Adjacency::Box);
  SubdomainComm comm(decomp, c.workers);

  LinearOperator A = LinearOperator::from_matrix(bundle.sys.A);
  LinearOperator M;
  std::vector<SubdomainOperators> ops;
  std::optional<OneLevelSchwarz> one_level;
  std::optional<TwoLevelSchwarz> two_level;
  std::vector<EigenReportRow> eigen_rows;
  int dim_vh = 0;

  if (precond == "none") {
    M = LinearOperator::identity(n_dofs);
  } else {
    PartitionOfUnity pou = build_pou(decomp, bundle.sys.block_size);
    ops = build_subdomain_operators(*bundle.op, bundle.sys, decomp, pou, comm);
    if (precond == "as1") {
      one_level.emplace(ops, comm, n_dofs);
      M = one_level->as_operator();
    } else {
      CoarseSpace cs;
      if (precond == "zem") {
        cs = build_zem_coarse_space(ops, grid, comm);
      } else {
        GeneoOptions opt;
        opt.rho = c.rho;
        opt.k_max = c.k_max;
        opt.shift_scale = c.shift_scale;
        cs = build_geneo_coarse_space(ops, grid, comm, opt);
      }
      eigen_rows = cs.report;
      dim_vh = cs.dim();
      two_level.emplace(ops, comm, n_dofs, std::move(cs));
      M = two_level->as_operator();
    }
  }
  double t_setup = std::chrono::duration<double>(clock::now() - t0).count();

  t0 = clock::now();
  Vector x(n_dofs);
  SolveReport rep = c.solver == "pcg" ? pcg(A, M, bundle.sys.b, x, c.tol, c.max_it)
                                      : fgmres(A, M, bundle.sys.b, x, c.tol, c.max_it);
  double t_iterate = std::chrono::duration<double>(clock::now() - t0).count();

  if (!rep.converged)
    throw ConvergenceError("run " + tag + ": " + c.solver + " did not reach tol=" +
                           fmt_short(c.tol) + " within " + std::to_string(c.max_it) +
                           " iterations (final relative residual " +
                           fmt_short(rep.final_relative_residual) + ")");

  StudyRow row;
  row.n = decomp.num_subdomains();
  row.precond = precond;
  row.iters = rep.iterations;
  row.kappa = rep.condition_estimate;
  row.dim_vh = dim_vh;
  row.t_setup = t_setup;
  row.t_iterate = t_iterate;

  std::ostringstream vtk;
  if (bundle.plate) {
    StressField field = recover_stress(grid, x, bundle.plate->region_stiffness,
                                       bundle.plate->region_angle_deg);
    if (c.problem == "plate_1a") {
      row.qoi = max_displacement(x);
      log << "  " << tag << ": maximum vertical displacement = " << row.qoi << " mm\n";
    } else {
      double q_mpa = bundle.plate->pressure * 1000.0;
      FailureSummary fs =
          failure_load(q_mpa, field, bundle.plate->interface_regions, bundle.plate->allowables);
      row.qoi = fs.q_star;
      log << "  " << tag << ": failure load q* = " << row.qoi << " MPa (F_max = " << fs.f_max
          << ")\n";
    }
    std::vector<VtkCellField> cell_fields(2);
    cell_fields[0].name = "region";
    cell_fields[1].name = "camanho";
    cell_fields[0].values.reserve(grid.num_cells());
    cell_fields[1].values.reserve(grid.num_cells());
    for (int cell = 0; cell < grid.num_cells(); ++cell) {
      cell_fields[0].values.push_back(static_cast<double>(field.region[cell]));
      cell_fields[1].values.push_back(camanho(field.stress[cell], bundle.plate->allowables));
    }
    write_vtk(vtk, grid, &x, nullptr, "", cell_fields);
  } else {
    row.qoi = max_displacement(x, 1, 0);
    log << "  " << tag << ": maximum pressure magnitude = " << row.qoi << "\n";
    std::vector<VtkCellField> cell_fields(1);
    cell_fields[0].name = "kx";
    cell_fields[0].values = bundle.diffusion->field.kx;
    write_vtk(vtk, grid, nullptr, &x, "pressure", cell_fields);
  }

  std::ostringstream residual, eigen, ledger;
  write_residual_csv(residual, rep);
  write_eigen_report_csv(eigen, eigen_rows);
  comm.ledger().write_csv(ledger);

  artifacts.files.emplace_back("residual_" + tag + ".csv", residual.str());
  artifacts.files.emplace_back("eigen_" + tag + ".csv", eigen.str());
  artifacts.files.emplace_back("ledger_" + tag + ".csv", ledger.str());
  artifacts.files.emplace_back("solution_" + tag + ".vtk", vtk.str());

  log << "  " << tag << ": N=" << row.n << " iters=" << row.iters
      << " kappa=" << fmt_short(row.kappa) << " dimVH=" << row.dim_vh << '\n';
  return row;
}

}  // namespace

int run_study(const RunConfig& config, std::ostream& log) {
  try {
    validate_config(config);

    std::vector<std::array<int, 3>> partitions = config.partition_sweep.empty()
                                                     ? std::vector{config.partition}
                                                     : config.partition_sweep;
    std::vector<std::string> preconds = config.precond_sweep.empty()
                                            ? std::vector{config.preconditioner}
                                            : config.precond_sweep;
    const bool synthetic = config.problem == "synthetic_contrast";
    std::vector<double> contrasts =
        synthetic ? (config.contrast_sweep.empty() ? std::vector{config.contrast}
                                                   : config.contrast_sweep)
                  : std::vector<double>{0.0};

    StudyReport report;
    RunArtifacts artifacts;
    for (double contrast : contrasts) {
      ProblemBundle bundle = build_problem(config, contrast);
      log << config.problem << ": " << bundle.grid().num_cells() << " cells, "
          << bundle.sys.b.size() << " dofs";
      if (synthetic) log << ", contrast " << fmt_short(contrast);
      log << '\n';
      for (const auto& shape : partitions) {
        for (const auto& precond : preconds) {
          std::string tag = config.problem + "_" + precond + "_N" +
                            std::to_string(shape[0] * shape[1] * shape[2]);
          if (synthetic) tag += "_c" + std::string(fmt_short(contrast));
          report.rows.push_back(
              run_one(config, bundle, shape, precond, tag, artifacts, log));
        }
      }
    }

    std::ostringstream rs;
    write_report_csv(rs, report);
    artifacts.files.emplace_back("report.csv", rs.str());

    std::filesystem::path dir(config.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : artifacts.files) {
      std::ofstream out(dir / name);
      if (!out) throw IoError("cannot open '" + (dir / name).string() + "' for writing");
      out << content;
      if (!out) throw IoError("failed while writing '" + (dir / name).string() + "'");
    }
    log << "wrote " << artifacts.files.size() << " artifact files to " << dir.string() << '\n';
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    log << "i/o error: " << e.what() << '\n';
    return 1;
  } catch (const ConvergenceError& e) {
    log << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const NumericsError& e) {
    log << "numerics failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace geneo
