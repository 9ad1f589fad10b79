#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "geneo/common.hpp"

namespace geneo {

/// Flat experiment configuration. Loaded from a key=value text file and/or
/// command-line overrides of the same form; unknown keys are errors.
struct RunConfig {
  std::string problem = "plate_1a";  // plate_1a | plate_1b | spe10 | synthetic_contrast
  std::string element = "hex8";      // hex8 | serendipity20 (plate problems only)
  int refine = 0;
  int cells_x = 20;
  int cells_y = 5;

  std::array<int, 3> partition{2, 1, 1};
  std::vector<std::array<int, 3>> partition_sweep;  // overrides partition when nonempty
  int overlap = 1;
  std::string adjacency = "face";  // face | box

  std::string preconditioner = "geneo";  // none | as1 | zem | geneo
  std::vector<std::string> precond_sweep;
  double rho = 1.0;
  double shift_scale = 1e-6;
  int k_max = 20;

  std::string solver = "pcg";  // pcg | fgmres
  double tol = 1e-5;
  int max_it = 1000;

  std::string output_dir = ".";
  int workers = 4;

  std::string stacking_file;  // optional stacking CSV; empty = built-in layup

  std::string spe10_file;
  std::array<int, 3> spe10_dims{60, 220, 85};
  int spe10_stride = 4;

  std::array<int, 3> contrast_dims{40, 40, 30};
  double contrast = 1e4;
  std::vector<double> contrast_sweep;
  std::string contrast_pattern = "layers";  // layers | channels
  unsigned seed = 1234;
};

/// Applies one "key=value" assignment. Throws ConfigError on unknown keys or
/// malformed values.
void set_config_value(RunConfig& config, const std::string& assignment);

/// Parses a config file: one key=value per line, '#' comments, blank lines ok.
RunConfig load_config(std::istream& in);
RunConfig load_config_file(const std::string& path);

/// Cross-field validation; throws ConfigError with the offending key.
void validate_config(const RunConfig& config);

struct StudyRow {
  int n = 1;                // number of subdomains
  std::string precond;
  int iters = 0;
  double kappa = 0.0;       // PCG condition estimate; nan for fgmres/none
  int dim_vh = 0;           // coarse space dimension (0 for none/as1)
  double t_setup = 0.0;     // seconds: decomposition + local/coarse operator setup
  double t_iterate = 0.0;   // seconds: Krylov loop
  double qoi = 0.0;         // problem-specific quantity of interest
};

struct StudyReport {
  std::vector<StudyRow> rows;
};

void write_report_csv(std::ostream& out, const StudyReport& report);

/// Runs the configured study: for every (partition, preconditioner[, contrast])
/// combination, builds the problem, solves it, post-processes, and writes the
/// artifact set (report, residual history, eigen report, exchange ledger, VTK)
/// under config.output_dir. Nothing is written unless every run succeeds.
///
/// Returns the process exit code: 0 success, 1 config error, 2 solver did not
/// converge, 3 numerical contract violation. Errors are described on `log`.
int run_study(const RunConfig& config, std::ostream& log);

}  // namespace geneo
