#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "treereg/errors.hpp"
#include "treereg/selection.hpp"

namespace treereg {

// Process exit code for a library error: 1 for validation failures (bad tree
// structure, composition violations), 2 for parse and usage problems, 3 for
// numerical failures.
int exit_code_for(errc code);

struct ValidateOptions {
  std::string tree_path;
  std::string data_path;  // optional; empty checks the tree alone
  double sum_tol = 1e-6;
  double negative_tol = 1e-9;
};

struct FitOptions {
  std::string tree_path;
  std::string data_path;
  std::string outcome;
  std::string out_path = "fit-report.json";
  Criterion criterion = Criterion::bic;
  std::vector<double> eta_grid;  // empty means the default 0, 0.1, ..., 1
  std::optional<double> eta;     // fixes a single eta; overrides eta_grid
  int lambda_grid_size = 50;
  double lambda_min_ratio = 1e-4;
  std::optional<double> ridge;   // default: 1e-4 when n < q, else 0
  int threads = 0;               // < 1 means one per hardware core
  bool normalize = false;        // divide each row by its leaf sum
  bool force = false;            // renormalize, skip the sign check, overwrite outputs
  int top = 10;                  // size of the coefficient table on stdout
};

struct SimulateOptions {
  int scenario = 0;       // 1..4; 0 when spec_path is given instead
  std::string spec_path;  // key = value scenario description
  std::optional<int> replicates;
  std::optional<std::uint64_t> seed;
  std::string out_prefix = "simulation";
  int threads = 0;
  bool force = false;  // overwrite existing outputs
};

struct PenaltyDumpOptions {
  std::string tree_path;
  double eta = 0.5;
  std::string out_path;  // empty writes to stdout
  bool force = false;
};

// The command entry points print human output to `out`, diagnostics to `err`,
// and return the process exit code.
int cmd_validate(const ValidateOptions& options, std::ostream& out, std::ostream& err);
int cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err);
int cmd_penalty_dump(const PenaltyDumpOptions& options, std::ostream& out,
                     std::ostream& err);

}  // namespace treereg
