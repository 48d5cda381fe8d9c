// treereg: regularized regression on compositional trees.
//
// Subcommands:
//   validate      check a tree file, optionally against a data file
//   fit           tune and fit on a CSV, write a JSON report
//   simulate      run a bundled or custom simulation study
//   penalty-dump  write the penalty matrix in Matrix Market form

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "treereg/commands.hpp"

namespace {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      grid.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--eta-grid", "not a number: '" + cell + "'");
    }
  }
  if (grid.empty()) throw CLI::ValidationError("--eta-grid", "empty grid");
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized regression on compositional trees"};
  app.require_subcommand(1);

  treereg::ValidateOptions validate_opts;
  CLI::App* validate = app.add_subcommand("validate", "Check a tree and optional data file");
  validate->add_option("--tree", validate_opts.tree_path, "Tree edge file (child<TAB>parent)")
      ->required();
  validate->add_option("--data", validate_opts.data_path, "CSV with leaf columns to check");
  validate->add_option("--sum-tol", validate_opts.sum_tol, "Allowed |row sum - 1|");
  validate->add_option("--negative-tol", validate_opts.negative_tol,
                       "Allowed magnitude of negative entries");

  treereg::FitOptions fit_opts;
  std::string criterion = "bic";
  std::string eta_grid_text;
  double eta_value = -1.0;
  double ridge_value = -1.0;
  CLI::App* fit = app.add_subcommand("fit", "Tune and fit a model on CSV data");
  fit->add_option("--tree", fit_opts.tree_path, "Tree edge file")->required();
  fit->add_option("--data", fit_opts.data_path, "CSV with leaf and outcome columns")->required();
  fit->add_option("--outcome", fit_opts.outcome, "Outcome column name")->required();
  fit->add_option("--out", fit_opts.out_path, "JSON report path")->capture_default_str();
  fit->add_option("--criterion", criterion, "Tuning criterion")->capture_default_str()
      ->check(CLI::IsMember({"aic", "bic"}));
  fit->add_option("--eta-grid", eta_grid_text, "Comma separated eta values");
  fit->add_option("--eta", eta_value, "Fix eta to a single value (1 = fusion only baseline)");
  fit->add_option("--lambda-grid-size", fit_opts.lambda_grid_size, "Lambda grid length")->capture_default_str();
  fit->add_option("--lambda-min-ratio", fit_opts.lambda_min_ratio,
                  "Smallest lambda as a fraction of lambda_max")->capture_default_str();
  fit->add_option("--ridge", ridge_value, "Ridge augmentation (default 1e-4 when n < q, else 0)");
  fit->add_option("--threads", fit_opts.threads, "Worker threads, 0 = one per core")->capture_default_str();
  fit->add_option("--top", fit_opts.top, "Number of effects to print")->capture_default_str();
  fit->add_flag("--normalize", fit_opts.normalize, "Renormalize rows to sum to one");
  fit->add_flag("--force", fit_opts.force,
                "Renormalize, allow negative entries, overwrite outputs");

  treereg::SimulateOptions sim_opts;
  CLI::App* simulate = app.add_subcommand("simulate", "Run a simulation study");
  simulate->add_option("--scenario", sim_opts.scenario, "Bundled scenario number (1-4)");
  simulate->add_option("--spec", sim_opts.spec_path, "Scenario spec file");
  int replicates = 0;
  std::uint64_t seed = 0;
  CLI::Option* m_opt = simulate->add_option("--m", replicates, "Replicate count override");
  CLI::Option* seed_opt = simulate->add_option("--seed", seed, "Base seed override");
  simulate->add_option("--out-prefix", sim_opts.out_prefix,
                       "Output prefix for .csv and .json")->capture_default_str();
  simulate->add_option("--threads", sim_opts.threads, "Worker threads, 0 = one per core")->capture_default_str();
  simulate->add_flag("--force", sim_opts.force, "Overwrite existing outputs");

  treereg::PenaltyDumpOptions dump_opts;
  CLI::App* dump = app.add_subcommand("penalty-dump", "Write the penalty matrix");
  dump->add_option("--tree", dump_opts.tree_path, "Tree edge file")->required();
  dump->add_option("--eta", dump_opts.eta, "Penalty mixing weight in [0, 1]")->capture_default_str();
  dump->add_option("--out", dump_opts.out_path, "Output path, default stdout");
  dump->add_flag("--force", dump_opts.force, "Overwrite an existing output");

  try {
    app.parse(argc, argv);
    if (fit->count("--eta-grid") > 0) fit_opts.eta_grid = parse_grid(eta_grid_text);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (fit->count("--eta") > 0) fit_opts.eta = eta_value;
  if (fit->count("--ridge") > 0) fit_opts.ridge = ridge_value;
  fit_opts.criterion = criterion == "aic" ? treereg::Criterion::aic : treereg::Criterion::bic;
  if (m_opt->count() > 0) sim_opts.replicates = replicates;
  if (seed_opt->count() > 0) sim_opts.seed = seed;

  if (validate->parsed()) return treereg::cmd_validate(validate_opts, std::cout, std::cerr);
  if (fit->parsed()) return treereg::cmd_fit(fit_opts, std::cout, std::cerr);
  if (simulate->parsed()) return treereg::cmd_simulate(sim_opts, std::cout, std::cerr);
  if (dump->parsed()) return treereg::cmd_penalty_dump(dump_opts, std::cout, std::cerr);
  return 2;
}
