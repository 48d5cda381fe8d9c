#include "treereg/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "treereg/io.hpp"
#include "treereg/penalty.hpp"
#include "treereg/simulate.hpp"

namespace treereg {

int exit_code_for(errc code) {
  switch (code) {
    case errc::empty_tree:
    case errc::duplicate_edge:
    case errc::multiple_parents:
    case errc::multiple_roots:
    case errc::cycle_detected:
    case errc::single_child_node:
    case errc::composition_violated:
      return 1;
    case errc::singular_system:
    case errc::all_solves_failed:
    case errc::zero_signal:
      return 3;
    default:
      return 2;
  }
}

namespace {

void require_writable(const std::string& path, bool force) {
  if (path.empty()) return;
  if (!force && std::filesystem::exists(path))
    fail(errc::invalid_argument, path + " already exists (pass --force to overwrite)");
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, x);
  return buf;
}

std::string scientific(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

}  // namespace

int cmd_validate(const ValidateOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const CompositionalTree tree = load_tree_file(options.tree_path);
    out << "tree: " << tree.node_count() << " nodes, " << tree.leaf_count()
        << " leaves, depth " << tree.level_sets().size() - 1 << "\n";
    if (options.data_path.empty()) return 0;

    const DataTable table = load_csv_file(options.data_path);
    std::string missing;
    int n_missing = 0;
    for (int j = 0; j < tree.leaf_count(); ++j)
      if (table.column_index(tree.label(j)) < 0) {
        if (++n_missing <= 10) missing += (n_missing > 1 ? ", " : "") + tree.label(j);
      }
    if (n_missing > 0)
      fail(errc::missing_column, "data is missing " + std::to_string(n_missing) +
                                     " leaf columns: " + missing +
                                     (n_missing > 10 ? ", ..." : ""));

    Eigen::MatrixXd X(table.values.rows(), tree.leaf_count());
    for (int j = 0; j < tree.leaf_count(); ++j)
      X.col(j) = table.values.col(table.column_index(tree.label(j)));

    int violations = 0;
    for (int i = 0; i < X.rows(); ++i) {
      const double sum = X.row(i).sum();
      const double min = X.row(i).minCoeff();
      const bool bad_sum = std::abs(sum - 1.0) > options.sum_tol;
      const bool bad_sign = min < -options.negative_tol;
      if (!bad_sum && !bad_sign) continue;
      ++violations;
      if (violations <= 20) {
        out << "row " << i << ":";
        if (bad_sum) out << " sum " << fixed(sum, 8);
        if (bad_sign) out << " min " << scientific(min);
        out << "\n";
      }
    }
    if (violations > 20) out << "(" << violations - 20 << " more rows)\n";
    out << "data: " << X.rows() << " rows, " << violations << " violations\n";
    return violations == 0 ? 0 : 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

int cmd_fit(const FitOptions& options, std::ostream& out, std::ostream& err) {
  try {
    require_writable(options.out_path, options.force);
    const CompositionalTree tree = load_tree_file(options.tree_path);
    const DataTable table = load_csv_file(options.data_path);
    DesignData data = build_design(table, tree, options.outcome);
    if (options.normalize || options.force) normalize_rows(data.X_leaf);

    TuningConfig config;
    config.criterion = options.criterion;
    if (options.eta)
      config.eta_grid = {*options.eta};
    else if (!options.eta_grid.empty())
      config.eta_grid = options.eta_grid;
    config.lambda_grid_size = options.lambda_grid_size;
    config.lambda_min_ratio = options.lambda_min_ratio;
    config.threads = options.threads;
    config.require_nonnegative = !options.force;
    config.solver.ridge = options.ridge
                              ? *options.ridge
                              : (data.y.size() < tree.leaf_count() ? 1e-4 : 0.0);

    const FitResult result = fit(tree, data.X_leaf, data.y, config);
    const FitReport report = make_fit_report(tree, result);
    if (!options.out_path.empty()) save_fit_report(report, options.out_path);

    out << "method " << report.method << ", criterion " << report.criterion << "\n";
    out << "selected eta " << fixed(report.eta_hat, 3) << ", lambda "
        << scientific(report.lambda_hat) << ", df " << report.df << ", ic "
        << fixed(report.ic_value, 4) << "\n";
    out << "intercept " << fixed(report.intercept, 6) << "\n";
    const int top = std::min<int>(options.top, static_cast<int>(report.alpha.size()));
    out << "top " << top << " of " << report.alpha.size()
        << " nonzero marginal effects:\n";
    for (int i = 0; i < top; ++i)
      out << "  " << report.alpha[i].label << " " << fixed(report.alpha[i].value, 6)
          << "\n";
    for (const std::string& w : report.warnings) err << "warning: " << w << "\n";
    if (!options.out_path.empty()) out << "report written to " << options.out_path << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

int cmd_simulate(const SimulateOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.scenario != 0 && !options.spec_path.empty())
      fail(errc::invalid_argument, "give either a scenario number or a spec file, not both");
    ScenarioSpec spec;
    if (!options.spec_path.empty())
      spec = load_scenario_spec(options.spec_path);
    else
      spec = builtin_scenario(options.scenario);
    if (options.replicates) {
      if (*options.replicates < 1)
        fail(errc::invalid_argument, "replicate count must be positive");
      spec.replicates = *options.replicates;
    }
    if (options.seed) spec.seed = *options.seed;

    const std::string csv_path = options.out_prefix + ".csv";
    const std::string json_path = options.out_prefix + ".json";
    require_writable(csv_path, options.force);
    require_writable(json_path, options.force);

    out << "scenario " << spec.name << ": n " << spec.n << ", " << spec.replicates
        << " replicates, seed " << spec.seed
        << (spec.approximate ? " (stand-in tree, approximate targets)" : "") << "\n";
    const SimulationReport report = run_simulation(spec, options.threads);

    {
      std::ofstream csv(csv_path);
      if (!csv) fail(errc::io_error, "cannot write " + csv_path);
      write_simulation_csv(report, csv);
      if (!csv.flush()) fail(errc::io_error, "failed writing " + csv_path);
    }
    {
      std::ofstream json(json_path);
      if (!json) fail(errc::io_error, "cannot write " + json_path);
      json << simulation_report_json(report);
      if (!json.flush()) fail(errc::io_error, "failed writing " + json_path);
    }

    write_simulation_csv(report, out);
    if (report.failures > 0)
      err << report.failures << " of " << report.replicates << " replicates failed\n";
    out << "report written to " << csv_path << " and " << json_path << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

int cmd_penalty_dump(const PenaltyDumpOptions& options, std::ostream& out,
                     std::ostream& err) {
  try {
    const CompositionalTree tree = load_tree_file(options.tree_path);
    const PenaltyMatrix D(tree, options.eta);
    if (options.out_path.empty()) {
      dump_matrix_market(D, out);
    } else {
      require_writable(options.out_path, options.force);
      std::ofstream file(options.out_path);
      if (!file) fail(errc::io_error, "cannot write " + options.out_path);
      dump_matrix_market(D, file);
      if (!file.flush()) fail(errc::io_error, "failed writing " + options.out_path);
      out << "penalty written to " << options.out_path << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
}

}  // namespace treereg
