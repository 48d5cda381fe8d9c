#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "treereg/selection.hpp"
#include "treereg/simulate.hpp"
#include "treereg/tree.hpp"

namespace treereg {

// Numeric CSV with a header row. Cells are parsed as doubles; anything else
// is a ParseError with a line number.
struct DataTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns.size()

  int column_index(const std::string& name) const;  // -1 when absent
};

DataTable read_csv(std::istream& in, const std::string& source_name);
DataTable load_csv_file(const std::string& path);

// Pulls the leaf columns (matched to the tree by label) and the outcome
// column out of a table. Extra columns, including internal-node columns, are
// ignored; missing leaf columns or a missing outcome are reported together.
struct DesignData {
  Eigen::MatrixXd X_leaf;  // n x q, tree leaf order
  Eigen::VectorXd y;
};
DesignData build_design(const DataTable& table, const CompositionalTree& tree,
                        const std::string& outcome_column);

// Divides each row by its sum. Rows with |sum| < 1e-12 are an error.
void normalize_rows(Eigen::MatrixXd& X_leaf);

// Serializable fit summary. Coefficient lists keep the nonzero entries only
// (|value| > 1e-8), sorted by absolute value descending, labeled with tree
// node names. Grid vectors are eta major; failed grid points carry ok = 0 and
// an ic of 0.
struct LabeledValue {
  std::string label;
  double value = 0.0;
  bool operator==(const LabeledValue&) const = default;
};

struct FitReport {
  std::string method;     // "CLASSO" when the whole eta grid is 1, else "proposed"
  std::string criterion;  // "aic" or "bic"
  int n = 0, p = 0, q = 0;
  double eta_hat = 0.0, lambda_hat = 0.0, ic_value = 0.0, intercept = 0.0;
  int df = 0;
  std::vector<LabeledValue> alpha;
  std::vector<LabeledValue> beta;
  std::vector<double> etas, lambdas;
  std::vector<double> ic_surface;          // information criterion per point
  std::vector<int> iterations;             // solver iterations per point
  std::vector<unsigned char> converged;    // 0/1 per point
  std::vector<unsigned char> point_ok;     // 0/1 per point
  std::vector<std::string> warnings;
  bool operator==(const FitReport&) const = default;
};

FitReport make_fit_report(const CompositionalTree& tree, const FitResult& result);

// JSON serialization carries a schema_version; the loader accepts any "1.x"
// and rejects other majors.
std::string fit_report_json(const FitReport& report);
FitReport parse_fit_report(const std::string& text, const std::string& source_name);
void save_fit_report(const FitReport& report, const std::string& path);
FitReport load_fit_report(const std::string& path);

// "mean(sd)" cell with both numbers rounded to two decimals and trailing
// zeros trimmed: 0.966/0.08 -> "0.97(0.08)", 1.0/0.0 -> "1(0)".
std::string format_stat(double mean, double sd);

// Method, Tuning, Sensitivity, Specificity, SSE, Eta; one row per cell.
void write_simulation_csv(const SimulationReport& report, std::ostream& out);

// Full precision version of the report, including per-replicate metrics.
std::string simulation_report_json(const SimulationReport& report);

// Scenario description in a small key = value format ('#' comments):
//
//   scenario = 2          start from a bundled scenario, or
//   tree = leaves.tsv     a tree file (path relative to the spec file)
//   beta.X249 = 1         truth entries by node label (with tree, or to
//   intercept = 3         override a bundled truth)
//   n = 1000
//   m = 50
//   seed = 7
//   noise_ratio = 1.0
//   cov_decay = 0.2
//   ridge = 1e-4          optional; default 1e-4 when n < q, else 0
//   name = my-study       optional report label
ScenarioSpec load_scenario_spec(const std::string& path);
ScenarioSpec parse_scenario_spec(std::istream& in, const std::string& source_name,
                                 const std::string& base_dir);

}  // namespace treereg
