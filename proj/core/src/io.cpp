#include "treereg/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace treereg {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kSchemaVersion = "1.0";

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double value = 0.0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(errc::parse_error, where + ": not a number: '" + t + "'");
  return value;
}

long long parse_integer(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  long long value = 0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    fail(errc::parse_error, where + ": not an integer: '" + t + "'");
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

}  // namespace

int DataTable::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < columns.size(); ++c)
    if (columns[c] == name) return static_cast<int>(c);
  return -1;
}

DataTable read_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  int line_no = 0;
  DataTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    table.columns = split_csv_line(line);
    break;
  }
  if (table.columns.empty())
    fail(errc::parse_error, source_name + ": no header row");
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (table.columns[c].empty())
      fail(errc::parse_error, source_name + ":" + std::to_string(line_no) +
                                  ": empty column name in header");
    for (std::size_t d = c + 1; d < table.columns.size(); ++d)
      if (table.columns[c] == table.columns[d])
        fail(errc::parse_error, source_name + ":" + std::to_string(line_no) +
                                    ": duplicate column '" + table.columns[c] + "'");
  }

  const std::size_t width = table.columns.size();
  std::vector<double> data;
  int rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = source_name + ":" + std::to_string(line_no);
    if (cells.size() != width)
      fail(errc::parse_error, where + ": expected " + std::to_string(width) +
                                  " cells, found " + std::to_string(cells.size()));
    for (const std::string& cell : cells) data.push_back(parse_double(cell, where));
    ++rows;
  }
  table.values.resize(rows, static_cast<int>(width));
  for (int i = 0; i < rows; ++i)
    for (std::size_t c = 0; c < width; ++c) table.values(i, c) = data[i * width + c];
  return table;
}

DataTable load_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return read_csv(in, path);
}

DesignData build_design(const DataTable& table, const CompositionalTree& tree,
                        const std::string& outcome_column) {
  const int q = tree.leaf_count();
  std::vector<int> leaf_cols(q, -1);
  std::string missing;
  int n_missing = 0;
  for (int j = 0; j < q; ++j) {
    leaf_cols[j] = table.column_index(tree.label(j));
    if (leaf_cols[j] < 0) {
      if (++n_missing <= 10) missing += (n_missing > 1 ? ", " : "") + tree.label(j);
    }
  }
  if (n_missing > 0)
    fail(errc::missing_column, "data is missing " + std::to_string(n_missing) +
                                   " leaf columns: " + missing +
                                   (n_missing > 10 ? ", ..." : ""));
  const int ycol = table.column_index(outcome_column);
  if (ycol < 0)
    fail(errc::missing_column, "data has no outcome column '" + outcome_column + "'");
  if (tree.has_label(outcome_column) && tree.is_leaf(tree.index_of(outcome_column)))
    fail(errc::invalid_argument,
         "outcome column '" + outcome_column + "' is a leaf of the tree");

  DesignData out;
  const int n = static_cast<int>(table.values.rows());
  out.X_leaf.resize(n, q);
  for (int j = 0; j < q; ++j) out.X_leaf.col(j) = table.values.col(leaf_cols[j]);
  out.y = table.values.col(ycol);
  return out;
}

void normalize_rows(Eigen::MatrixXd& X_leaf) {
  for (int i = 0; i < X_leaf.rows(); ++i) {
    const double sum = X_leaf.row(i).sum();
    if (std::abs(sum) < 1e-12)
      fail(errc::composition_violated,
           "row " + std::to_string(i) + " sums to zero and cannot be normalized");
    X_leaf.row(i) /= sum;
  }
}

namespace {

std::vector<LabeledValue> labeled_nonzeros(const CompositionalTree& tree,
                                           const Eigen::VectorXd& values, int count,
                                           int label_offset) {
  std::vector<LabeledValue> out;
  for (int j = 0; j < count; ++j)
    if (std::abs(values[j]) > 1e-8) out.push_back({tree.label(j + label_offset), values[j]});
  std::stable_sort(out.begin(), out.end(), [](const LabeledValue& a, const LabeledValue& b) {
    return std::abs(a.value) > std::abs(b.value);
  });
  return out;
}

}  // namespace

FitReport make_fit_report(const CompositionalTree& tree, const FitResult& result) {
  FitReport report;
  report.method = std::all_of(result.surface.etas.begin(), result.surface.etas.end(),
                              [](double e) { return e == 1.0; })
                      ? "CLASSO"
                      : "proposed";
  report.criterion = criterion_name(result.criterion);
  report.n = result.surface.n;
  report.p = tree.node_count();
  report.q = tree.leaf_count();
  report.eta_hat = result.eta_hat;
  report.lambda_hat = result.lambda_hat;
  report.ic_value = result.ic_value;
  report.intercept = result.intercept;
  report.df = result.df;
  report.alpha = labeled_nonzeros(tree, result.alpha_hat, tree.leaf_count(), 0);
  report.beta = labeled_nonzeros(tree, result.beta_hat, tree.node_count() - 1, 0);
  report.etas = result.surface.etas;
  report.lambdas = result.surface.lambdas;
  const std::size_t total = result.surface.points.size();
  report.ic_surface.resize(total);
  report.iterations.resize(total);
  report.converged.resize(total);
  report.point_ok.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    const GridPoint& pt = result.surface.points[i];
    report.point_ok[i] = pt.ok ? 1 : 0;
    report.converged[i] = pt.converged ? 1 : 0;
    report.iterations[i] = pt.iterations;
    report.ic_surface[i] =
        pt.ok ? information_criterion(pt.rss, result.surface.n, pt.df, result.criterion)
              : 0.0;
  }
  report.warnings = result.warnings;
  return report;
}

std::string fit_report_json(const FitReport& report) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "fit-report";
  j["method"] = report.method;
  j["criterion"] = report.criterion;
  j["n"] = report.n;
  j["p"] = report.p;
  j["q"] = report.q;
  ordered_json sel;
  sel["eta"] = report.eta_hat;
  sel["lambda"] = report.lambda_hat;
  sel["ic"] = report.ic_value;
  sel["df"] = report.df;
  sel["intercept"] = report.intercept;
  j["selected"] = std::move(sel);
  auto coef_array = [](const std::vector<LabeledValue>& entries) {
    ordered_json arr = ordered_json::array();
    for (const LabeledValue& e : entries) {
      ordered_json item;
      item["label"] = e.label;
      item["value"] = e.value;
      arr.push_back(std::move(item));
    }
    return arr;
  };
  j["alpha"] = coef_array(report.alpha);
  j["beta"] = coef_array(report.beta);
  ordered_json grid;
  grid["etas"] = report.etas;
  grid["lambdas"] = report.lambdas;
  grid["ic"] = report.ic_surface;
  grid["iterations"] = report.iterations;
  grid["converged"] = report.converged;
  grid["ok"] = report.point_ok;
  j["grid"] = std::move(grid);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

FitReport parse_fit_report(const std::string& text, const std::string& source_name) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, source_name + ": " + e.what());
  }
  try {
    const std::string version = j.at("schema_version").get<std::string>();
    if (version.rfind("1.", 0) != 0)
      fail(errc::unsupported_version,
           source_name + ": schema version " + version + " is not supported (need 1.x)");
    FitReport report;
    report.method = j.at("method").get<std::string>();
    report.criterion = j.at("criterion").get<std::string>();
    report.n = j.at("n").get<int>();
    report.p = j.at("p").get<int>();
    report.q = j.at("q").get<int>();
    const auto& sel = j.at("selected");
    report.eta_hat = sel.at("eta").get<double>();
    report.lambda_hat = sel.at("lambda").get<double>();
    report.ic_value = sel.at("ic").get<double>();
    report.df = sel.at("df").get<int>();
    report.intercept = sel.at("intercept").get<double>();
    for (const auto& item : j.at("alpha"))
      report.alpha.push_back(
          {item.at("label").get<std::string>(), item.at("value").get<double>()});
    for (const auto& item : j.at("beta"))
      report.beta.push_back(
          {item.at("label").get<std::string>(), item.at("value").get<double>()});
    const auto& grid = j.at("grid");
    report.etas = grid.at("etas").get<std::vector<double>>();
    report.lambdas = grid.at("lambdas").get<std::vector<double>>();
    report.ic_surface = grid.at("ic").get<std::vector<double>>();
    report.iterations = grid.at("iterations").get<std::vector<int>>();
    report.converged = grid.at("converged").get<std::vector<unsigned char>>();
    report.point_ok = grid.at("ok").get<std::vector<unsigned char>>();
    report.warnings = j.at("warnings").get<std::vector<std::string>>();
    return report;
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse_error, source_name + ": malformed fit report: " + e.what());
  }
}

void save_fit_report(const FitReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(errc::io_error, "cannot write " + path);
  out << fit_report_json(report);
  if (!out) fail(errc::io_error, "failed writing " + path);
}

FitReport load_fit_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_fit_report(buffer.str(), path);
}

std::string format_stat(double mean, double sd) {
  auto two_decimals = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
  };
  return two_decimals(mean) + "(" + two_decimals(sd) + ")";
}

void write_simulation_csv(const SimulationReport& report, std::ostream& out) {
  out << "Method,Tuning,Sensitivity,Specificity,SSE,Eta\n";
  for (const SimulationCell& cell : report.cells) {
    out << method_name(cell.method) << ','
        << (cell.criterion == Criterion::aic ? "AIC" : "BIC") << ','
        << format_stat(cell.sensitivity.mean, cell.sensitivity.sd) << ','
        << format_stat(cell.specificity.mean, cell.specificity.sd) << ','
        << format_stat(cell.sse.mean, cell.sse.sd) << ','
        << format_stat(cell.eta.mean, cell.eta.sd) << '\n';
  }
}

std::string simulation_report_json(const SimulationReport& report) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "simulation-report";
  j["scenario"] = report.scenario;
  j["n"] = report.n;
  j["p"] = report.p;
  j["q"] = report.q;
  j["replicates"] = report.replicates;
  j["seed"] = report.seed;
  j["approximate"] = report.approximate;
  j["failures"] = report.failures;
  j["failure_messages"] = report.failure_messages;
  ordered_json cells = ordered_json::array();
  for (const SimulationCell& cell : report.cells) {
    ordered_json c;
    c["method"] = method_name(cell.method);
    c["criterion"] = criterion_name(cell.criterion);
    auto stats = [](const MetricStats& s) {
      ordered_json v;
      v["mean"] = s.mean;
      v["sd"] = s.sd;
      return v;
    };
    c["sensitivity"] = stats(cell.sensitivity);
    c["specificity"] = stats(cell.specificity);
    c["sse"] = stats(cell.sse);
    c["eta"] = stats(cell.eta);
    ordered_json reps = ordered_json::array();
    for (const ReplicateMetrics& rm : cell.replicates) {
      ordered_json r;
      r["ok"] = rm.ok;
      r["sensitivity"] = rm.sensitivity;
      r["specificity"] = rm.specificity;
      r["sse"] = rm.sse;
      r["eta"] = rm.eta_hat;
      r["lambda"] = rm.lambda_hat;
      r["df"] = rm.df;
      reps.push_back(std::move(r));
    }
    c["replicates"] = std::move(reps);
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

namespace {

std::string unquote(const std::string& value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
    return value.substr(1, value.size() - 2);
  return value;
}

}  // namespace

ScenarioSpec parse_scenario_spec(std::istream& in, const std::string& source_name,
                                 const std::string& base_dir) {
  std::string line;
  int line_no = 0;
  bool have_scenario = false, have_tree = false, have_ridge = false;
  bool have_n = false, have_m = false, have_seed = false;
  bool have_noise = false, have_decay = false, have_name = false;
  int scenario_id = 0;
  std::string tree_path, name;
  long long n = 0, m = 0, seed = 0;
  double noise_ratio = 0.0, cov_decay = 0.0, ridge = 0.0;
  std::vector<std::pair<std::string, double>> beta_entries;  // label, value
  bool have_intercept = false;
  double intercept = 0.0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::string where = source_name + ":" + std::to_string(line_no);
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(errc::parse_error, where + ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      fail(errc::parse_error, where + ": expected 'key = value'");

    if (key == "scenario") {
      scenario_id = static_cast<int>(parse_integer(value, where));
      have_scenario = true;
    } else if (key == "tree") {
      tree_path = unquote(value);
      have_tree = true;
    } else if (key == "name") {
      name = unquote(value);
      have_name = true;
    } else if (key == "n") {
      n = parse_integer(value, where);
      have_n = true;
    } else if (key == "m") {
      m = parse_integer(value, where);
      have_m = true;
    } else if (key == "seed") {
      seed = parse_integer(value, where);
      have_seed = true;
    } else if (key == "noise_ratio") {
      noise_ratio = parse_double(value, where);
      have_noise = true;
    } else if (key == "cov_decay") {
      cov_decay = parse_double(value, where);
      have_decay = true;
    } else if (key == "ridge") {
      ridge = parse_double(value, where);
      have_ridge = true;
    } else if (key == "intercept") {
      intercept = parse_double(value, where);
      have_intercept = true;
    } else if (key.rfind("beta.", 0) == 0) {
      const std::string label = trim(key.substr(5));
      if (label.empty()) fail(errc::parse_error, where + ": empty label in beta entry");
      beta_entries.emplace_back(label, parse_double(value, where));
    } else {
      fail(errc::parse_error, where + ": unknown key '" + key + "'");
    }
  }

  if (have_scenario && have_tree)
    fail(errc::parse_error,
         source_name + ": 'scenario' and 'tree' are mutually exclusive");
  if (!have_scenario && !have_tree)
    fail(errc::parse_error, source_name + ": need either 'scenario' or 'tree'");

  ScenarioSpec spec;
  if (have_scenario) {
    spec = builtin_scenario(scenario_id);
  } else {
    std::filesystem::path p(tree_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    spec.tree = load_tree_file(p.string());
    spec.name = "custom";
    spec.beta_star = Eigen::VectorXd::Zero(spec.tree.node_count());
    spec.tuning.require_nonnegative = false;
  }
  for (const auto& [label, value] : beta_entries) {
    if (!spec.tree.has_label(label))
      fail(errc::unknown_label, source_name + ": beta entry for unknown node '" + label +
                                    "'");
    spec.beta_star[spec.tree.index_of(label)] = value;
  }
  if (have_intercept) spec.beta_star[spec.tree.root()] = intercept;
  if (have_name) spec.name = name;
  if (have_n) {
    if (n < 2) fail(errc::invalid_argument, source_name + ": n must be at least 2");
    spec.n = static_cast<int>(n);
  }
  if (have_m) {
    if (m < 1) fail(errc::invalid_argument, source_name + ": m must be positive");
    spec.replicates = static_cast<int>(m);
  }
  if (have_seed) spec.seed = static_cast<std::uint64_t>(seed);
  if (have_noise) {
    if (noise_ratio < 0.0)
      fail(errc::invalid_argument, source_name + ": noise_ratio must be nonnegative");
    spec.noise_ratio = noise_ratio;
  }
  if (have_decay) spec.cov_decay = cov_decay;
  if (have_ridge) {
    if (ridge < 0.0) fail(errc::invalid_argument, source_name + ": ridge must be nonnegative");
    spec.tuning.solver.ridge = ridge;
  } else {
    spec.tuning.solver.ridge = spec.n < spec.tree.leaf_count() ? 1e-4 : 0.0;
  }
  return spec;
}

ScenarioSpec load_scenario_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open " + path);
  return parse_scenario_spec(in, path, std::filesystem::path(path).parent_path().string());
}

}  // namespace treereg
