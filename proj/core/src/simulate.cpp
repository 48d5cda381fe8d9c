#include "treereg/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "treereg/recovery.hpp"

namespace treereg {

CompositionalTree make_binary_tree(int depth) {
  if (depth < 1) fail(errc::invalid_argument, "binary tree depth must be at least 1");
  if (depth > 20) fail(errc::invalid_argument, "binary tree depth is capped at 20");
  const int q = 1 << depth;
  std::vector<Edge> edges;
  edges.reserve(2 * q - 2);
  std::vector<int> level(q);
  for (int j = 0; j < q; ++j) level[j] = j + 1;
  int next = q + 1;
  while (level.size() > 1) {
    std::vector<int> up;
    up.reserve(level.size() / 2);
    for (std::size_t s = 0; s < level.size(); s += 2) {
      edges.push_back({"X" + std::to_string(level[s]), "X" + std::to_string(next)});
      edges.push_back({"X" + std::to_string(level[s + 1]), "X" + std::to_string(next)});
      up.push_back(next++);
    }
    level = std::move(up);
  }
  return CompositionalTree::from_edges(edges);
}

CompositionalTree make_region_tree() {
  std::vector<Edge> edges;
  auto add = [&edges](const std::string& child, const std::string& parent) {
    edges.push_back({child, parent});
  };
  auto add_leaves = [&](const std::string& parent, int count) {
    for (int a = 1; a <= count; ++a) add(parent + ".L" + std::to_string(a), parent);
  };

  for (int s = 1; s <= 7; ++s) add("B" + std::to_string(s), "B");

  // B1 and B2: six internal children each, with (internal, leaf) child counts
  // below, and two or three leaves per grandchild, alternating.
  const std::pair<int, int> splits[6] = {{6, 3}, {6, 4}, {5, 3}, {5, 4}, {5, 3}, {5, 3}};
  for (int s = 1; s <= 2; ++s) {
    const std::string side = "B" + std::to_string(s);
    int cycle = 0;
    for (int j = 1; j <= 6; ++j) {
      const std::string mid = side + "." + std::to_string(j);
      add(mid, side);
      for (int k = 1; k <= splits[j - 1].first; ++k) {
        const std::string low = mid + "." + std::to_string(k);
        add(low, mid);
        add_leaves(low, cycle++ % 2 == 0 ? 2 : 3);
      }
      add_leaves(mid, splits[j - 1].second);
    }
  }

  add("B3.1", "B3");
  add_leaves("B3.1", 4);
  add_leaves("B3", 3);
  add_leaves("B4", 8);
  add_leaves("B5", 8);
  add_leaves("B6", 7);
  add_leaves("B7", 6);
  return CompositionalTree::from_edges(edges);
}

Eigen::VectorXd ScenarioSpec::alpha_star() const { return forward_alpha(tree, beta_star); }

namespace {

void set_beta(const CompositionalTree& tree, Eigen::VectorXd& beta,
              const std::string& label, double value) {
  beta[tree.index_of(label)] = value;
}

}  // namespace

ScenarioSpec builtin_scenario(int id) {
  ScenarioSpec spec;
  spec.seed = 12345;
  spec.replicates = 100;
  switch (id) {
    case 1:
      spec.name = "scenario-1";
      spec.tree = make_binary_tree(7);
      spec.n = 120;
      spec.beta_star = Eigen::VectorXd::Zero(spec.tree.node_count());
      set_beta(spec.tree, spec.beta_star, "X1", 1.0);
      set_beta(spec.tree, spec.beta_star, "X2", -1.0);
      set_beta(spec.tree, spec.beta_star, "X129", 1.0);
      set_beta(spec.tree, spec.beta_star, "X130", -1.0);
      break;
    case 2:
      spec.name = "scenario-2";
      spec.tree = make_binary_tree(7);
      spec.n = 120;
      spec.beta_star = Eigen::VectorXd::Zero(spec.tree.node_count());
      set_beta(spec.tree, spec.beta_star, "X249", 1.0);
      set_beta(spec.tree, spec.beta_star, "X250", -1.0);
      set_beta(spec.tree, spec.beta_star, "X253", 1.0);
      set_beta(spec.tree, spec.beta_star, "X254", -1.0);
      break;
    case 3:
      spec.name = "scenario-3";
      spec.tree = make_region_tree();
      spec.n = 819;
      spec.approximate = true;
      spec.beta_star = Eigen::VectorXd::Zero(spec.tree.node_count());
      set_beta(spec.tree, spec.beta_star, "B1.1.L1", 3.0);
      set_beta(spec.tree, spec.beta_star, "B1.1.L2", -2.0);
      set_beta(spec.tree, spec.beta_star, "B1.1.L3", -1.0);
      break;
    case 4:
      spec.name = "scenario-4";
      spec.tree = make_region_tree();
      spec.n = 819;
      spec.approximate = true;
      spec.beta_star = Eigen::VectorXd::Zero(spec.tree.node_count());
      set_beta(spec.tree, spec.beta_star, "B1", 1.0);
      set_beta(spec.tree, spec.beta_star, "B2", -1.0);
      break;
    default:
      fail(errc::unknown_scenario, "unknown scenario " + std::to_string(id) +
                                       " (bundled scenarios are 1, 2, 3, 4)");
  }
  spec.beta_star[spec.tree.root()] = 3.0;
  if (spec.n < spec.tree.leaf_count()) spec.tuning.solver.ridge = 1e-4;
  // Rows sum to one by construction, but the Gaussian entries go negative.
  spec.tuning.require_nonnegative = false;
  return spec;
}

Eigen::MatrixXd generate_design(const CompositionalTree& tree, int n, double cov_decay,
                                Rng& rng) {
  if (n < 1) fail(errc::invalid_argument, "need at least one observation");
  if (!(cov_decay > -1.0 && cov_decay < 1.0))
    fail(errc::invalid_argument, "cov_decay must lie in (-1, 1)");
  const int q = tree.leaf_count();
  const double carry = std::sqrt(1.0 - cov_decay * cov_decay);
  Eigen::MatrixXd X(n, q);
  Eigen::VectorXd row(q);
  for (int i = 0; i < n; ++i) {
    int attempts = 0;
    double sum = 0.0;
    do {
      if (++attempts > 1000)
        fail(errc::singular_system,
             "design row kept degenerating (sum below 1e-8 after 1000 draws)");
      // AR(1) with autocorrelation cov_decay: x_1 = z_1,
      // x_j = cov_decay x_{j-1} + sqrt(1 - cov_decay^2) z_j gives the
      // stationary covariance cov_decay^|i-j| exactly.
      row[0] = rng.normal();
      for (int j = 1; j < q; ++j) row[j] = cov_decay * row[j - 1] + carry * rng.normal();
      sum = row.sum();
    } while (std::abs(sum) < 1e-8);
    X.row(i) = row / sum;
  }
  return X;
}

Eigen::VectorXd generate_response(const Eigen::MatrixXd& X_full,
                                  const Eigen::VectorXd& beta_star, double noise_ratio,
                                  Rng& rng, Warnings* warnings) {
  const int n = static_cast<int>(X_full.rows());
  const int p = static_cast<int>(X_full.cols());
  if (beta_star.size() != p)
    fail(errc::dimension_mismatch, "beta_star length does not match the expanded design");
  if (noise_ratio < 0.0) fail(errc::invalid_argument, "noise_ratio must be nonnegative");

  Eigen::VectorXd signal = X_full * beta_star;
  double sigma2 = 0.0;
  if (noise_ratio > 0.0) {
    const bool has_effects = n >= 2 && (beta_star.head(p - 1).array().abs() > 0.0).any();
    const double var =
        n >= 2 ? (signal.array() - signal.mean()).square().sum() / (n - 1) : 0.0;
    // A constant signal computed in floating point leaves rounding residue of
    // order eps^2 relative to its scale, so the zero test must be relative.
    const double scale2 = 1.0 + signal.squaredNorm() / n;
    if (!has_effects) {
      warn(warnings, "truth is intercept-only, noise variance defaults to 1");
      sigma2 = 1.0;
    } else if (var <= 1e-20 * scale2) {
      fail(errc::zero_signal, "signal variance is zero under a truth with real effects");
    } else {
      sigma2 = noise_ratio * var;
    }
  }
  const double sigma = std::sqrt(sigma2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = signal[i] + sigma * rng.normal();
  return y;
}

double support_sensitivity(const Eigen::VectorXd& beta_hat,
                           const Eigen::VectorXd& beta_star, double tol) {
  if (beta_hat.size() != beta_star.size())
    fail(errc::dimension_mismatch, "support metrics need estimates and truth of equal length");
  const int root = static_cast<int>(beta_star.size()) - 1;
  int hits = 0, truths = 0;
  for (int j = 0; j < root; ++j)
    if (std::abs(beta_star[j]) > tol) {
      ++truths;
      if (std::abs(beta_hat[j]) > tol) ++hits;
    }
  return truths == 0 ? 1.0 : static_cast<double>(hits) / truths;
}

double support_specificity(const Eigen::VectorXd& beta_hat,
                           const Eigen::VectorXd& beta_star, double tol) {
  if (beta_hat.size() != beta_star.size())
    fail(errc::dimension_mismatch, "support metrics need estimates and truth of equal length");
  const int root = static_cast<int>(beta_star.size()) - 1;
  int hits = 0, nulls = 0;
  for (int j = 0; j < root; ++j)
    if (std::abs(beta_star[j]) <= tol) {
      ++nulls;
      if (std::abs(beta_hat[j]) <= tol) ++hits;
    }
  return nulls == 0 ? 1.0 : static_cast<double>(hits) / nulls;
}

const char* method_name(Method m) { return m == Method::proposed ? "proposed" : "CLASSO"; }

namespace {

MetricStats summarize(const std::vector<double>& values) {
  MetricStats stats;
  if (values.empty()) return stats;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  stats.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.sd = std::sqrt(ss / (n - 1.0));
  }
  return stats;
}

}  // namespace

SimulationReport run_simulation(const ScenarioSpec& spec,
                                const std::vector<Method>& methods,
                                const std::vector<Criterion>& criteria, int threads) {
  if (spec.replicates < 1) fail(errc::invalid_argument, "replicate count must be positive");
  if (methods.empty() || criteria.empty())
    fail(errc::invalid_argument, "need at least one method and one criterion");
  {
    const double viol = QSystem(spec.tree).constraint_violation(spec.beta_star);
    if (viol > 1e-12)
      fail(errc::invalid_argument,
           "beta_star violates the sibling sum constraints by " + std::to_string(viol));
  }

  const int m = spec.replicates;
  SimulationReport report;
  report.scenario = spec.name;
  report.n = spec.n;
  report.p = spec.tree.node_count();
  report.q = spec.tree.leaf_count();
  report.replicates = m;
  report.seed = spec.seed;
  report.approximate = spec.approximate;
  for (Method method : methods)
    for (Criterion criterion : criteria) {
      SimulationCell cell;
      cell.method = method;
      cell.criterion = criterion;
      cell.replicates.resize(m);
      report.cells.push_back(std::move(cell));
    }

  const QSystem qs(spec.tree);
  std::vector<std::string> errors(m);
  std::vector<Warnings> replicate_warnings(m);

  auto run_one = [&](int r) {
    try {
      Rng rng = Rng::for_replicate(spec.seed, static_cast<std::uint64_t>(r));
      Eigen::MatrixXd X_leaf = generate_design(spec.tree, spec.n, spec.cov_decay, rng);
      Eigen::MatrixXd X_full(spec.n, report.p);
      for (int i = 0; i < spec.n; ++i)
        X_full.row(i) = spec.tree.expand_leaf_values(X_leaf.row(i).transpose());
      Eigen::VectorXd y = generate_response(X_full, spec.beta_star, spec.noise_ratio, rng,
                                            &replicate_warnings[r]);

      TuningConfig tuning = spec.tuning;
      tuning.threads = 1;
      TuningSurface surface =
          compute_surface(spec.tree, X_leaf, y, tuning, &replicate_warnings[r]);

      for (SimulationCell& cell : report.cells) {
        SurfaceSelection pick = select_from_surface(
            surface, cell.criterion,
            cell.method == Method::classo ? std::optional<double>(1.0) : std::nullopt);
        const GridPoint& pt = surface.at(pick.eta_index, pick.lambda_index);
        Eigen::VectorXd beta_hat = qs.recover_beta(pt.alpha_tilde);
        ReplicateMetrics& out = cell.replicates[r];
        out.sensitivity = support_sensitivity(beta_hat, spec.beta_star);
        out.specificity = support_specificity(beta_hat, spec.beta_star);
        out.sse = (beta_hat - spec.beta_star).squaredNorm();
        out.eta_hat = pt.eta;
        out.lambda_hat = pt.lambda;
        out.df = pt.df;
        out.ok = true;
      }
    } catch (const Error& e) {
      errors[r] = e.what();
      if (errors[r].empty()) errors[r] = "failed";
    }
  };

  if (threads < 1)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, m);
  if (threads <= 1) {
    for (int r = 0; r < m; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < m; r = next.fetch_add(1)) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  for (int r = 0; r < m; ++r) {
    if (!errors[r].empty()) {
      ++report.failures;
      report.failure_messages.push_back("replicate " + std::to_string(r) + ": " +
                                        errors[r]);
    }
    for (const std::string& w : replicate_warnings[r])
      report.warnings.push_back("replicate " + std::to_string(r) + ": " + w);
  }

  for (SimulationCell& cell : report.cells) {
    std::vector<double> sens, spc, sse, eta;
    sens.reserve(m);
    for (const ReplicateMetrics& rm : cell.replicates) {
      if (!rm.ok) continue;
      sens.push_back(rm.sensitivity);
      spc.push_back(rm.specificity);
      sse.push_back(rm.sse);
      eta.push_back(rm.eta_hat);
    }
    cell.sensitivity = summarize(sens);
    cell.specificity = summarize(spc);
    cell.sse = summarize(sse);
    cell.eta = summarize(eta);
  }
  return report;
}

SimulationReport run_simulation(const ScenarioSpec& spec, int threads) {
  return run_simulation(spec, {Method::proposed, Method::classo},
                        {Criterion::aic, Criterion::bic}, threads);
}

}  // namespace treereg
