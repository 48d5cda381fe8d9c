#include "treereg/selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_map>

#include "pattern_rank.hpp"

namespace treereg {

const char* criterion_name(Criterion c) { return c == Criterion::aic ? "aic" : "bic"; }

SolverConfig path_solver_defaults() {
  SolverConfig config;
  config.rho = 3.0;
  config.scale_rho_with_lambda = true;
  return config;
}

std::vector<double> TuningConfig::default_eta_grid() {
  std::vector<double> grid(11);
  for (int i = 0; i <= 10; ++i) grid[i] = i / 10.0;
  return grid;
}

int effective_df(const PenaltyMatrix& D, const Eigen::VectorXd& alpha_tilde,
                 double active_tol) {
  const Eigen::VectorXd d_alpha = D.apply(alpha_tilde);
  std::vector<char> inactive(D.rows(), 0);
  for (int r = 0; r < D.rows(); ++r)
    if (std::abs(d_alpha[r]) <= active_tol) inactive[r] = 1;
  const auto analysis = detail::analyze_pattern(D, inactive, false);
  return D.leaf_count() - analysis.rank;
}

double default_active_tol(const Eigen::VectorXd& d_alpha) {
  return 1e-6 * (1.0 + d_alpha.lpNorm<Eigen::Infinity>());
}

std::vector<double> lambda_grid(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                                int size, double min_ratio, Warnings* warnings) {
  if (size < 1) fail(errc::invalid_argument, "lambda grid size must be at least 1");
  if (!(min_ratio > 0.0 && min_ratio <= 1.0))
    fail(errc::invalid_argument, "lambda_min_ratio must lie in (0, 1]");
  const double n = static_cast<double>(y.size());
  const double lmax =
      (2.0 / n) *
      (X_leaf.transpose() * (y.array() - y.mean()).matrix()).lpNorm<Eigen::Infinity>();

  double top = lmax, ratio = min_ratio;
  if (lmax <= 0.0) {
    warn(warnings,
         "outcome carries no signal (lambda_max = 0); using the fallback grid 1 down to 1e-4");
    top = 1.0;
    ratio = 1e-4;
  }
  std::vector<double> grid(size);
  if (size == 1) {
    grid[0] = top;
    return grid;
  }
  const double step = std::log(ratio) / static_cast<double>(size - 1);
  for (int i = 0; i < size; ++i) grid[i] = top * std::exp(step * i);
  return grid;
}

double information_criterion(double rss, int n, int df, Criterion criterion) {
  const double gamma = criterion == Criterion::aic ? 2.0 : std::log(static_cast<double>(n));
  return static_cast<double>(n) * std::log(std::max(rss, 1e-300)) +
         gamma * static_cast<double>(df);
}

namespace {

// df cache key: the inactive-row pattern as raw bytes. Patterns recur along a
// lambda path, and the rank computation is the only non-trivial cost per point
// once the solver has converged.
std::string pattern_key(const std::vector<char>& inactive) {
  return std::string(inactive.begin(), inactive.end());
}

void solve_eta_path(const CompositionalTree& tree, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y, const TuningConfig& config,
                    const std::vector<double>& lambdas, int eta_index,
                    TuningSurface& surface, std::mutex& warn_mutex, Warnings* warnings) {
  const double eta = surface.etas[eta_index];
  const std::size_t base = static_cast<std::size_t>(eta_index) * lambdas.size();
  auto push_warning = [&](const std::string& msg) {
    std::lock_guard<std::mutex> lock(warn_mutex);
    warn(warnings, msg);
  };

  PenaltyMatrix D(tree, eta);
  std::unique_ptr<GenLassoSolver> solver;
  try {
    solver = std::make_unique<GenLassoSolver>(X, y, D, config.solver);
  } catch (const Error& e) {
    push_warning("eta " + std::to_string(eta) + ": " + e.what());
    return;
  }

  std::unordered_map<std::string, int> df_cache;
  std::vector<char> inactive(D.rows());
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    GridPoint& pt = surface.points[base + li];
    pt.eta = eta;
    pt.lambda = lambdas[li];
    try {
      SolverSolution sol = solver->solve(lambdas[li]);
      pt.alpha_tilde = sol.alpha_tilde;
      pt.iterations = sol.iterations;
      pt.converged = sol.converged;
      pt.polished = sol.polished;
      pt.rss = (y - X * sol.alpha_tilde).squaredNorm();

      const Eigen::VectorXd d_alpha = D.apply(sol.alpha_tilde);
      const double tol = default_active_tol(d_alpha);
      for (int r = 0; r < D.rows(); ++r) inactive[r] = std::abs(d_alpha[r]) <= tol ? 1 : 0;
      auto [it, inserted] = df_cache.try_emplace(pattern_key(inactive), 0);
      if (inserted)
        it->second = D.leaf_count() - detail::analyze_pattern(D, inactive, false).rank;
      pt.df = it->second;
      pt.ok = true;
    } catch (const Error& e) {
      push_warning("eta " + std::to_string(eta) + ", lambda " +
                   std::to_string(lambdas[li]) + ": " + e.what());
    }
  }
}

}  // namespace

TuningSurface compute_surface(const CompositionalTree& tree, const Eigen::MatrixXd& X_leaf,
                              const Eigen::VectorXd& y, const TuningConfig& config,
                              Warnings* warnings) {
  if (config.eta_grid.empty()) fail(errc::invalid_argument, "eta grid is empty");
  for (double eta : config.eta_grid)
    if (!(eta >= 0.0 && eta <= 1.0))
      fail(errc::eta_out_of_range, "eta " + std::to_string(eta) + " outside [0, 1]");
  if (X_leaf.cols() != tree.leaf_count())
    fail(errc::dimension_mismatch, "design has " + std::to_string(X_leaf.cols()) +
                                       " columns, tree has " +
                                       std::to_string(tree.leaf_count()) + " leaves");
  if (X_leaf.rows() != y.size())
    fail(errc::dimension_mismatch, "design and outcome row counts differ");
  if (y.size() < 2) fail(errc::invalid_argument, "need at least two observations");

  TuningSurface surface;
  surface.etas = config.eta_grid;
  surface.lambdas =
      lambda_grid(X_leaf, y, config.lambda_grid_size, config.lambda_min_ratio, warnings);
  surface.n = static_cast<int>(y.size());
  surface.points.resize(surface.etas.size() * surface.lambdas.size());

  const int n_eta = static_cast<int>(surface.etas.size());
  int threads = config.threads;
  if (threads < 1)
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n_eta);

  std::mutex warn_mutex;
  if (threads <= 1) {
    for (int ei = 0; ei < n_eta; ++ei)
      solve_eta_path(tree, X_leaf, y, config, surface.lambdas, ei, surface, warn_mutex,
                     warnings);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int ei = next.fetch_add(1); ei < n_eta; ei = next.fetch_add(1))
          solve_eta_path(tree, X_leaf, y, config, surface.lambdas, ei, surface, warn_mutex,
                         warnings);
      });
    for (auto& th : pool) th.join();
  }

  if (std::none_of(surface.points.begin(), surface.points.end(),
                   [](const GridPoint& p) { return p.ok; }))
    fail(errc::all_solves_failed, "every grid point failed to solve");
  return surface;
}

SurfaceSelection select_from_surface(const TuningSurface& surface, Criterion criterion,
                                     std::optional<double> only_eta) {
  SurfaceSelection best;
  double best_ic = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t ei = 0; ei < surface.etas.size(); ++ei) {
    if (only_eta && std::abs(surface.etas[ei] - *only_eta) > 1e-12) continue;
    for (std::size_t li = 0; li < surface.lambdas.size(); ++li) {
      const GridPoint& pt = surface.at(static_cast<int>(ei), static_cast<int>(li));
      if (!pt.ok) continue;
      const double ic = information_criterion(pt.rss, surface.n, pt.df, criterion);
      // Ties resolve toward more regularization: larger lambda, then larger eta.
      const bool wins =
          !found || ic < best_ic ||
          (ic == best_ic && (pt.lambda > surface.lambdas[best.lambda_index] ||
                             (pt.lambda == surface.lambdas[best.lambda_index] &&
                              pt.eta > surface.etas[best.eta_index])));
      if (wins) {
        best.eta_index = static_cast<int>(ei);
        best.lambda_index = static_cast<int>(li);
        best_ic = ic;
        found = true;
      }
    }
  }
  if (!found) {
    if (only_eta)
      fail(errc::all_solves_failed,
           "no usable grid point at eta " + std::to_string(*only_eta));
    fail(errc::all_solves_failed, "no usable grid point");
  }
  best.ic_value = best_ic;
  return best;
}

FitResult finalize_selection(const QSystem& qs, TuningSurface surface,
                             const SurfaceSelection& pick, Criterion criterion,
                             Warnings warnings) {
  const GridPoint& pt = surface.at(pick.eta_index, pick.lambda_index);
  FitResult result;
  result.criterion = criterion;
  result.eta_hat = pt.eta;
  result.lambda_hat = pt.lambda;
  result.ic_value = pick.ic_value;
  result.df = pt.df;
  result.eta_index = pick.eta_index;
  result.lambda_index = pick.lambda_index;
  result.beta_hat = qs.recover_beta(pt.alpha_tilde);
  auto [alpha, intercept] = center_alpha(pt.alpha_tilde);
  result.alpha_hat = std::move(alpha);
  result.intercept = intercept;
  result.surface = std::move(surface);
  result.warnings = std::move(warnings);
  return result;
}

namespace {

void check_rows(const Eigen::MatrixXd& X_leaf, const TuningConfig& config) {
  std::string bad_sum, bad_sign;
  int n_bad_sum = 0, n_bad_sign = 0;
  for (int i = 0; i < X_leaf.rows(); ++i) {
    if (config.check_composition &&
        std::abs(X_leaf.row(i).sum() - 1.0) > config.composition_tol) {
      if (++n_bad_sum <= 5) bad_sum += (n_bad_sum > 1 ? ", " : "") + std::to_string(i);
    }
    if (config.require_nonnegative && X_leaf.row(i).minCoeff() < -config.negative_tol) {
      if (++n_bad_sign <= 5) bad_sign += (n_bad_sign > 1 ? ", " : "") + std::to_string(i);
    }
  }
  if (n_bad_sum > 0)
    fail(errc::composition_violated,
         std::to_string(n_bad_sum) + " rows do not sum to one (rows " + bad_sum +
             (n_bad_sum > 5 ? ", ..." : "") + ")");
  if (n_bad_sign > 0)
    fail(errc::composition_violated,
         std::to_string(n_bad_sign) + " rows have negative entries (rows " + bad_sign +
             (n_bad_sign > 5 ? ", ..." : "") + ")");
}

}  // namespace

FitResult fit(const CompositionalTree& tree, const Eigen::MatrixXd& X_leaf,
              const Eigen::VectorXd& y, const TuningConfig& config) {
  check_rows(X_leaf, config);
  Warnings warnings;
  TuningSurface surface = compute_surface(tree, X_leaf, y, config, &warnings);
  SurfaceSelection pick = select_from_surface(surface, config.criterion);
  QSystem qs(tree);
  return finalize_selection(qs, std::move(surface), pick, config.criterion,
                            std::move(warnings));
}

}  // namespace treereg
