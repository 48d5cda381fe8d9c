#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "treereg/penalty.hpp"
#include "treereg/recovery.hpp"
#include "treereg/solver.hpp"
#include "treereg/tree.hpp"

namespace treereg {

enum class Criterion { aic, bic };

const char* criterion_name(Criterion c);

// Solver settings used for grid tuning: the ADMM step scales with lambda.
SolverConfig path_solver_defaults();

struct TuningConfig {
  // Candidate mixing weights; empty is rejected. The default covers
  // 0, 0.1, ..., 1.0.
  std::vector<double> eta_grid = default_eta_grid();
  int lambda_grid_size = 50;
  double lambda_min_ratio = 1e-4;
  Criterion criterion = Criterion::bic;
  // Tuning descends whole lambda paths, where a step proportional to lambda
  // converges far faster than any constant one, so the path default scales
  // the step. Refactorization per grid point is noise next to the solves.
  SolverConfig solver = path_solver_defaults();
  // Data prechecks applied by fit(): leaf rows must sum to one within
  // composition_tol, and when require_nonnegative is set no entry may fall
  // below -negative_tol. Synthetic Gaussian designs are compositional only in
  // the row sum sense, so simulation callers switch the sign check off.
  bool check_composition = true;
  double composition_tol = 1e-6;
  bool require_nonnegative = true;
  double negative_tol = 1e-9;
  // Concurrent eta paths; values < 1 mean one thread per grid entry up to the
  // hardware count. Results do not depend on the thread count.
  int threads = 1;

  static std::vector<double> default_eta_grid();
};

// One solved grid point. rss is the plain sum of squared residuals of the
// uncentered fit, the quantity the information criteria take the log of.
struct GridPoint {
  double eta = 0.0;
  double lambda = 0.0;
  Eigen::VectorXd alpha_tilde;
  double rss = 0.0;
  int df = 0;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
  bool ok = false;  // false when the solve failed; such points are never selected
};

// The whole (eta, lambda) grid of solutions for one dataset. One lambda grid
// is shared by every eta path. Points are stored eta major: point (ei, li)
// sits at index ei * lambdas.size() + li.
struct TuningSurface {
  std::vector<double> etas;
  std::vector<double> lambdas;  // descending
  std::vector<GridPoint> points;
  int n = 0;

  const GridPoint& at(int eta_index, int lambda_index) const {
    return points[static_cast<std::size_t>(eta_index) * lambdas.size() + lambda_index];
  }
};

struct FitResult {
  Eigen::VectorXd alpha_hat;  // length q, sums to zero
  Eigen::VectorXd beta_hat;   // length p, the root entry repeats the intercept
  double intercept = 0.0;
  double eta_hat = 0.0;
  double lambda_hat = 0.0;
  double ic_value = 0.0;
  int df = 0;
  Criterion criterion = Criterion::bic;
  int eta_index = -1;     // position of the winner in surface.etas
  int lambda_index = -1;  // position of the winner in surface.lambdas
  TuningSurface surface;
  Warnings warnings;
};

// Effective parameter count of a candidate solution: q minus the rank of the
// penalty rows that are inactive at alpha_tilde, |(D alpha)_r| <= active_tol.
// Equals 1 under full shrinkage and q when every row is active.
int effective_df(const PenaltyMatrix& D, const Eigen::VectorXd& alpha_tilde,
                 double active_tol);

// Active tolerance used throughout selection, 1e-6 (1 + ||D alpha||_inf).
double default_active_tol(const Eigen::VectorXd& d_alpha);

// Log-spaced descending grid from lambda_max = (2/n) ||X^T (y - mean(y))||_inf
// down to min_ratio * lambda_max. A degenerate outcome (lambda_max = 0) falls
// back to the fixed grid from 1 down to 1e-4 and appends a warning.
std::vector<double> lambda_grid(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                                int size, double min_ratio, Warnings* warnings = nullptr);

// n log(rss) + gamma df with gamma = 2 for AIC and log n for BIC. rss is
// clamped away from zero so noiseless fits stay finite.
double information_criterion(double rss, int n, int df, Criterion criterion);

// Solves the whole grid: per eta, one penalty and one factorization, then a
// warm started descent of the shared lambda grid. Eta paths are independent
// and may run on config.threads threads; the stored result depends only on
// the grid order. Points whose solve throws are kept with ok = false and a
// warning; the call fails only when no point succeeded.
TuningSurface compute_surface(const CompositionalTree& tree, const Eigen::MatrixXd& X_leaf,
                              const Eigen::VectorXd& y, const TuningConfig& config,
                              Warnings* warnings = nullptr);

// Grid argmin of the criterion. Ties go to the larger lambda, then the larger
// eta, so equal fits resolve toward more regularization. only_eta restricts
// the search to one grid value (the component-selection baseline is
// only_eta = 1).
struct SurfaceSelection {
  int eta_index = -1;
  int lambda_index = -1;
  double ic_value = 0.0;
};
SurfaceSelection select_from_surface(const TuningSurface& surface, Criterion criterion,
                                     std::optional<double> only_eta = std::nullopt);

// Turns one selected grid point into a FitResult (centered alpha, recovered
// beta, intercept). The surface is copied in; pass std::move when done with it.
FitResult finalize_selection(const QSystem& qs, TuningSurface surface,
                             const SurfaceSelection& pick, Criterion criterion,
                             Warnings warnings = {});

// End to end: prechecks, surface, selection, recovery.
FitResult fit(const CompositionalTree& tree, const Eigen::MatrixXd& X_leaf,
              const Eigen::VectorXd& y, const TuningConfig& config = {});

}  // namespace treereg
