#pragma once

#include <Eigen/Dense>

#include <vector>

#include "treereg/penalty.hpp"

namespace treereg {

struct SolverConfig {
  double rho = 1.0;       // ADMM step parameter, fixed for the whole solve
  // When set, solve(lambda) runs at the step rho * lambda instead of rho,
  // refactorizing the a-update system whenever the step changes (about the
  // cost of one iteration). The soft threshold level is then constant along
  // a lambda path and the step tracks the penalty scale, which keeps
  // iteration counts flat in lambda; with the plain fixed step the small
  // lambda end of a path needs orders of magnitude more iterations.
  bool scale_rho_with_lambda = false;
  int max_iter = 10000;
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  double ridge = 0.0;     // epsilon in the objective, stabilizes n < q fits
  bool polish = true;     // exact refit on the detected inactive pattern
  // Polish is skipped when the pattern's null space dimension exceeds this
  // cap (<= 0 means max(32, q/4)); large-dimension refits cost more than the
  // accuracy they add at small lambda.
  int polish_max_dim = 0;
  // Optional per-iteration objective trace for diagnostics; not owned.
  std::vector<double>* objective_trace = nullptr;
};

struct SolverSolution {
  Eigen::VectorXd alpha_tilde;  // length q
  int iterations = 0;
  bool converged = false;
  bool polished = false;        // polish ran and beat the raw iterate
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;       // value at alpha_tilde
};

// Objective (1/n)||y - X a||^2 + ridge ||a||^2 + lambda ||D a||_1.
double gen_lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const PenaltyMatrix& D, double lambda, double ridge,
                           const Eigen::VectorXd& alpha);

// ADMM solver for the generalized lasso
//
//   min over a:  (1/n)||y - X a||^2 + ridge ||a||^2 + lambda ||D a||_1
//
// with the standard split z = D a. The a-update solves
//
//   ((2/n) X^T X + 2 ridge I + rho D^T D) a = (2/n) X^T y + rho D^T (z - u)
//
// through one Cholesky factorization that is reused across iterations and
// across solve() calls, which makes descending a lambda path with warm starts
// cheap: only the soft threshold level changes with lambda. Stopping follows
// the usual primal and dual residual rule
//
//   ||D a - z||      <= sqrt(rows) abs_tol + rel_tol max(||D a||, ||z||)
//   rho||D^T(z-z')|| <= sqrt(q)    abs_tol + rel_tol rho||D^T u||.
//
// After the loop an exact refit ("polish") runs on the pattern read off z:
// rows with z_r = 0 become equality constraints D_I a = 0 and the remaining
// penalty terms turn into the linear term lambda s^T D_A a with s the signs
// of the active rows. The constrained quadratic is solved in a null space
// basis of D_I and the result replaces the raw iterate only when it does not
// increase the objective, so a misread pattern cannot hurt.
class GenLassoSolver {
 public:
  GenLassoSolver(Eigen::MatrixXd X_leaf, Eigen::VectorXd y, const PenaltyMatrix& D,
                 SolverConfig config);

  // Solves at one lambda, warm starting from the previous call's state.
  SolverSolution solve(double lambda);

  // Forgets the warm start state; the next solve starts cold.
  void reset_state();

  const PenaltyMatrix& penalty() const noexcept { return D_; }
  const SolverConfig& config() const noexcept { return config_; }
  int observations() const noexcept { return n_; }

  // (2/n) ||X^T (y - mean(y))||_inf, the top of the default lambda grid.
  double lambda_max() const;

 private:
  Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double level) const;
  void factorize(double rho);

  PenaltyMatrix D_;
  Eigen::MatrixXd X_;
  Eigen::VectorXd y_;
  SolverConfig config_;
  int n_ = 0, q_ = 0;
  Eigen::MatrixXd K_;           // (2/n) X^T X + 2 ridge I
  Eigen::VectorXd xty2_;        // (2/n) X^T y
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool use_ldlt_ = false;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  double factored_rho_ = 0.0;   // step the factorization was built for
  // Warm start state.
  bool have_state_ = false;
  double state_rho_ = 0.0;      // step u_ is scaled by
  Eigen::VectorXd alpha_, z_, u_;
};

// One-shot convenience wrapper.
SolverSolution solve_gen_lasso(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                               const PenaltyMatrix& D, double lambda,
                               const SolverConfig& config = {});

// Smallest reachable sup norm of the stationarity residual
//
//   (2/n) X^T (X a - y) + 2 ridge a + lambda D^T gamma
//
// over subgradient certificates gamma: rows with |(D a)_r| above the active
// tolerance 1e-6 (1 + ||D a||_inf) pin gamma_r to the sign, the rest range
// over [-1, 1]. Minimized with projected accelerated gradient steps; the
// returned value is an upper bound on the true minimum and is ~0 at an exact
// solution.
double kkt_violation(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                     const PenaltyMatrix& D, double lambda, double ridge,
                     const Eigen::VectorXd& alpha_tilde);

// Splits an uncentered solution into sum-zero effects and an intercept:
// alpha = alpha_tilde - mean, intercept = mean.
std::pair<Eigen::VectorXd, double> center_alpha(const Eigen::VectorXd& alpha_tilde);

}  // namespace treereg
