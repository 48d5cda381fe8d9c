#include "treereg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pattern_rank.hpp"

namespace treereg {

double gen_lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const PenaltyMatrix& D, double lambda, double ridge,
                           const Eigen::VectorXd& alpha) {
  const double n = static_cast<double>(y.size());
  const double fit = (y - X * alpha).squaredNorm() / n;
  const double l2 = ridge * alpha.squaredNorm();
  return fit + l2 + lambda * D.apply(alpha).lpNorm<1>();
}

GenLassoSolver::GenLassoSolver(Eigen::MatrixXd X_leaf, Eigen::VectorXd y,
                               const PenaltyMatrix& D, SolverConfig config)
    : D_(D), X_(std::move(X_leaf)), y_(std::move(y)), config_(config) {
  n_ = static_cast<int>(X_.rows());
  q_ = static_cast<int>(X_.cols());
  if (q_ != D_.leaf_count())
    fail(errc::dimension_mismatch, "solver: X has " + std::to_string(q_) +
                                       " columns but the penalty expects " +
                                       std::to_string(D_.leaf_count()));
  if (y_.size() != n_)
    fail(errc::dimension_mismatch, "solver: y length does not match rows of X");
  if (n_ < 1) fail(errc::invalid_argument, "solver: empty data");
  if (!(config_.rho > 0.0)) fail(errc::invalid_argument, "solver: rho must be positive");
  if (config_.ridge < 0.0) fail(errc::invalid_argument, "solver: ridge must be nonnegative");

  const double two_over_n = 2.0 / static_cast<double>(n_);
  K_.noalias() = two_over_n * (X_.transpose() * X_);
  K_.diagonal().array() += 2.0 * config_.ridge;
  xty2_.noalias() = two_over_n * (X_.transpose() * y_);

  factorize(config_.rho);
}

void GenLassoSolver::factorize(double rho) {
  if (rho == factored_rho_) return;
  Eigen::MatrixXd A = K_ + rho * D_.gram();
  llt_.compute(A);
  use_ldlt_ = false;
  if (llt_.info() != Eigen::Success) {
    ldlt_.compute(A);
    use_ldlt_ = true;
    if (ldlt_.info() != Eigen::Success)
      fail(errc::singular_system, "solver: a-update system could not be factorized");
  }
  factored_rho_ = rho;
}

void GenLassoSolver::reset_state() { have_state_ = false; }

double GenLassoSolver::lambda_max() const {
  const double ybar = y_.mean();
  return (2.0 / static_cast<double>(n_)) *
         (X_.transpose() * (y_.array() - ybar).matrix()).lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd GenLassoSolver::soft_threshold(const Eigen::VectorXd& v, double level) const {
  return v.unaryExpr([level](double x) {
    if (x > level) return x - level;
    if (x < -level) return x + level;
    return 0.0;
  });
}

SolverSolution GenLassoSolver::solve(double lambda) {
  if (!(lambda >= 0.0)) fail(errc::invalid_argument, "solver: lambda must be nonnegative");
  const int m = D_.rows();
  const double rho = config_.scale_rho_with_lambda && lambda > 0.0
                         ? config_.rho * lambda
                         : config_.rho;
  factorize(rho);
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  const double sqrt_q = std::sqrt(static_cast<double>(q_));

  if (!have_state_) {
    // Fitting just the mean is the natural starting point at the top of a
    // lambda path; for compositional rows X * 1 is the all-ones column.
    alpha_ = Eigen::VectorXd::Constant(q_, y_.mean());
    z_ = D_.apply(alpha_);
    u_ = Eigen::VectorXd::Zero(m);
    have_state_ = true;
  } else if (state_rho_ != rho && state_rho_ > 0.0) {
    // u_ holds the dual variable divided by the step; keep the dual itself.
    u_ *= state_rho_ / rho;
  }
  state_rho_ = rho;

  SolverSolution sol;
  Eigen::VectorXd rhs(q_), Dalpha(m), z_old(m), diff(q_), dtu(q_);
  int it = 0;
  for (; it < config_.max_iter; ++it) {
    D_.apply_adjoint(z_ - u_, rhs);
    rhs = xty2_ + rho * rhs;
    if (use_ldlt_)
      alpha_ = ldlt_.solve(rhs);
    else
      alpha_ = llt_.solve(rhs);
    D_.apply(alpha_, Dalpha);
    z_old = z_;
    z_ = soft_threshold(Dalpha + u_, lambda / rho);
    u_ += Dalpha - z_;

    if (config_.objective_trace != nullptr)
      config_.objective_trace->push_back(
          gen_lasso_objective(X_, y_, D_, lambda, config_.ridge, alpha_));

    sol.primal_residual = (Dalpha - z_).norm();
    D_.apply_adjoint(z_ - z_old, diff);
    sol.dual_residual = rho * diff.norm();
    D_.apply_adjoint(u_, dtu);
    const double eps_pri =
        sqrt_m * config_.abs_tol + config_.rel_tol * std::max(Dalpha.norm(), z_.norm());
    const double eps_dua = sqrt_q * config_.abs_tol + config_.rel_tol * rho * dtu.norm();
    if (sol.primal_residual <= eps_pri && sol.dual_residual <= eps_dua) {
      ++it;
      sol.converged = true;
      break;
    }
  }
  sol.iterations = it;
  sol.alpha_tilde = alpha_;
  sol.objective = gen_lasso_objective(X_, y_, D_, lambda, config_.ridge, alpha_);

  if (config_.polish) {
    // Read the pattern off z: the soft threshold writes exact zeros.
    std::vector<char> inactive(m, 0);
    int n_inactive = 0;
    for (int r = 0; r < m; ++r)
      if (z_[r] == 0.0) {
        inactive[r] = 1;
        ++n_inactive;
      }
    if (n_inactive > 0) {
      const int cap = config_.polish_max_dim > 0 ? config_.polish_max_dim
                                                 : std::max(32, q_ / 4);
      auto pattern = detail::analyze_pattern(D_, inactive, false);
      const int dim = q_ - pattern.rank;
      if (dim >= 1 && dim <= cap) {
        pattern = detail::analyze_pattern(D_, inactive, true);
        const Eigen::MatrixXd& N = pattern.null_basis;
        // Linear term: (2/n) X^T y - lambda D_A^T sign(z_A).
        Eigen::VectorXd signs = Eigen::VectorXd::Zero(m);
        for (int r = 0; r < m; ++r)
          if (!inactive[r]) signs[r] = z_[r] > 0.0 ? 1.0 : -1.0;
        Eigen::VectorXd lin = xty2_ - lambda * D_.apply_adjoint(signs);
        Eigen::MatrixXd KN = K_ * N;
        Eigen::LDLT<Eigen::MatrixXd> small(N.transpose() * KN);
        if (small.info() == Eigen::Success) {
          Eigen::VectorXd candidate = N * small.solve(N.transpose() * lin);
          const double cand_obj =
              gen_lasso_objective(X_, y_, D_, lambda, config_.ridge, candidate);
          if (cand_obj <= sol.objective) {
            sol.alpha_tilde = candidate;
            sol.objective = cand_obj;
            sol.polished = true;
          }
        }
      }
    }
  }
  return sol;
}

SolverSolution solve_gen_lasso(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                               const PenaltyMatrix& D, double lambda,
                               const SolverConfig& config) {
  GenLassoSolver solver(X_leaf, y, D, config);
  return solver.solve(lambda);
}

double kkt_violation(const Eigen::MatrixXd& X_leaf, const Eigen::VectorXd& y,
                     const PenaltyMatrix& D, double lambda, double ridge,
                     const Eigen::VectorXd& alpha_tilde) {
  const double n = static_cast<double>(y.size());
  Eigen::VectorXd g = (2.0 / n) * (X_leaf.transpose() * (X_leaf * alpha_tilde - y)) +
                      2.0 * ridge * alpha_tilde;
  if (lambda <= 0.0) return g.lpNorm<Eigen::Infinity>();

  const int m = D.rows();
  const Eigen::VectorXd Dalpha = D.apply(alpha_tilde);
  const double active_tol = 1e-6 * (1.0 + Dalpha.lpNorm<Eigen::Infinity>());
  std::vector<char> fixed(m, 0);
  Eigen::VectorXd gamma = Eigen::VectorXd::Zero(m);
  for (int r = 0; r < m; ++r)
    if (std::abs(Dalpha[r]) > active_tol) {
      fixed[r] = 1;
      gamma[r] = Dalpha[r] > 0.0 ? 1.0 : -1.0;
    }

  // Projected accelerated gradient on h(gamma) = 0.5 ||g + lambda D^T gamma||^2.
  const double opnorm = D.operator_norm_estimate();
  const double L = std::max(lambda * lambda * opnorm * opnorm, 1e-300);
  const double step = 1.0 / L;
  auto project = [&](Eigen::VectorXd& v) {
    for (int r = 0; r < m; ++r) {
      if (fixed[r])
        v[r] = gamma[r];
      else
        v[r] = std::clamp(v[r], -1.0, 1.0);
    }
  };
  Eigen::VectorXd x = gamma, x_prev = gamma, yv = gamma, resid(alpha_tilde.size()), grad(m);
  double best = std::numeric_limits<double>::infinity();
  double t = 1.0;
  for (int it = 0; it < 4000; ++it) {
    resid = g + lambda * D.apply_adjoint(yv);
    D.apply(resid, grad);
    x_prev = x;
    x = yv - (step * lambda) * grad;
    project(x);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yv = x + ((t - 1.0) / t_next) * (x - x_prev);
    project(yv);
    t = t_next;
    const double value = (g + lambda * D.apply_adjoint(x)).lpNorm<Eigen::Infinity>();
    best = std::min(best, value);
    if ((x - x_prev).lpNorm<Eigen::Infinity>() < 1e-14) break;
  }
  return best;
}

std::pair<Eigen::VectorXd, double> center_alpha(const Eigen::VectorXd& alpha_tilde) {
  const double intercept = alpha_tilde.mean();
  return {(alpha_tilde.array() - intercept).matrix(), intercept};
}

}  // namespace treereg
