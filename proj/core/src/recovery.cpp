#include "treereg/recovery.hpp"

#include <cmath>
#include <limits>

namespace treereg {

QSystem::QSystem(const CompositionalTree& tree)
    : p_(tree.node_count()), q_(tree.leaf_count()) {
  parent_.resize(p_);
  children_.resize(p_);
  for (int j = 0; j < p_; ++j) {
    parent_[j] = tree.parent(j);
    children_[j] = tree.children(j);
  }

  Q_ = Eigen::MatrixXd::Zero(p_, p_);
  for (int j = 0; j < q_; ++j) {
    Q_(j, j) = 1.0;
    for (int a = parent_[j]; a >= 0; a = parent_[a]) Q_(j, a) += 1.0;
  }
  int row = q_;
  for (int j = q_; j < p_; ++j, ++row)
    for (int c : children_[j]) Q_(row, c) = 1.0;

  lu_.compute(Q_);
  const Eigen::MatrixXd& lu = lu_.matrixLU();
  double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p_; ++i) {
    const double piv = std::abs(lu(i, i));
    max_piv = std::max(max_piv, piv);
    min_piv = std::min(min_piv, piv);
  }
  pivot_ratio_ = min_piv > 0.0 ? max_piv / min_piv : std::numeric_limits<double>::infinity();
  if (!lu_.isInvertible())
    fail(errc::singular_system,
         "coefficient system is numerically singular (pivot ratio " +
             std::to_string(pivot_ratio_) + ")");
}

Eigen::VectorXd QSystem::recover_beta(const Eigen::VectorXd& alpha_tilde) const {
  if (alpha_tilde.size() != q_)
    fail(errc::dimension_mismatch, "recover_beta: alpha has length " +
                                       std::to_string(alpha_tilde.size()) + ", expected " +
                                       std::to_string(q_));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p_);
  rhs.head(q_) = alpha_tilde;
  return lu_.solve(rhs);
}

Eigen::VectorXd QSystem::forward_alpha(const Eigen::VectorXd& beta) const {
  if (beta.size() != p_)
    fail(errc::dimension_mismatch, "forward_alpha: beta has length " +
                                       std::to_string(beta.size()) + ", expected " +
                                       std::to_string(p_));
  Eigen::VectorXd alpha(q_);
  const int root = p_ - 1;
  for (int j = 0; j < q_; ++j) {
    double sum = beta[j];
    for (int a = parent_[j]; a >= 0 && a != root; a = parent_[a]) sum += beta[a];
    alpha[j] = sum;
  }
  return alpha;
}

double QSystem::constraint_violation(const Eigen::VectorXd& beta) const {
  if (beta.size() != p_)
    fail(errc::dimension_mismatch, "constraint_violation: beta has wrong length");
  double worst = 0.0;
  for (int j = q_; j < p_; ++j) {
    double sum = 0.0;
    for (int c : children_[j]) sum += beta[c];
    worst = std::max(worst, std::abs(sum));
  }
  return worst;
}

Eigen::VectorXd recover_beta(const CompositionalTree& tree, const Eigen::VectorXd& alpha_tilde) {
  return QSystem(tree).recover_beta(alpha_tilde);
}

Eigen::VectorXd forward_alpha(const CompositionalTree& tree, const Eigen::VectorXd& beta) {
  return QSystem(tree).forward_alpha(beta);
}

}  // namespace treereg
