#pragma once

#include <Eigen/Dense>

#include <memory>

#include "treereg/tree.hpp"

namespace treereg {

// Bijection between marginal leaf effects and conditional node effects.
//
// The p x p system Q stacks
//
//   Q1 (q x p):   row j = e_j + sum over ancestors of j (root included)
//   Q2 ((p-q) x p): one row per internal node j, sum over children of j
//
// and Q beta = (alpha_tilde; 0) has a unique solution for every valid tree.
// Solving against the uncentered alpha_tilde puts the fitted intercept into
// the root coefficient: the leaf equations read
// beta_j + sum_{ancestors below root} beta_k + beta_root = alpha_tilde_j.
class QSystem {
 public:
  explicit QSystem(const CompositionalTree& tree);

  int node_count() const noexcept { return p_; }
  int leaf_count() const noexcept { return q_; }

  const Eigen::MatrixXd& matrix() const noexcept { return Q_; }

  // Ratio of the largest to the smallest LU pivot, a cheap conditioning probe.
  double pivot_ratio() const noexcept { return pivot_ratio_; }

  // Solves Q beta = (alpha_tilde; 0). alpha_tilde has length q, the result
  // length p with the intercept in the root entry.
  Eigen::VectorXd recover_beta(const Eigen::VectorXd& alpha_tilde) const;

  // Marginal effects alpha_j = beta_j + sum of ancestor betas excluding the
  // root, for every leaf j. The root coefficient (intercept) drops out.
  Eigen::VectorXd forward_alpha(const Eigen::VectorXd& beta) const;

  // Largest absolute violation of the sibling sum constraints: max over
  // internal nodes of |sum of children betas|. Zero on the constraint set.
  double constraint_violation(const Eigen::VectorXd& beta) const;

 private:
  int p_, q_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  Eigen::MatrixXd Q_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  double pivot_ratio_ = 0.0;
};

// One-shot helpers built on a throwaway QSystem.
Eigen::VectorXd recover_beta(const CompositionalTree& tree, const Eigen::VectorXd& alpha_tilde);
Eigen::VectorXd forward_alpha(const CompositionalTree& tree, const Eigen::VectorXd& beta);

}  // namespace treereg
