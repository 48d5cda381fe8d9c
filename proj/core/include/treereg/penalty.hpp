#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <memory>
#include <vector>

#include "treereg/tree.hpp"

namespace treereg {

// Penalty matrix D(eta) for the tree guided regression penalty
//
//   P(alpha, beta, eta) = eta * sum_j |alpha_j - mean(alpha)|
//                       + (1 - eta) * sum_{internal j} sum_s |beta_{c_s} - beta_{c_{s+1}}|
//
// expressed entirely in the leaf coefficients: D(eta) stacks
//
//   rows 0 .. q-1     eta * (I_q - (1/q) 11^T)          component selection
//   rows q .. 2q-2    (1-eta) * M * H                   sibling fusion
//
// where H (p x q) writes every node value as the weighted average of the leaf
// values below it (leaf rows are unit vectors, internal rows average their
// children's rows) and M ((q-1) x p) takes differences of consecutive sibling
// pairs, children in input order, one block per internal node in increasing
// node index order.
//
// The class keeps just enough of the tree to apply D and D^T in O(p) time,
// which is what the ADMM inner loop uses; explicit dense and sparse forms are
// materialized on demand for tests, rank computations and debug dumps.
class PenaltyMatrix {
 public:
  struct FusedRow {
    int parent;  // internal node owning the sibling pair
    int left;    // c_s
    int right;   // c_{s+1}
  };

  PenaltyMatrix(const CompositionalTree& tree, double eta);

  double eta() const noexcept { return eta_; }
  int leaf_count() const noexcept { return q_; }
  int node_count() const noexcept { return p_; }
  int rows() const noexcept { return 2 * q_ - 1; }

  const std::vector<FusedRow>& fused_rows() const noexcept { return fused_; }

  // out = D * alpha, out has length rows().
  void apply(const Eigen::VectorXd& alpha, Eigen::VectorXd& out) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& alpha) const;

  // out = D^T * w, out has length q.
  void apply_adjoint(const Eigen::VectorXd& w, Eigen::VectorXd& out) const;
  Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const;

  // Node averages H * alpha (length p): value of every node as the weighted
  // average of the leaves below it.
  Eigen::VectorXd node_averages(const Eigen::VectorXd& alpha) const;

  // D^T D as a dense q x q matrix; the centering block contributes
  // eta^2 * (I - 11^T/q) (the centering matrix is an orthogonal projector)
  // and the fused block contributes (1-eta)^2 * (MH)^T (MH).
  Eigen::MatrixXd gram() const;

  // Explicit representations. Rows of the sparse form follow the same block
  // layout as apply(); exact zeros are not stored.
  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse() const;

  // Sparse row r of the fused block (0 <= r < q-1) as (leaf, weight) pairs
  // including the (1-eta) factor. Used by the active-pattern rank machinery.
  const std::vector<std::pair<int, double>>& fused_row_weights(int r) const {
    return fused_weights_[r];
  }

  // Largest singular value estimate via power iteration on D^T D.
  double operator_norm_estimate(int iterations = 30) const;

  // Leaves below each node, used to build combinatorial null space bases for
  // inactive row patterns.
  const std::vector<int>& subtree_leaves(int node) const { return subtree_leaves_[node]; }

 private:
  double eta_;
  int p_, q_;
  std::vector<int> children_flat_;       // children of internal nodes, packed
  std::vector<int> children_offset_;     // per internal node, into children_flat_
  std::vector<FusedRow> fused_;
  std::vector<std::vector<std::pair<int, double>>> fused_weights_;
  std::vector<std::vector<int>> subtree_leaves_;
};

PenaltyMatrix build_penalty(const CompositionalTree& tree, double eta);

// Free standing building blocks, mainly for tests and inspection.
Eigen::MatrixXd centering_matrix(int q);
Eigen::SparseMatrix<double> node_average_matrix(const CompositionalTree& tree);       // H, p x q
Eigen::SparseMatrix<double> sibling_difference_matrix(const CompositionalTree& tree); // M, (q-1) x p

// Penalty value computed directly from the definitions, P1 from alpha (length
// q) and P2 from beta (length p). Equals ||D(eta) alpha||_1 whenever beta is
// the coefficient vector recovered from alpha.
double raw_penalty(const CompositionalTree& tree, const Eigen::VectorXd& alpha,
                   const Eigen::VectorXd& beta, double eta);

// MatrixMarket coordinate dump of D(eta) with comment lines marking the block
// boundary. Indices are 1-based per the format.
void dump_matrix_market(const PenaltyMatrix& D, std::ostream& out);

}  // namespace treereg
