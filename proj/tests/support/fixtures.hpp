#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "treereg/tree.hpp"

namespace treereg::testing {

// Nine-node worked example used across the unit suites. Structure:
//
//   R
//   +-- A  --- L1, L2
//   +-- B  --- L3, L4, L5
//   +-- L6
//
// Index layout after construction: L1..L6 -> 0..5, A -> 6, B -> 7, R -> 8.
// Every frozen matrix below was derived by hand from this layout.
inline const char* worked_tree_text() {
  return
      "L1\tA\n"
      "L2\tA\n"
      "L3\tB\n"
      "L4\tB\n"
      "L5\tB\n"
      "A\tR\n"
      "B\tR\n"
      "L6\tR\n";
}

inline CompositionalTree worked_tree() {
  return CompositionalTree::from_edges({{"L1", "A"},
                                        {"L2", "A"},
                                        {"L3", "B"},
                                        {"L4", "B"},
                                        {"L5", "B"},
                                        {"A", "R"},
                                        {"B", "R"},
                                        {"L6", "R"}});
}

// Node averages: leaf rows are unit vectors, A averages L1 L2, B averages
// L3 L4 L5, R averages the rows of A, B and L6.
inline Eigen::MatrixXd worked_node_averages() {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(9, 6);
  for (int j = 0; j < 6; ++j) H(j, j) = 1.0;
  H.row(6) << 0.5, 0.5, 0, 0, 0, 0;
  H.row(7) << 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0;
  H.row(8) << 1.0 / 6, 1.0 / 6, 1.0 / 9, 1.0 / 9, 1.0 / 9, 1.0 / 3;
  return H;
}

// Fusion rows M H: consecutive sibling differences, (L1,L2) under A, then
// (L3,L4), (L4,L5) under B, then (A,B), (B,L6) under R.
inline Eigen::MatrixXd worked_fusion_rows() {
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(5, 6);
  F.row(0) << 1, -1, 0, 0, 0, 0;
  F.row(1) << 0, 0, 1, -1, 0, 0;
  F.row(2) << 0, 0, 0, 1, -1, 0;
  F.row(3) << 0.5, 0.5, -1.0 / 3, -1.0 / 3, -1.0 / 3, 0;
  F.row(4) << 0, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, -1;
  return F;
}

// Full system Q = [Q1; Q2]: leaf rows pick the leaf and all its ancestors
// root included, internal rows pick the node's children.
inline Eigen::MatrixXd worked_q_matrix() {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(9, 9);
  auto set = [&Q](int row, std::initializer_list<int> cols) {
    for (int c : cols) Q(row, c) = 1.0;
  };
  set(0, {0, 6, 8});
  set(1, {1, 6, 8});
  set(2, {2, 7, 8});
  set(3, {3, 7, 8});
  set(4, {4, 7, 8});
  set(5, {5, 8});
  set(6, {0, 1});     // children of A
  set(7, {2, 3, 4});  // children of B
  set(8, {6, 7, 5});  // children of R
  return Q;
}

// Hand case: conditional effects 2 and -2 on L1, L2, intercept 3 in the root,
// everything else zero. The marginal (uncentered) leaf values work out to
// (5, 1, 3, 3, 3, 3) and the penalty value to 4 at every eta.
inline Eigen::VectorXd worked_beta() {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(9);
  beta[0] = 2.0;
  beta[1] = -2.0;
  beta[8] = 3.0;
  return beta;
}

inline Eigen::VectorXd worked_alpha_tilde() {
  Eigen::VectorXd alpha(6);
  alpha << 5, 1, 3, 3, 3, 3;
  return alpha;
}

constexpr double worked_penalty_value = 4.0;

// Smallest valid tree: two leaves under the root. Its Q matrix is
// [1 0 1; 0 1 1; 1 1 0] with determinant -2.
inline CompositionalTree two_leaf_tree() {
  return CompositionalTree::from_edges({{"a", "r"}, {"b", "r"}});
}

constexpr double two_leaf_q_determinant = -2.0;

}  // namespace treereg::testing
