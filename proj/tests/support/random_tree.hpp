#pragma once

#include <random>
#include <string>
#include <vector>

#include "treereg/tree.hpp"

namespace treereg::testing {

// Random valid compositional tree with at most max_nodes nodes. Grows from
// the root by expanding a random current leaf with 2..4 children, so every
// internal node has at least two children by construction. Edge order is the
// growth order, which keeps generation deterministic for a given engine
// state.
inline CompositionalTree random_tree(std::mt19937_64& engine, int max_nodes) {
  if (max_nodes < 3) max_nodes = 3;
  std::vector<Edge> edges;
  std::vector<std::string> frontier = {"n0"};
  int next_id = 1;
  int nodes = 1;
  std::uniform_int_distribution<int> fanout(2, 4);
  // The first expansion is forced so the root is internal.
  while (nodes == 1 || (nodes + 2 <= max_nodes && !frontier.empty())) {
    std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
    const std::size_t at = pick(engine);
    const std::string parent = frontier[at];
    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(at));
    int k = fanout(engine);
    if (nodes + k > max_nodes) k = max_nodes - nodes;
    if (k < 2) k = 2;
    for (int c = 0; c < k; ++c) {
      const std::string child = "n" + std::to_string(next_id++);
      edges.push_back({child, parent});
      frontier.push_back(child);
      ++nodes;
    }
    // A coin per step caps the depth so wide flat trees also appear.
    if (nodes + 2 <= max_nodes && (engine() & 1u) == 0u && frontier.size() > 1)
      frontier.pop_back();
  }
  return CompositionalTree::from_edges(edges);
}

// Random sum-zero-per-sibling-group conditional effects with the intercept in
// the root entry, for exercising the penalty and recovery identities.
inline Eigen::VectorXd random_beta(std::mt19937_64& engine, const CompositionalTree& tree) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(tree.node_count());
  for (int j = 0; j < tree.node_count(); ++j) {
    if (tree.is_leaf(j)) continue;
    const std::vector<int>& kids = tree.children(j);
    double sum = 0.0;
    for (std::size_t s = 0; s + 1 < kids.size(); ++s) {
      beta[kids[s]] = normal(engine);
      sum += beta[kids[s]];
    }
    beta[kids.back()] = -sum;
  }
  beta[tree.root()] = normal(engine);
  return beta;
}

}  // namespace treereg::testing
