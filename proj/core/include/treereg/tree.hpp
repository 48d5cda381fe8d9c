#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "treereg/errors.hpp"

namespace treereg {

// One parent-child relation as read from disk: "child <TAB> parent".
struct Edge {
  std::string child;
  std::string parent;
};

// Level sets of a tree: levels[0] holds the leaves, levels[l] holds the nodes
// whose children are all contained in earlier levels, and the last level is
// the root alone.
using LevelSets = std::vector<std::vector<int>>;

struct CompositionMismatch {
  int node;         // internal node whose value differs from its children sum
  double value;     // stored value
  double expected;  // sum over children
};

struct CompositionReport {
  std::vector<CompositionMismatch> mismatches;
  double leaf_sum = 0.0;
  bool leaf_sum_ok = false;
  bool ok() const { return leaf_sum_ok && mismatches.empty(); }
};

// Rooted tree for compositional data. Construction validates the structure:
// exactly one root, a single parent per node, no cycles, no duplicate edges,
// and at least two children per internal node (single-child chains carry no
// information and must be collapsed by the caller).
//
// Nodes are re-indexed on construction: leaves take 0..q-1 in order of first
// appearance in the edge list, internal nodes follow level by level (nodes
// whose children are all resolved come first), within a level ordered again by
// first appearance, so the root is always p-1 and every child index is smaller
// than its parent index.
class CompositionalTree {
 public:
  // Empty tree with zero nodes, a placeholder until a real tree is assigned.
  CompositionalTree() = default;

  static CompositionalTree from_edges(const std::vector<Edge>& edges);

  int node_count() const noexcept { return static_cast<int>(parent_.size()); }
  int leaf_count() const noexcept { return leaf_count_; }
  int internal_count() const noexcept { return node_count() - leaf_count_; }
  int root() const noexcept { return node_count() - 1; }

  bool is_leaf(int j) const { check_index(j); return j < leaf_count_; }
  bool is_internal(int j) const { return !is_leaf(j); }

  // Parent index, or -1 for the root.
  int parent(int j) const { check_index(j); return parent_[j]; }

  // Children in the order their edges appeared in the input; empty for leaves.
  const std::vector<int>& children(int j) const { check_index(j); return children_[j]; }

  const std::string& label(int j) const { check_index(j); return labels_[j]; }
  int index_of(const std::string& label) const;
  bool has_label(const std::string& label) const { return index_.count(label) != 0; }

  // Parent chain of j up to and including the root; empty for the root.
  std::vector<int> ancestors(int j) const;
  int depth(int j) const;

  const LevelSets& level_sets() const noexcept { return levels_; }

  // Checks one observation x (length p, full vector over all nodes) against
  // the compositional constraints: every internal value equals the sum of its
  // children within tol, and the leaf values sum to one within tol.
  CompositionReport check_composition(const Eigen::VectorXd& x, double tol) const;

  // Expands leaf values (length q) to the full node vector by summation.
  Eigen::VectorXd expand_leaf_values(const Eigen::VectorXd& leaf_values) const;

 private:
  void check_index(int j) const {
    if (j < 0 || j >= node_count())
      fail(errc::index_out_of_range,
           "node index " + std::to_string(j) + " out of range [0, " +
               std::to_string(node_count()) + ")");
  }

  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
  LevelSets levels_;
  int leaf_count_ = 0;
};

// Parses the tab separated edge format: one "child<TAB>parent" pair per line,
// blank lines skipped, '#' starts a comment. source_name is used in messages.
std::vector<Edge> parse_tree_edges(std::istream& in, const std::string& source_name);

CompositionalTree load_tree_file(const std::string& path);

}  // namespace treereg
