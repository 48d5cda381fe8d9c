#include "treereg/tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace treereg {

const char* errc_name(errc code) {
  switch (code) {
    case errc::empty_tree: return "empty_tree";
    case errc::duplicate_edge: return "duplicate_edge";
    case errc::multiple_parents: return "multiple_parents";
    case errc::multiple_roots: return "multiple_roots";
    case errc::cycle_detected: return "cycle_detected";
    case errc::single_child_node: return "single_child_node";
    case errc::unknown_label: return "unknown_label";
    case errc::index_out_of_range: return "index_out_of_range";
    case errc::dimension_mismatch: return "dimension_mismatch";
    case errc::invalid_argument: return "invalid_argument";
    case errc::eta_out_of_range: return "eta_out_of_range";
    case errc::composition_violated: return "composition_violated";
    case errc::zero_signal: return "zero_signal";
    case errc::singular_system: return "singular_system";
    case errc::all_solves_failed: return "all_solves_failed";
    case errc::parse_error: return "parse_error";
    case errc::io_error: return "io_error";
    case errc::missing_column: return "missing_column";
    case errc::unsupported_version: return "unsupported_version";
    case errc::unknown_scenario: return "unknown_scenario";
  }
  return "unknown";
}

namespace {

// Label-keyed view of the edge list used during validation, before any
// indices exist.
struct RawGraph {
  std::vector<std::string> names;                     // first-appearance order
  std::unordered_map<std::string, int> id;            // label -> slot in names
  std::vector<int> parent;                            // -1 while unknown
  std::vector<std::vector<int>> children;             // input order

  int intern(const std::string& name) {
    auto it = id.find(name);
    if (it != id.end()) return it->second;
    int slot = static_cast<int>(names.size());
    id.emplace(name, slot);
    names.push_back(name);
    parent.push_back(-1);
    children.emplace_back();
    return slot;
  }
};

[[noreturn]] void report_cycle(const RawGraph& g, int start) {
  // Walk parents from a node known to sit on or below a cycle; the first
  // repeated node closes the loop.
  std::vector<int> seen(g.names.size(), 0);
  int at = start;
  while (at >= 0 && !seen[at]) {
    seen[at] = 1;
    at = g.parent[at];
  }
  std::string msg = "edge list contains a cycle through {";
  if (at >= 0) {
    int walk = at;
    bool first = true;
    do {
      if (!first) msg += ", ";
      msg += g.names[walk];
      first = false;
      walk = g.parent[walk];
    } while (walk != at && walk >= 0);
  }
  msg += "}";
  fail(errc::cycle_detected, msg);
}

}  // namespace

CompositionalTree CompositionalTree::from_edges(const std::vector<Edge>& edges) {
  if (edges.empty()) fail(errc::empty_tree, "edge list is empty");

  RawGraph g;
  std::unordered_map<std::string, std::string> seen_pairs;
  for (const Edge& e : edges) {
    if (e.child == e.parent)
      fail(errc::cycle_detected, "edge list contains a cycle through {" + e.child + "}");
    int c = g.intern(e.child);
    int p = g.intern(e.parent);
    auto ins = seen_pairs.emplace(e.child, e.parent);
    if (!ins.second) {
      if (ins.first->second == e.parent)
        fail(errc::duplicate_edge, "duplicate edge " + e.child + " -> " + e.parent);
      fail(errc::multiple_parents,
           "node " + e.child + " has parents " + ins.first->second + " and " + e.parent);
    }
    g.parent[c] = p;
    g.children[p].push_back(c);
  }

  const int n = static_cast<int>(g.names.size());

  std::vector<int> roots;
  for (int v = 0; v < n; ++v)
    if (g.parent[v] < 0) roots.push_back(v);
  if (roots.empty()) report_cycle(g, 0);
  if (roots.size() > 1) {
    std::string msg = "edge list has multiple roots: ";
    for (std::size_t i = 0; i < roots.size(); ++i)
      msg += (i ? ", " : "") + g.names[roots[i]];
    fail(errc::multiple_roots, msg);
  }
  const int root = roots[0];

  // Reachability from the root; a node with a parent that is still unreachable
  // must hang off a cycle.
  std::vector<char> reached(n, 0);
  std::vector<int> stack{root};
  reached[root] = 1;
  int reach_count = 0;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    ++reach_count;
    for (int c : g.children[v])
      if (!reached[c]) {
        reached[c] = 1;
        stack.push_back(c);
      }
  }
  if (reach_count != n) {
    for (int v = 0; v < n; ++v)
      if (!reached[v]) report_cycle(g, v);
  }

  for (int v = 0; v < n; ++v)
    if (g.children[v].size() == 1)
      fail(errc::single_child_node,
           "node " + g.names[v] + " has a single child " + g.names[g.children[v][0]] +
               "; collapse the chain into one node before loading");

  // Level assignment: level[v] = 0 for leaves, otherwise 1 + max over
  // children. Children always precede parents in a DAG-free tree, so one
  // bottom-up pass over a depth-sorted order suffices; we compute it by
  // repeated relaxation over the cumulative definition instead, which also
  // yields the sets directly.
  std::vector<int> level(n, -1);
  std::vector<std::vector<int>> level_nodes;
  {
    std::vector<int> pending_children(n, 0);
    std::vector<int> frontier;
    for (int v = 0; v < n; ++v) {
      pending_children[v] = static_cast<int>(g.children[v].size());
      if (pending_children[v] == 0) frontier.push_back(v);
    }
    int current = 0;
    while (!frontier.empty()) {
      level_nodes.push_back(frontier);
      std::vector<int> next;
      for (int v : frontier) {
        level[v] = current;
        int p = g.parent[v];
        if (p >= 0 && --pending_children[p] == 0) next.push_back(p);
      }
      // Parents become eligible in the order their last child resolved; for
      // deterministic output re-sort by first appearance in the edge list.
      std::sort(next.begin(), next.end());
      frontier = std::move(next);
      ++current;
    }
  }
  // Merge levels that resolved in the same sweep but belong together under the
  // cumulative definition: a node enters the first level after all its
  // children's levels. The sweep above already produces exactly that, with
  // level_nodes[l] listing level l in first-appearance order.

  const int q = static_cast<int>(level_nodes[0].size());

  CompositionalTree t;
  t.leaf_count_ = q;
  std::vector<int> new_index(n, -1);
  {
    // Leaves first, by first appearance (slot order in RawGraph is exactly
    // first appearance in the edge list). level_nodes[0] was built in slot
    // order already, as is every later level after the sort above.
    int next_id = 0;
    for (std::size_t l = 0; l < level_nodes.size(); ++l)
      for (int v : level_nodes[l]) new_index[v] = next_id++;
  }

  const int p_total = n;
  t.parent_.assign(p_total, -1);
  t.children_.assign(p_total, {});
  t.labels_.assign(p_total, {});
  for (int v = 0; v < n; ++v) {
    int j = new_index[v];
    t.labels_[j] = g.names[v];
    t.index_.emplace(g.names[v], j);
    if (g.parent[v] >= 0) t.parent_[j] = new_index[g.parent[v]];
    t.children_[j].reserve(g.children[v].size());
    for (int c : g.children[v]) t.children_[j].push_back(new_index[c]);
  }
  t.levels_.resize(level_nodes.size());
  for (std::size_t l = 0; l < level_nodes.size(); ++l) {
    t.levels_[l].reserve(level_nodes[l].size());
    for (int v : level_nodes[l]) t.levels_[l].push_back(new_index[v]);
  }
  return t;
}

int CompositionalTree::index_of(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) fail(errc::unknown_label, "unknown node label: " + label);
  return it->second;
}

std::vector<int> CompositionalTree::ancestors(int j) const {
  check_index(j);
  std::vector<int> out;
  for (int at = parent_[j]; at >= 0; at = parent_[at]) out.push_back(at);
  return out;
}

int CompositionalTree::depth(int j) const {
  check_index(j);
  int d = 0;
  for (int at = parent_[j]; at >= 0; at = parent_[at]) ++d;
  return d;
}

CompositionReport CompositionalTree::check_composition(const Eigen::VectorXd& x,
                                                       double tol) const {
  if (x.size() != node_count())
    fail(errc::dimension_mismatch,
         "composition vector has length " + std::to_string(x.size()) + ", expected " +
             std::to_string(node_count()));
  if (!(tol >= 0.0)) fail(errc::invalid_argument, "tolerance must be nonnegative");

  CompositionReport report;
  for (int j = leaf_count_; j < node_count(); ++j) {
    double sum = 0.0;
    for (int c : children_[j]) sum += x[c];
    if (std::abs(x[j] - sum) > tol)
      report.mismatches.push_back({j, x[j], sum});
  }
  report.leaf_sum = x.head(leaf_count_).sum();
  report.leaf_sum_ok = std::abs(report.leaf_sum - 1.0) <= tol;
  return report;
}

Eigen::VectorXd CompositionalTree::expand_leaf_values(const Eigen::VectorXd& leaf_values) const {
  if (leaf_values.size() != leaf_count_)
    fail(errc::dimension_mismatch,
         "leaf vector has length " + std::to_string(leaf_values.size()) + ", expected " +
             std::to_string(leaf_count_));
  Eigen::VectorXd full(node_count());
  full.head(leaf_count_) = leaf_values;
  // Children carry smaller indices than parents, so one forward sweep fills
  // every internal node.
  for (int j = leaf_count_; j < node_count(); ++j) {
    double sum = 0.0;
    for (int c : children_[j]) sum += full[c];
    full[j] = sum;
  }
  return full;
}

std::vector<Edge> parse_tree_edges(std::istream& in, const std::string& source_name) {
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // Trim trailing carriage returns and surrounding whitespace.
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0, e = line.size();
    while (b < e && is_space(line[b])) ++b;
    while (e > b && is_space(line[e - 1])) --e;
    if (b == e) continue;
    std::string body = line.substr(b, e - b);
    auto tab = body.find('\t');
    if (tab == std::string::npos)
      fail(errc::parse_error, source_name + ":" + std::to_string(line_no) +
                                  ": expected child<TAB>parent, got \"" + body + "\"");
    auto trim = [&](std::string s) {
      std::size_t x = 0, y = s.size();
      while (x < y && is_space(s[x])) ++x;
      while (y > x && is_space(s[y - 1])) --y;
      return s.substr(x, y - x);
    };
    Edge edge{trim(body.substr(0, tab)), trim(body.substr(tab + 1))};
    if (edge.child.empty() || edge.parent.empty())
      fail(errc::parse_error,
           source_name + ":" + std::to_string(line_no) + ": empty child or parent label");
    if (edge.child.find('\t') != std::string::npos || edge.parent.find('\t') != std::string::npos)
      fail(errc::parse_error,
           source_name + ":" + std::to_string(line_no) + ": more than one tab on the line");
    edges.push_back(std::move(edge));
  }
  return edges;
}

CompositionalTree load_tree_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io_error, "cannot open tree file: " + path);
  return CompositionalTree::from_edges(parse_tree_edges(in, path));
}

}  // namespace treereg
