#include "pattern_rank.hpp"

#include <cmath>

#include "treereg/errors.hpp"

namespace treereg {
namespace detail {

namespace {

// Sparse column representation while assembling the fusion null basis.
using SparseCol = std::vector<std::pair<int, double>>;

}  // namespace

PatternAnalysis analyze_pattern(const PenaltyMatrix& D, const std::vector<char>& inactive,
                                bool want_basis) {
  const int q = D.leaf_count();
  const auto& fused = D.fused_rows();
  if (static_cast<int>(inactive.size()) != D.rows())
    fail(errc::dimension_mismatch, "analyze_pattern: flag vector has wrong length");

  const bool fusion_live = D.eta() < 1.0;
  const bool centering_live = D.eta() > 0.0;

  // Fusion constraints that actually bind.
  int n_fused_constraints = 0;
  if (fusion_live)
    for (std::size_t r = 0; r < fused.size(); ++r)
      if (inactive[q + static_cast<int>(r)]) ++n_fused_constraints;

  // Null basis of the binding fusion rows: the all-ones vector, plus one
  // vector per boundary between adjacent runs of fused-together siblings.
  // A vector for boundary (run r | run r+1) under node j puts +1 on every
  // leaf below run r and -(size of run r / size of run r+1) on every leaf
  // below run r+1; every node average outside j's subtree then vanishes.
  std::vector<SparseCol> cols;
  cols.reserve(q - n_fused_constraints);
  {
    SparseCol ones(q);
    for (int j = 0; j < q; ++j) ones[j] = {j, 1.0};
    cols.push_back(std::move(ones));
  }
  for (std::size_t r = 0; r < fused.size();) {
    const int node = fused[r].parent;
    // Rows r..r_end-1 belong to this node, in child order.
    std::size_t r_end = r;
    while (r_end < fused.size() && fused[r_end].parent == node) ++r_end;
    // Children of the node, recovered from the pair list.
    std::vector<int> kids;
    kids.push_back(fused[r].left);
    for (std::size_t s = r; s < r_end; ++s) kids.push_back(fused[s].right);
    // Runs of children merged by inactive rows.
    std::vector<std::pair<int, int>> runs;  // [begin, end) into kids
    int begin = 0;
    for (std::size_t s = 0; s < kids.size() - 1; ++s) {
      const bool merged = fusion_live && inactive[q + static_cast<int>(r + s)];
      if (!merged) {
        runs.emplace_back(begin, static_cast<int>(s + 1));
        begin = static_cast<int>(s + 1);
      }
    }
    runs.emplace_back(begin, static_cast<int>(kids.size()));
    for (std::size_t g = 0; g + 1 < runs.size(); ++g) {
      SparseCol col;
      const auto [b1, e1] = runs[g];
      const auto [b2, e2] = runs[g + 1];
      const double w = -static_cast<double>(e1 - b1) / static_cast<double>(e2 - b2);
      for (int s = b1; s < e1; ++s)
        for (int leaf : D.subtree_leaves(kids[s])) col.emplace_back(leaf, 1.0);
      for (int s = b2; s < e2; ++s)
        for (int leaf : D.subtree_leaves(kids[s])) col.emplace_back(leaf, w);
      cols.push_back(std::move(col));
    }
    r = r_end;
  }
  const int d1 = static_cast<int>(cols.size());
  if (d1 != q - n_fused_constraints)
    fail(errc::invalid_argument, "analyze_pattern: basis dimension mismatch");

  // Binding centering rows.
  std::vector<int> centering;
  if (centering_live)
    for (int j = 0; j < q; ++j)
      if (inactive[j]) centering.push_back(j);

  PatternAnalysis out;
  if (centering.empty()) {
    out.rank = n_fused_constraints;
    if (want_basis) {
      out.null_basis = Eigen::MatrixXd::Zero(q, d1);
      for (int m = 0; m < d1; ++m)
        for (const auto& [leaf, v] : cols[m]) out.null_basis(leaf, m) += v;
    }
    return out;
  }

  // Centering rows restricted to the fusion null space: A(r, m) =
  // V(j_r, m) - mean(V(:, m)). The eta scale drops out of the rank.
  const int nc = static_cast<int>(centering.size());
  Eigen::MatrixXd A(nc, d1);
  Eigen::VectorXd colv(q);
  for (int m = 0; m < d1; ++m) {
    colv.setZero();
    double sum = 0.0;
    for (const auto& [leaf, v] : cols[m]) {
      colv[leaf] += v;
      sum += v;
    }
    const double mean = sum / static_cast<double>(q);
    for (int r = 0; r < nc; ++r) A(r, m) = colv[centering[r]] - mean;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A.transpose());
  qr.setThreshold(1e-8);
  const int r2 = static_cast<int>(qr.rank());
  out.rank = n_fused_constraints + r2;
  if (want_basis) {
    const int d2 = d1 - r2;
    Eigen::MatrixXd Qm = qr.householderQ() * Eigen::MatrixXd::Identity(d1, d1);
    Eigen::MatrixXd W = Qm.rightCols(d2);
    out.null_basis = Eigen::MatrixXd::Zero(q, d2);
    for (int m = 0; m < d1; ++m)
      for (const auto& [leaf, v] : cols[m]) out.null_basis.row(leaf) += v * W.row(m);
  }
  return out;
}

}  // namespace detail
}  // namespace treereg
