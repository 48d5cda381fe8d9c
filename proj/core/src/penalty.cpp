#include "treereg/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "treereg/rng.hpp"

namespace treereg {

namespace {

void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    fail(errc::eta_out_of_range, "eta must lie in [0, 1], got " + std::to_string(eta));
}

}  // namespace

PenaltyMatrix::PenaltyMatrix(const CompositionalTree& tree, double eta)
    : eta_(eta), p_(tree.node_count()), q_(tree.leaf_count()) {
  check_eta(eta);

  children_offset_.reserve(tree.internal_count() + 1);
  children_offset_.push_back(0);
  for (int j = q_; j < p_; ++j) {
    const auto& c = tree.children(j);
    children_flat_.insert(children_flat_.end(), c.begin(), c.end());
    children_offset_.push_back(static_cast<int>(children_flat_.size()));
  }

  for (int j = q_; j < p_; ++j) {
    const auto& c = tree.children(j);
    for (std::size_t s = 0; s + 1 < c.size(); ++s)
      fused_.push_back({j, c[s], c[s + 1]});
  }

  // Leaf sets per node, children first so parents can splice them together.
  subtree_leaves_.resize(p_);
  for (int j = 0; j < q_; ++j) subtree_leaves_[j] = {j};
  for (int j = q_; j < p_; ++j) {
    auto& mine = subtree_leaves_[j];
    for (int c : tree.children(j))
      mine.insert(mine.end(), subtree_leaves_[c].begin(), subtree_leaves_[c].end());
  }

  // Sparse fused rows: (1-eta) * (H_left - H_right) where H_j spreads weight
  // 1/(product of child counts along the path) over the leaves below j.
  fused_weights_.resize(fused_.size());
  std::vector<std::vector<std::pair<int, double>>> h_rows(p_);
  for (int j = 0; j < q_; ++j) h_rows[j] = {{j, 1.0}};
  for (int j = q_; j < p_; ++j) {
    const int begin = children_offset_[j - q_], end = children_offset_[j - q_ + 1];
    const double inv = 1.0 / static_cast<double>(end - begin);
    auto& row = h_rows[j];
    for (int s = begin; s < end; ++s)
      for (const auto& [leaf, w] : h_rows[children_flat_[s]]) row.emplace_back(leaf, w * inv);
  }
  const double fade = 1.0 - eta_;
  for (std::size_t r = 0; r < fused_.size(); ++r) {
    auto& row = fused_weights_[r];
    for (const auto& [leaf, w] : h_rows[fused_[r].left]) row.emplace_back(leaf, fade * w);
    for (const auto& [leaf, w] : h_rows[fused_[r].right]) row.emplace_back(leaf, -fade * w);
    std::sort(row.begin(), row.end());
  }
}

PenaltyMatrix build_penalty(const CompositionalTree& tree, double eta) {
  return PenaltyMatrix(tree, eta);
}

Eigen::VectorXd PenaltyMatrix::node_averages(const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd t(p_);
  t.head(q_) = alpha;
  for (int j = q_; j < p_; ++j) {
    const int begin = children_offset_[j - q_], end = children_offset_[j - q_ + 1];
    double sum = 0.0;
    for (int s = begin; s < end; ++s) sum += t[children_flat_[s]];
    t[j] = sum / static_cast<double>(end - begin);
  }
  return t;
}

void PenaltyMatrix::apply(const Eigen::VectorXd& alpha, Eigen::VectorXd& out) const {
  if (alpha.size() != q_)
    fail(errc::dimension_mismatch, "apply: alpha has length " + std::to_string(alpha.size()) +
                                       ", expected " + std::to_string(q_));
  out.resize(rows());
  const double mean = alpha.mean();
  out.head(q_) = (eta_ * (alpha.array() - mean)).matrix();
  const Eigen::VectorXd t = node_averages(alpha);
  const double fade = 1.0 - eta_;
  for (std::size_t r = 0; r < fused_.size(); ++r)
    out[q_ + static_cast<int>(r)] = fade * (t[fused_[r].left] - t[fused_[r].right]);
}

Eigen::VectorXd PenaltyMatrix::apply(const Eigen::VectorXd& alpha) const {
  Eigen::VectorXd out;
  apply(alpha, out);
  return out;
}

void PenaltyMatrix::apply_adjoint(const Eigen::VectorXd& w, Eigen::VectorXd& out) const {
  if (w.size() != rows())
    fail(errc::dimension_mismatch, "apply_adjoint: w has length " + std::to_string(w.size()) +
                                       ", expected " + std::to_string(rows()));
  out.resize(q_);
  // Centering block transpose: the projector is symmetric.
  const double mean1 = w.head(q_).mean();
  out = (eta_ * (w.head(q_).array() - mean1)).matrix();

  // Fused block transpose: scatter row weights into node space (M^T w2), then
  // push the accumulated weight down the tree (H^T), dividing by child counts.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(p_);
  const double fade = 1.0 - eta_;
  for (std::size_t r = 0; r < fused_.size(); ++r) {
    const double v = fade * w[q_ + static_cast<int>(r)];
    acc[fused_[r].left] += v;
    acc[fused_[r].right] -= v;
  }
  for (int j = p_ - 1; j >= q_; --j) {
    const int begin = children_offset_[j - q_], end = children_offset_[j - q_ + 1];
    const double share = acc[j] / static_cast<double>(end - begin);
    if (share != 0.0)
      for (int s = begin; s < end; ++s) acc[children_flat_[s]] += share;
  }
  out += acc.head(q_);
}

Eigen::VectorXd PenaltyMatrix::apply_adjoint(const Eigen::VectorXd& w) const {
  Eigen::VectorXd out;
  apply_adjoint(w, out);
  return out;
}

Eigen::MatrixXd PenaltyMatrix::gram() const {
  Eigen::MatrixXd G = Eigen::MatrixXd::Constant(q_, q_, -eta_ * eta_ / static_cast<double>(q_));
  G.diagonal().array() += eta_ * eta_;
  for (const auto& row : fused_weights_)
    for (const auto& [i, wi] : row)
      for (const auto& [j, wj] : row) G(i, j) += wi * wj;
  return G;
}

Eigen::MatrixXd PenaltyMatrix::dense() const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows(), q_);
  if (eta_ != 0.0) {
    D.topRows(q_).setConstant(-eta_ / static_cast<double>(q_));
    D.topRows(q_).diagonal().array() += eta_;
  }
  for (std::size_t r = 0; r < fused_weights_.size(); ++r)
    for (const auto& [leaf, w] : fused_weights_[r]) D(q_ + static_cast<int>(r), leaf) = w;
  return D;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> PenaltyMatrix::sparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  if (eta_ != 0.0) {
    trips.reserve(static_cast<std::size_t>(q_) * q_);
    const double off = -eta_ / static_cast<double>(q_);
    for (int i = 0; i < q_; ++i)
      for (int j = 0; j < q_; ++j) trips.emplace_back(i, j, i == j ? eta_ + off : off);
  }
  if (eta_ != 1.0)
    for (std::size_t r = 0; r < fused_weights_.size(); ++r)
      for (const auto& [leaf, w] : fused_weights_[r])
        trips.emplace_back(q_ + static_cast<int>(r), leaf, w);
  Eigen::SparseMatrix<double, Eigen::RowMajor> D(rows(), q_);
  D.setFromTriplets(trips.begin(), trips.end());
  return D;
}

double PenaltyMatrix::operator_norm_estimate(int iterations) const {
  // A structured start vector can be exactly orthogonal to the top singular
  // vector when the tree has symmetric sibling groups, so seed the iteration
  // with fixed pseudo-random noise instead.
  Rng rng(0x9e3779b97f4a7c15ull);
  Eigen::VectorXd v(q_);
  for (int j = 0; j < q_; ++j) v[j] = rng.normal();
  v.normalize();
  double norm2 = 0.0;
  Eigen::VectorXd w;
  for (int it = 0; it < iterations; ++it) {
    apply(v, w);
    v = apply_adjoint(w);
    norm2 = v.norm();
    if (norm2 <= 0.0) return 0.0;
    v /= norm2;
  }
  return std::sqrt(norm2);
}

Eigen::MatrixXd centering_matrix(int q) {
  if (q < 1) fail(errc::invalid_argument, "centering_matrix: q must be positive");
  Eigen::MatrixXd D1 = Eigen::MatrixXd::Constant(q, q, -1.0 / static_cast<double>(q));
  D1.diagonal().array() += 1.0;
  return D1;
}

Eigen::SparseMatrix<double> node_average_matrix(const CompositionalTree& tree) {
  const int p = tree.node_count(), q = tree.leaf_count();
  std::vector<std::vector<std::pair<int, double>>> rows(p);
  for (int j = 0; j < q; ++j) rows[j] = {{j, 1.0}};
  for (int j = q; j < p; ++j) {
    const auto& c = tree.children(j);
    const double inv = 1.0 / static_cast<double>(c.size());
    for (int k : c)
      for (const auto& [leaf, w] : rows[k]) rows[j].emplace_back(leaf, w * inv);
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < p; ++j)
    for (const auto& [leaf, w] : rows[j]) trips.emplace_back(j, leaf, w);
  Eigen::SparseMatrix<double> H(p, q);
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

Eigen::SparseMatrix<double> sibling_difference_matrix(const CompositionalTree& tree) {
  const int p = tree.node_count(), q = tree.leaf_count();
  std::vector<Eigen::Triplet<double>> trips;
  int row = 0;
  for (int j = q; j < p; ++j) {
    const auto& c = tree.children(j);
    for (std::size_t s = 0; s + 1 < c.size(); ++s) {
      trips.emplace_back(row, c[s], 1.0);
      trips.emplace_back(row, c[s + 1], -1.0);
      ++row;
    }
  }
  Eigen::SparseMatrix<double> M(q - 1, p);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

double raw_penalty(const CompositionalTree& tree, const Eigen::VectorXd& alpha,
                   const Eigen::VectorXd& beta, double eta) {
  check_eta(eta);
  if (alpha.size() != tree.leaf_count() || beta.size() != tree.node_count())
    fail(errc::dimension_mismatch, "raw_penalty: alpha must have length q and beta length p");
  const double mean = alpha.mean();
  double p1 = 0.0;
  for (int j = 0; j < alpha.size(); ++j) p1 += std::abs(alpha[j] - mean);
  double p2 = 0.0;
  for (int j = tree.leaf_count(); j < tree.node_count(); ++j) {
    const auto& c = tree.children(j);
    for (std::size_t s = 0; s + 1 < c.size(); ++s) p2 += std::abs(beta[c[s]] - beta[c[s + 1]]);
  }
  return eta * p1 + (1.0 - eta) * p2;
}

void dump_matrix_market(const PenaltyMatrix& D, std::ostream& out) {
  const auto S = D.sparse();
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << "% penalty matrix D(eta), eta = " << D.eta() << "\n";
  out << "% rows 1.." << D.leaf_count() << ": component selection block\n";
  out << "% rows " << (D.leaf_count() + 1) << ".." << D.rows() << ": sibling fusion block\n";
  out << S.rows() << " " << S.cols() << " " << S.nonZeros() << "\n";
  char buf[64];
  for (int k = 0; k < S.outerSize(); ++k)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(S, k); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%.17g", it.value());
      out << (it.row() + 1) << " " << (it.col() + 1) << " " << buf << "\n";
    }
}

}  // namespace treereg
