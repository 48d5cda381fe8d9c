#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include <random>
#include <sstream>

#include "support/error_checks.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_tree.hpp"
#include "treereg/penalty.hpp"
#include "treereg/recovery.hpp"

using namespace treereg;
using namespace treereg::testing;

TEST_CASE("node averages match the hand derived fixture") {
  CompositionalTree tree = worked_tree();
  Eigen::MatrixXd H = Eigen::MatrixXd(node_average_matrix(tree));
  CHECK((H - worked_node_averages()).cwiseAbs().maxCoeff() < 1e-15);
  for (int j = 0; j < tree.node_count(); ++j)
    CHECK(H.row(j).sum() == doctest::Approx(1.0));
}

TEST_CASE("fusion block matches the hand derived fixture") {
  CompositionalTree tree = worked_tree();
  Eigen::MatrixXd M = Eigen::MatrixXd(sibling_difference_matrix(tree));
  Eigen::MatrixXd H = Eigen::MatrixXd(node_average_matrix(tree));
  CHECK((M * H - worked_fusion_rows()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fused row bookkeeping names the sibling pairs") {
  CompositionalTree tree = worked_tree();
  PenaltyMatrix D(tree, 0.5);
  const auto& rows = D.fused_rows();
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].parent == 6);
  CHECK(rows[0].left == 0);
  CHECK(rows[0].right == 1);
  CHECK(rows[3].parent == 8);
  CHECK(rows[3].left == 6);
  CHECK(rows[3].right == 7);
  CHECK(rows[4].left == 7);
  CHECK(rows[4].right == 5);
}

TEST_CASE("dense form stacks the scaled blocks") {
  CompositionalTree tree = worked_tree();
  for (double eta : {0.0, 0.4, 1.0}) {
    PenaltyMatrix D(tree, eta);
    Eigen::MatrixXd expected(11, 6);
    expected.topRows(6) = eta * centering_matrix(6);
    expected.bottomRows(5) = (1.0 - eta) * worked_fusion_rows();
    CHECK((D.dense() - expected).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((D.dense() - dense_penalty_oracle(tree, eta)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((Eigen::MatrixXd(D.sparse()) - expected).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("centering matrix is the sum zero projector") {
  Eigen::MatrixXd C = centering_matrix(5);
  CHECK((C * C - C).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(C.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
  CHECK(fails_with(errc::invalid_argument, [] { centering_matrix(0); }));
}

TEST_CASE("matrix free apply agrees with the dense oracle on random trees") {
  std::mt19937_64 engine(7);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 50; ++trial) {
    CompositionalTree tree = random_tree(engine, 4 + static_cast<int>(engine() % 57));
    const int q = tree.leaf_count();
    const double eta = (engine() % 11) / 10.0;
    PenaltyMatrix D(tree, eta);
    Eigen::MatrixXd dense = dense_penalty_oracle(tree, eta);

    Eigen::VectorXd alpha(q);
    for (int j = 0; j < q; ++j) alpha[j] = normal(engine);
    Eigen::VectorXd w(2 * q - 1);
    for (int r = 0; r < w.size(); ++r) w[r] = normal(engine);

    CHECK((D.apply(alpha) - dense * alpha).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((D.apply_adjoint(w) - dense.transpose() * w).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((D.gram() - dense.transpose() * dense).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::MatrixXd H = node_average_oracle(tree);
    CHECK((D.node_averages(alpha) - H * alpha).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("null space is exactly the constant vector at every eta") {
  std::mt19937_64 engine(11);
  for (int trial = 0; trial < 20; ++trial) {
    CompositionalTree tree = random_tree(engine, 4 + static_cast<int>(engine() % 37));
    const int q = tree.leaf_count();
    for (double eta : {0.0, 0.3, 1.0}) {
      PenaltyMatrix D(tree, eta);
      Eigen::VectorXd ones = Eigen::VectorXd::Ones(q);
      CHECK(D.apply(ones).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D.dense());
      qr.setThreshold(1e-10);
      CHECK(qr.rank() == q - 1);
    }
  }
}

TEST_CASE("penalty value equals the l1 norm of D alpha") {
  CompositionalTree tree = worked_tree();
  Eigen::VectorXd beta = worked_beta();
  Eigen::VectorXd alpha = forward_alpha(tree, beta);
  for (double eta : {0.0, 0.25, 1.0}) {
    PenaltyMatrix D(tree, eta);
    CHECK(raw_penalty(tree, alpha, beta, eta) == doctest::Approx(worked_penalty_value));
    CHECK(D.apply(worked_alpha_tilde()).lpNorm<1>() ==
          doctest::Approx(worked_penalty_value));
  }

  std::mt19937_64 engine(13);
  for (int trial = 0; trial < 20; ++trial) {
    CompositionalTree t = random_tree(engine, 4 + static_cast<int>(engine() % 37));
    Eigen::VectorXd b = random_beta(engine, t);
    Eigen::VectorXd a = forward_alpha(t, b);
    const double eta = (engine() % 11) / 10.0;
    PenaltyMatrix D(t, eta);
    CHECK(raw_penalty(t, a, b, eta) == doctest::Approx(D.apply(a).lpNorm<1>()).epsilon(1e-9));
  }
}

TEST_CASE("operator norm estimate tracks the true largest singular value") {
  CompositionalTree tree = worked_tree();
  PenaltyMatrix D(tree, 0.6);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(D.dense());
  const double exact = svd.singularValues()[0];
  CHECK(D.operator_norm_estimate(100) == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("subtree leaves enumerate descendants") {
  CompositionalTree tree = worked_tree();
  PenaltyMatrix D(tree, 0.5);
  CHECK(D.subtree_leaves(6) == std::vector<int>{0, 1});
  CHECK(D.subtree_leaves(7) == std::vector<int>{2, 3, 4});
  CHECK(D.subtree_leaves(8) == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK(D.subtree_leaves(3) == std::vector<int>{3});
}

TEST_CASE("eta outside the unit interval is rejected") {
  CompositionalTree tree = worked_tree();
  CHECK(fails_with(errc::eta_out_of_range, [&] { PenaltyMatrix(tree, -0.1); }));
  CHECK(fails_with(errc::eta_out_of_range, [&] { PenaltyMatrix(tree, 1.0001); }));
}

TEST_CASE("matrix market dump carries both blocks") {
  CompositionalTree tree = worked_tree();
  PenaltyMatrix D(tree, 0.5);
  std::ostringstream out;
  dump_matrix_market(D, out);
  const std::string text = out.str();
  CHECK(text.rfind("%%MatrixMarket matrix coordinate real general", 0) == 0);
  CHECK(text.find("% rows 1..6: component selection block") != std::string::npos);
  CHECK(text.find("% rows 7..11: sibling fusion block") != std::string::npos);
  // 1-based indices: the last fusion row pairs B with L6, entry -0.5 at L6.
  CHECK(text.find("11 6 -0.5") != std::string::npos);
}
