#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "support/error_checks.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_tree.hpp"
#include "treereg/selection.hpp"

using namespace treereg;
using namespace treereg::testing;

namespace {

Eigen::MatrixXd compositional_design(std::mt19937_64& engine, int n, int q) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, q);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) X(i, j) = std::abs(normal(engine));
    X.row(i) /= X.row(i).sum();
  }
  return X;
}

}  // namespace

TEST_CASE("active tolerance follows the stated formula") {
  Eigen::VectorXd d(3);
  d << 0.5, -2.0, 0.25;
  CHECK(default_active_tol(d) == doctest::Approx(1e-6 * 3.0));
  CHECK(default_active_tol(Eigen::VectorXd::Zero(3)) == doctest::Approx(1e-6));
}

TEST_CASE("degrees of freedom on the worked fixture") {
  CompositionalTree tree = worked_tree();
  Eigen::VectorXd fused = Eigen::VectorXd::Constant(6, 1.4);
  Eigen::VectorXd generic(6);
  generic << 1, 2, 4, 8, 16, 32;
  Eigen::VectorXd pattern = worked_alpha_tilde();  // (5, 1, 3, 3, 3, 3)

  for (double eta : {0.0, 0.5, 1.0}) {
    PenaltyMatrix D(tree, eta);
    auto df = [&](const Eigen::VectorXd& a) {
      return effective_df(D, a, default_active_tol(D.apply(a)));
    };
    // Full shrinkage keeps one parameter, a generic point keeps all six, and
    // the worked pattern keeps two: the fused block plus one split pair.
    CHECK(df(fused) == 1);
    CHECK(df(generic) == 6);
    CHECK(df(pattern) == 2);
  }
}

TEST_CASE("degrees of freedom match the dense rank oracle on random trees") {
  std::mt19937_64 engine(59);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 40; ++trial) {
    CompositionalTree tree = random_tree(engine, 4 + static_cast<int>(engine() % 45));
    const int q = tree.leaf_count();
    const double eta = (engine() % 11) / 10.0;
    PenaltyMatrix D(tree, eta);
    Eigen::MatrixXd dense = dense_penalty_oracle(tree, eta);

    // Half-integer values create genuine ties, so inactive patterns mix
    // exact fusions with active rows.
    Eigen::VectorXd alpha(q);
    for (int j = 0; j < q; ++j) alpha[j] = std::round(normal(engine) * 2.0) / 2.0;

    Eigen::VectorXd d_alpha = D.apply(alpha);
    const double tol = default_active_tol(d_alpha);
    std::vector<char> inactive(static_cast<std::size_t>(d_alpha.size()), 0);
    for (int r = 0; r < d_alpha.size(); ++r)
      if (std::abs(d_alpha[r]) <= tol) inactive[static_cast<std::size_t>(r)] = 1;

    const int expected = q - inactive_rank_oracle(dense, inactive);
    CHECK(effective_df(D, alpha, tol) == expected);
  }
}

TEST_CASE("lambda grid is log spaced and anchored at the gradient bound") {
  std::mt19937_64 engine(61);
  Eigen::MatrixXd X = compositional_design(engine, 30, 5);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = normal(engine);

  auto grid = lambda_grid(X, y, 20, 1e-3, nullptr);
  REQUIRE(grid.size() == 20);
  const double lmax =
      (2.0 / 30) *
      (X.transpose() * (y.array() - y.mean()).matrix()).lpNorm<Eigen::Infinity>();
  CHECK(grid.front() == doctest::Approx(lmax));
  CHECK(grid.back() == doctest::Approx(lmax * 1e-3));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] < grid[i - 1]);
    CHECK(grid[i] / grid[i - 1] ==
          doctest::Approx(grid[1] / grid[0]).epsilon(1e-12));
  }

  auto single = lambda_grid(X, y, 1, 1e-3, nullptr);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == doctest::Approx(lmax));
}

TEST_CASE("constant outcome falls back to the fixed grid with a warning") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Constant(10, 4, 0.25);
  Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 2.0);
  Warnings warnings;
  auto grid = lambda_grid(X, y, 5, 1e-2, &warnings);
  CHECK(grid.front() == doctest::Approx(1.0));
  CHECK(grid.back() == doctest::Approx(1e-4));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("lambda_max = 0") != std::string::npos);
}

TEST_CASE("grid parameters are validated") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Constant(4, 2, 0.5);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(4, 0, 3);
  CHECK(fails_with(errc::invalid_argument, [&] { lambda_grid(X, y, 0, 1e-3, nullptr); }));
  CHECK(fails_with(errc::invalid_argument, [&] { lambda_grid(X, y, 5, 0.0, nullptr); }));
  CHECK(fails_with(errc::invalid_argument, [&] { lambda_grid(X, y, 5, 1.5, nullptr); }));
}

TEST_CASE("information criteria spell out their formulas") {
  const double rss = std::exp(2.0);
  CHECK(information_criterion(rss, 50, 3, Criterion::aic) ==
        doctest::Approx(50 * 2.0 + 2 * 3));
  CHECK(information_criterion(rss, 50, 3, Criterion::bic) ==
        doctest::Approx(50 * 2.0 + std::log(50.0) * 3));
  CHECK(std::isfinite(information_criterion(0.0, 50, 3, Criterion::bic)));
  CHECK(criterion_name(Criterion::aic) == std::string("aic"));
  CHECK(criterion_name(Criterion::bic) == std::string("bic"));
}

TEST_CASE("surface covers the full grid row major in eta") {
  std::mt19937_64 engine(67);
  CompositionalTree tree = worked_tree();
  const int n = 60;
  Eigen::MatrixXd X = compositional_design(engine, n, 6);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = 3.0 + 2.0 * X(i, 0) - 2.0 * X(i, 1) + 0.1 * normal(engine);

  TuningConfig config;
  config.eta_grid = {0.0, 0.5, 1.0};
  config.lambda_grid_size = 8;
  TuningSurface surface = compute_surface(tree, X, y, config);

  CHECK(surface.n == n);
  REQUIRE(surface.etas == std::vector<double>{0.0, 0.5, 1.0});
  REQUIRE(surface.lambdas.size() == 8);
  REQUIRE(surface.points.size() == 24);
  for (int ei = 0; ei < 3; ++ei) {
    for (int li = 0; li < 8; ++li) {
      const GridPoint& pt = surface.at(ei, li);
      CHECK(pt.eta == surface.etas[ei]);
      CHECK(pt.lambda == surface.lambdas[li]);
      CHECK(pt.ok);
      CHECK(pt.rss > 0.0);
      CHECK(pt.df >= 1);
      CHECK(pt.df <= 6);
    }
  }
}

TEST_CASE("ties resolve toward larger lambda then larger eta") {
  TuningSurface surface;
  surface.etas = {0.0, 1.0};
  surface.lambdas = {2.0, 1.0};
  surface.n = 10;
  GridPoint pt;
  pt.rss = 1.0;
  pt.df = 1;
  pt.ok = true;
  for (int ei = 0; ei < 2; ++ei)
    for (int li = 0; li < 2; ++li) {
      pt.eta = surface.etas[ei];
      pt.lambda = surface.lambdas[li];
      surface.points.push_back(pt);
    }

  SurfaceSelection pick = select_from_surface(surface, Criterion::bic);
  CHECK(pick.eta_index == 1);
  CHECK(pick.lambda_index == 0);

  // A strictly better point wins regardless of position.
  surface.points[3].rss = 0.5;
  pick = select_from_surface(surface, Criterion::bic);
  CHECK(pick.eta_index == 1);
  CHECK(pick.lambda_index == 1);

  // Failed points are never selected.
  surface.points[3].ok = false;
  pick = select_from_surface(surface, Criterion::bic);
  CHECK(pick.eta_index == 1);
  CHECK(pick.lambda_index == 0);
}

TEST_CASE("eta restriction selects within one path or reports failure") {
  TuningSurface surface;
  surface.etas = {0.0, 1.0};
  surface.lambdas = {1.0};
  surface.n = 10;
  GridPoint pt;
  pt.ok = true;
  pt.df = 1;
  pt.lambda = 1.0;
  pt.eta = 0.0;
  pt.rss = 0.1;  // better, but outside the restriction
  surface.points.push_back(pt);
  pt.eta = 1.0;
  pt.rss = 1.0;
  surface.points.push_back(pt);

  SurfaceSelection pick = select_from_surface(surface, Criterion::bic, 1.0);
  CHECK(pick.eta_index == 1);
  CHECK(fails_with(errc::all_solves_failed,
                   [&] { select_from_surface(surface, Criterion::bic, 0.37); }));
}

TEST_CASE("fit recovers a planted sparse truth end to end") {
  std::mt19937_64 engine(71);
  CompositionalTree tree = worked_tree();
  const int n = 200;
  Eigen::MatrixXd X = compositional_design(engine, n, 6);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 1.0 + 4.0 * X(i, 0) - 4.0 * X(i, 1) + 0.02 * normal(engine);

  FitResult result = fit(tree, X, y, {});

  CHECK(result.alpha_hat.sum() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(result.alpha_hat[0] > 1.0);
  CHECK(result.alpha_hat[1] < -1.0);
  for (int j = 2; j < 6; ++j) CHECK(std::abs(result.alpha_hat[j]) < 0.3);

  // The recovered conditional effects are consistent with the marginals.
  QSystem qs(tree);
  Eigen::VectorXd forward = qs.forward_alpha(result.beta_hat);
  CHECK((forward - result.alpha_hat).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(result.beta_hat[tree.root()] == doctest::Approx(result.intercept));

  // Reported selection data points back into the surface.
  const GridPoint& pt = result.surface.at(result.eta_index, result.lambda_index);
  CHECK(pt.eta == result.eta_hat);
  CHECK(pt.lambda == result.lambda_hat);
  CHECK(result.df == pt.df);
  CHECK(result.ic_value ==
        doctest::Approx(information_criterion(pt.rss, n, pt.df, result.criterion)));
}

TEST_CASE("fit prechecks reject bad compositions") {
  std::mt19937_64 engine(73);
  CompositionalTree tree = worked_tree();
  Eigen::MatrixXd X = compositional_design(engine, 20, 6);
  Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(20, 0, 1);

  Eigen::MatrixXd scaled = X;
  scaled.row(3) *= 1.01;
  CHECK(fails_with(errc::composition_violated, [&] { fit(tree, scaled, y, {}); }));

  Eigen::MatrixXd signed_rows = X;
  signed_rows(5, 1) += signed_rows(5, 0) + 0.1;  // keep the row sum at one
  signed_rows(5, 0) = -0.1;
  CHECK(fails_with(errc::composition_violated, [&] { fit(tree, signed_rows, y, {}); }));

  TuningConfig relaxed;
  relaxed.require_nonnegative = false;
  CHECK_NOTHROW(fit(tree, signed_rows, y, relaxed));

  CHECK(fails_with(errc::invalid_argument, [&] {
    fit(tree, X.topRows(1), y.head(1), {});
  }));

  TuningConfig empty_grid;
  empty_grid.eta_grid.clear();
  CHECK(fails_with(errc::invalid_argument, [&] { fit(tree, X, y, empty_grid); }));
}

TEST_CASE("path solver defaults scale the step with lambda") {
  SolverConfig config = path_solver_defaults();
  CHECK(config.rho == 3.0);
  CHECK(config.scale_rho_with_lambda);
}

TEST_CASE("default eta grid spans the unit interval in tenths") {
  auto grid = TuningConfig::default_eta_grid();
  REQUIRE(grid.size() == 11);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == 1.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(grid[i] == doctest::Approx(0.1 * i));
}
