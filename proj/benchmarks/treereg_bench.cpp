// Microbenchmarks for the hot paths: the sparse penalty operator, the
// marginal-to-conditional recovery, single generalized-lasso solves, and a
// warm-started lambda path, which is the unit of work behind every tuning
// surface row. Run manually:
//
//   ./build/benchmarks/treereg_bench [--benchmark_filter=...]

#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "treereg/penalty.hpp"
#include "treereg/recovery.hpp"
#include "treereg/rng.hpp"
#include "treereg/selection.hpp"
#include "treereg/simulate.hpp"
#include "treereg/solver.hpp"
#include "treereg/tree.hpp"

namespace {

using namespace treereg;

struct Problem {
  CompositionalTree tree;
  Eigen::MatrixXd X_leaf;
  Eigen::VectorXd y;
};

// Scenario 1 sized data: 128 leaves, 120 observations, unit noise ratio.
Problem binary_problem() {
  ScenarioSpec spec = builtin_scenario(1);
  Rng rng = Rng::for_replicate(spec.seed, 0);
  Problem p{spec.tree, generate_design(spec.tree, spec.n, spec.cov_decay, rng), {}};
  Eigen::MatrixXd X_full(spec.n, spec.tree.node_count());
  for (int i = 0; i < spec.n; ++i)
    X_full.row(i) = spec.tree.expand_leaf_values(p.X_leaf.row(i).transpose()).transpose();
  p.y = generate_response(X_full, spec.beta_star, spec.noise_ratio, rng);
  return p;
}

void PenaltyApplyRegion(benchmark::State& state) {
  const CompositionalTree tree = make_region_tree();
  const PenaltyMatrix D(tree, 0.5);
  Rng rng(7);
  Eigen::VectorXd alpha(tree.leaf_count());
  for (int j = 0; j < alpha.size(); ++j) alpha[j] = rng.normal();
  Eigen::VectorXd out;
  for (auto _ : state) {
    D.apply(alpha, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(PenaltyApplyRegion);

void PenaltyAdjointRegion(benchmark::State& state) {
  const CompositionalTree tree = make_region_tree();
  const PenaltyMatrix D(tree, 0.5);
  Rng rng(8);
  Eigen::VectorXd w(D.rows());
  for (int j = 0; j < w.size(); ++j) w[j] = rng.normal();
  Eigen::VectorXd out;
  for (auto _ : state) {
    D.apply_adjoint(w, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(PenaltyAdjointRegion);

void RecoverBetaRegion(benchmark::State& state) {
  const CompositionalTree tree = make_region_tree();
  const QSystem qs(tree);
  Rng rng(9);
  Eigen::VectorXd alpha(tree.leaf_count());
  for (int j = 0; j < alpha.size(); ++j) alpha[j] = rng.normal();
  for (auto _ : state) {
    Eigen::VectorXd beta = qs.recover_beta(alpha);
    benchmark::DoNotOptimize(beta.data());
  }
}
BENCHMARK(RecoverBetaRegion);

void SolveColdBinary(benchmark::State& state) {
  const Problem p = binary_problem();
  const PenaltyMatrix D(p.tree, 0.5);
  GenLassoSolver solver(p.X_leaf, p.y, D, SolverConfig{});
  const double lambda = solver.lambda_max() * 0.1;
  for (auto _ : state) {
    solver.reset_state();
    SolverSolution sol = solver.solve(lambda);
    benchmark::DoNotOptimize(sol.objective);
  }
}
BENCHMARK(SolveColdBinary)->Unit(benchmark::kMillisecond);

// One tuning surface row: fifty lambdas descended with warm starts. The two
// variants differ only in whether the step is rescaled per lambda, which is
// the path-mode default.
void solve_path(benchmark::State& state, bool scale_rho) {
  const Problem p = binary_problem();
  const PenaltyMatrix D(p.tree, 0.5);
  SolverConfig config = scale_rho ? path_solver_defaults() : SolverConfig{};
  GenLassoSolver solver(p.X_leaf, p.y, D, config);
  const std::vector<double> lambdas = lambda_grid(p.X_leaf, p.y, 50, 1e-4);
  long iterations = 0;
  for (auto _ : state) {
    solver.reset_state();
    for (const double lambda : lambdas) {
      SolverSolution sol = solver.solve(lambda);
      iterations += sol.iterations;
      benchmark::DoNotOptimize(sol.objective);
    }
  }
  state.counters["admm_iters"] =
      benchmark::Counter(static_cast<double>(iterations), benchmark::Counter::kAvgIterations);
}

void PathPlainRho(benchmark::State& state) { solve_path(state, false); }
BENCHMARK(PathPlainRho)->Unit(benchmark::kMillisecond);

void PathScaledRho(benchmark::State& state) { solve_path(state, true); }
BENCHMARK(PathScaledRho)->Unit(benchmark::kMillisecond);

void FitSmallTree(benchmark::State& state) {
  CompositionalTree tree = CompositionalTree::from_edges({{"L1", "A"},
                                                          {"L2", "A"},
                                                          {"L3", "B"},
                                                          {"L4", "B"},
                                                          {"A", "R"},
                                                          {"B", "R"}});
  Rng rng(11);
  const int n = 60;
  Eigen::MatrixXd X(n, 4);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) X(i, j) = std::abs(rng.normal()) + 0.05;
    X.row(i) /= X.row(i).sum();
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i)
    y[i] = 3.0 + 2.0 * X(i, 0) - 2.0 * X(i, 1) + 0.05 * rng.normal();
  TuningConfig config;
  config.require_nonnegative = false;
  for (auto _ : state) {
    FitResult result = fit(tree, X, y, config);
    benchmark::DoNotOptimize(result.ic_value);
  }
}
BENCHMARK(FitSmallTree)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
