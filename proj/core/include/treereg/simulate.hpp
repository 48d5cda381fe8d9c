#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "treereg/rng.hpp"
#include "treereg/selection.hpp"
#include "treereg/tree.hpp"

namespace treereg {

// Complete binary tree of the given depth with labels X1, X2, ... assigned
// bottom up: leaves take X1..Xq left to right, each next level continues the
// numbering, the root gets Xp. Node index therefore equals label number minus
// one (depth 7: leaves X1..X128, root X255 at index 254).
CompositionalTree make_binary_tree(int depth);

// Deterministic synthetic tree with the shape of a five-level brain
// segmentation: p = 321, q = 236, root of degree 7, two symmetric 100-leaf
// subtrees under B1 and B2 plus five small subtrees B3..B7. Used by the
// bundled scenarios 3 and 4, whose published counterpart tree exists only as
// a figure.
CompositionalTree make_region_tree();

// One simulation setting: a tree, a ground truth, and sampling parameters.
struct ScenarioSpec {
  std::string name;
  CompositionalTree tree;
  Eigen::VectorXd beta_star;  // length p, constraint-valid, root = intercept
  int n = 120;
  double cov_decay = 0.2;    // leaf correlation decays as cov_decay^|i-j|
  double noise_ratio = 1.0;  // Var(noise) / Var(signal)
  int replicates = 100;
  std::uint64_t seed = 12345;
  bool approximate = false;  // truth re-derived on the stand-in tree
  TuningConfig tuning;

  // Marginal truth implied by beta_star, without the intercept.
  Eigen::VectorXd alpha_star() const;
};

// The four bundled scenarios (1: binary tree, leaf effects; 2: binary tree,
// stem effects; 3: region tree, leaf effects; 4: region tree, stem effects).
// Scenarios 1 and 2 have n = 120 < q and carry the small ridge 1e-4; 3 and 4
// have n = 819.
ScenarioSpec builtin_scenario(int id);

// Leaf design: rows are AR(1) Gaussian vectors normalized by their sum, so
// every row sums to one exactly. Rows whose sum is numerically zero
// (|sum| < 1e-8) are redrawn; a row failing 1000 redraws aborts.
Eigen::MatrixXd generate_design(const CompositionalTree& tree, int n, double cov_decay,
                                Rng& rng);

// Response y = X_full beta_star + noise, where the noise variance is
// noise_ratio times the sample variance of the signal. An intercept-only
// truth has no signal variance; that path keeps unit noise and warns instead
// of failing. A zero-variance signal with real effects is an error.
Eigen::VectorXd generate_response(const Eigen::MatrixXd& X_full,
                                  const Eigen::VectorXd& beta_star, double noise_ratio,
                                  Rng& rng, Warnings* warnings = nullptr);

// Support recovery metrics over the non-root coefficients (the root entry is
// the intercept and is always nonzero). Empty denominators score 1.
double support_sensitivity(const Eigen::VectorXd& beta_hat,
                           const Eigen::VectorXd& beta_star, double tol = 1e-8);
double support_specificity(const Eigen::VectorXd& beta_hat,
                           const Eigen::VectorXd& beta_star, double tol = 1e-8);

enum class Method { proposed, classo };
const char* method_name(Method m);

struct ReplicateMetrics {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double sse = 0.0;      // ||beta_hat - beta_star||^2 over all entries
  double eta_hat = 0.0;
  double lambda_hat = 0.0;
  int df = 0;
  bool ok = false;
};

struct MetricStats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 when fewer than two values
};

// One method x criterion cell of the report.
struct SimulationCell {
  Method method = Method::proposed;
  Criterion criterion = Criterion::bic;
  MetricStats sensitivity, specificity, sse, eta;
  std::vector<ReplicateMetrics> replicates;  // index = replicate number
};

struct SimulationReport {
  std::string scenario;
  int n = 0, p = 0, q = 0;
  int replicates = 0;
  std::uint64_t seed = 0;
  bool approximate = false;
  int failures = 0;  // replicates whose fit threw; excluded from the stats
  std::vector<std::string> failure_messages;
  std::vector<SimulationCell> cells;  // methods outer, criteria inner
  Warnings warnings;
};

// Runs the whole study. Each replicate draws its data from an independent
// stream keyed by (seed, replicate index), solves one tuning surface, and
// reads every requested method x criterion cell off that surface (the
// component-selection baseline is the same surface restricted to eta = 1).
// Replicates may run on several threads; the report depends only on the
// replicate indexing, never on scheduling. Per-replicate failures are
// recorded and skipped.
SimulationReport run_simulation(const ScenarioSpec& spec,
                                const std::vector<Method>& methods,
                                const std::vector<Criterion>& criteria, int threads = 1);

// All four cells (proposed and baseline, AIC and BIC).
SimulationReport run_simulation(const ScenarioSpec& spec, int threads = 1);

}  // namespace treereg
