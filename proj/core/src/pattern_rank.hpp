#pragma once

#include <Eigen/Dense>

#include <vector>

#include "treereg/penalty.hpp"

namespace treereg {
namespace detail {

struct PatternAnalysis {
  int rank = 0;                // rank of the inactive-row submatrix of D
  Eigen::MatrixXd null_basis;  // q x (q - rank), only filled when requested
};

// Rank, and optionally a null space basis, of the submatrix of D(eta) formed
// by the rows flagged inactive. Identically zero rows (the whole centering
// block at eta = 0, the whole fusion block at eta = 1) contribute nothing.
//
// The tree structure keeps this cheap: inactive fusion rows always have full
// row rank, and their joint null space has an explicit sparse basis made of
// the all-ones vector plus one "run boundary" difference vector per active
// boundary between sibling runs. Only the inactive centering rows then need a
// dense rank revealing QR, expressed in that basis, which is small whenever
// the solution is heavily fused.
PatternAnalysis analyze_pattern(const PenaltyMatrix& D, const std::vector<char>& inactive,
                                bool want_basis);

}  // namespace detail
}  // namespace treereg
