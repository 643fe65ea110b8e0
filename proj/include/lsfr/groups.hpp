#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lsfr/bspline.hpp"

namespace lsfr {

/// Overlapping d x d coefficient blocks of an M x L matrix plus one global
/// group covering all coefficients. Indices address vec(Psi) in column-major
/// order, so coefficient (m, l) (1-based) has index (l-1)*M + (m-1).
///
/// Block b (1-based, b = 1..B with B = (M-d+1)(L-d+1)) covers rows
/// m*..m*+d-1 and columns l*..l*+d-1 where m* = ceil(b / (L-d+1)) and
/// l* = b mod (L-d+1); a zero remainder maps to l* = L-d+1 with
/// m* = b / (L-d+1), which makes b <-> (m*, l*) a bijection.
struct GroupStructure {
  int M = 0;
  int L = 0;
  int d = 0;
  /// Overlap blocks first (sorted member indices), global group last.
  std::vector<std::vector<int>> groups;
  /// Per-coefficient balancing constant c_j, the reciprocal of the number of
  /// groups (including the global one) containing j. Empty until
  /// balance_weights has run. The spec's per-group vectors c_b are recovered
  /// as c_b[j] = weights[j] for j in group b and 0 elsewhere.
  Eigen::VectorXd weights;

  int num_coeffs() const { return M * L; }
  int num_overlap() const { return (M - d + 1) * (L - d + 1); }
  int num_groups() const { return static_cast<int>(groups.size()); }

  /// (m*, l*) of overlap block b, both 1-based; b is the 0-based group index.
  std::pair<int, int> block_origin(int b) const;
};

/// Enumerate the B+1 groups; weights are left empty.
GroupStructure enumerate_blocks(int M, int L, int d);

/// Fill the balancing constants c_j = 1 / (number of groups containing j).
GroupStructure balance_weights(GroupStructure s);

/// Euclidean norms ||D_b psi||_2, one entry per group.
Eigen::VectorXd group_norms(const Eigen::VectorXd& psi, const GroupStructure& s);

/// Diagonal of sum_b D_b^T D_b, used by the ridge initialization and lambda_max.
Eigen::VectorXd penalty_diagonal(const GroupStructure& s);

/// Rectangles F_{m,l} = (tau_m, tau_{m+1}) x (sigma_l, sigma_{l+1}) on which a
/// tensor-product kernel vanishes when the matching d x d coefficient block is
/// zero. Indices are 1-based; knot vectors hold the distinct knots per axis
/// (empty when the rectangles were computed without bases).
struct RectangleSet {
  std::vector<std::pair<int, int>> rectangles;
  std::vector<double> knots_t;
  std::vector<double> knots_s;
};

/// Every (m, l) whose d x d block of Psi has all entries with |psi| <= threshold.
RectangleSet zero_rectangles(const Eigen::MatrixXd& Psi, const GroupStructure& s,
                             double threshold);

/// Same, with the axis knot vectors attached from the two bases.
RectangleSet zero_rectangles(const Eigen::MatrixXd& Psi, const GroupStructure& s,
                             double threshold, const BSplineBasis& basis_t,
                             const BSplineBasis& basis_s);

}  // namespace lsfr
