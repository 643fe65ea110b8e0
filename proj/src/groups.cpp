#include "lsfr/groups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lsfr {

std::pair<int, int> GroupStructure::block_origin(int b) const {
  const int bl = L - d + 1;
  const int b1 = b + 1;  // 1-based block index
  const int r = b1 % bl;
  if (r == 0) return {b1 / bl, bl};
  return {(b1 + bl - 1) / bl, r};
}

GroupStructure enumerate_blocks(int M, int L, int d) {
  if (d < 1) throw std::invalid_argument("enumerate_blocks: d must be >= 1");
  // M = L = d is allowed as the degenerate single-block case.
  if (M < d || L < d) {
    throw std::invalid_argument("enumerate_blocks: need M >= d and L >= d (got M=" +
                                std::to_string(M) + ", L=" + std::to_string(L) +
                                ", d=" + std::to_string(d) + ")");
  }
  GroupStructure s;
  s.M = M;
  s.L = L;
  s.d = d;
  const int B = s.num_overlap();
  s.groups.reserve(B + 1);
  for (int b = 0; b < B; ++b) {
    const auto [mstar, lstar] = s.block_origin(b);
    std::vector<int> idx;
    idx.reserve(d * d);
    for (int l = lstar; l < lstar + d; ++l) {
      for (int m = mstar; m < mstar + d; ++m) {
        idx.push_back((l - 1) * M + (m - 1));
      }
    }
    std::sort(idx.begin(), idx.end());
    s.groups.push_back(std::move(idx));
  }
  std::vector<int> all(M * L);
  std::iota(all.begin(), all.end(), 0);
  s.groups.push_back(std::move(all));
  return s;
}

GroupStructure balance_weights(GroupStructure s) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(s.num_coeffs());
  for (const auto& g : s.groups) {
    for (int j : g) counts[j] += 1;
  }
  s.weights.resize(s.num_coeffs());
  for (int j = 0; j < s.num_coeffs(); ++j) {
    s.weights[j] = 1.0 / counts[j];
  }
  return s;
}

Eigen::VectorXd group_norms(const Eigen::VectorXd& psi, const GroupStructure& s) {
  if (psi.size() != s.num_coeffs()) {
    throw std::invalid_argument("group_norms: psi has length " +
                                std::to_string(psi.size()) + ", expected " +
                                std::to_string(s.num_coeffs()));
  }
  if (s.weights.size() != s.num_coeffs()) {
    throw std::invalid_argument("group_norms: structure has no balancing weights");
  }
  Eigen::VectorXd norms(s.num_groups());
  for (int b = 0; b < s.num_groups(); ++b) {
    double acc = 0.0;
    for (int j : s.groups[b]) {
      const double v = s.weights[j] * psi[j];
      acc += v * v;
    }
    norms[b] = std::sqrt(acc);
  }
  return norms;
}

Eigen::VectorXd penalty_diagonal(const GroupStructure& s) {
  if (s.weights.size() != s.num_coeffs()) {
    throw std::invalid_argument("penalty_diagonal: structure has no balancing weights");
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(s.num_coeffs());
  for (const auto& g : s.groups) {
    for (int j : g) diag[j] += s.weights[j] * s.weights[j];
  }
  return diag;
}

RectangleSet zero_rectangles(const Eigen::MatrixXd& Psi, const GroupStructure& s,
                             double threshold) {
  if (threshold < 0.0) {
    throw std::invalid_argument("zero_rectangles: threshold must be >= 0");
  }
  if (Psi.rows() != s.M || Psi.cols() != s.L) {
    throw std::invalid_argument("zero_rectangles: Psi dimensions do not match structure");
  }
  RectangleSet out;
  for (int b = 0; b < s.num_overlap(); ++b) {
    const auto [mstar, lstar] = s.block_origin(b);
    if (Psi.block(mstar - 1, lstar - 1, s.d, s.d).cwiseAbs().maxCoeff() <= threshold) {
      out.rectangles.emplace_back(mstar, lstar);
    }
  }
  return out;
}

RectangleSet zero_rectangles(const Eigen::MatrixXd& Psi, const GroupStructure& s,
                             double threshold, const BSplineBasis& basis_t,
                             const BSplineBasis& basis_s) {
  RectangleSet out = zero_rectangles(Psi, s, threshold);
  out.knots_t = basis_t.distinct_knots();
  out.knots_s = basis_s.distinct_knots();
  return out;
}

}  // namespace lsfr
