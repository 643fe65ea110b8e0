#include "lsfr/bspline.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lsfr {

Grid make_grid(Interval domain, int num_points) {
  if (!(domain.hi > domain.lo)) {
    throw std::invalid_argument("make_grid: degenerate domain");
  }
  if (num_points < 2) {
    throw std::invalid_argument("make_grid: num_points must be >= 2");
  }
  Grid g;
  g.points.resize(num_points);
  g.weights.resize(num_points);
  const double h = domain.length() / (num_points - 1);
  for (int i = 0; i < num_points; ++i) {
    g.points[i] = domain.lo + h * i;
    g.weights[i] = h;
  }
  g.points.back() = domain.hi;  // avoid accumulated rounding at the right end
  g.weights.front() *= 0.5;
  g.weights.back() *= 0.5;
  return g;
}

BSplineBasis::BSplineBasis(Interval domain, int num_basis, int order)
    : domain_(domain), num_basis_(num_basis), order_(order) {
  if (!(domain.hi > domain.lo)) {
    throw std::invalid_argument("BSplineBasis: degenerate domain");
  }
  if (order < 1) {
    throw std::invalid_argument("BSplineBasis: order must be >= 1");
  }
  if (num_basis <= order) {
    throw std::invalid_argument(
        "BSplineBasis: num_basis must exceed order (got num_basis=" +
        std::to_string(num_basis) + ", order=" + std::to_string(order) + ")");
  }
  const int n_interior = num_basis - order;
  knots_.reserve(num_basis + order);
  for (int i = 0; i < order; ++i) knots_.push_back(domain.lo);
  for (int k = 1; k <= n_interior; ++k) {
    knots_.push_back(domain.lo + domain.length() * k / (n_interior + 1));
  }
  for (int i = 0; i < order; ++i) knots_.push_back(domain.hi);
}

std::vector<double> BSplineBasis::distinct_knots() const {
  std::vector<double> out;
  out.reserve(num_basis_ - order_ + 2);
  out.push_back(domain_.lo);
  for (int k = order_; k < num_basis_; ++k) out.push_back(knots_[k]);
  out.push_back(domain_.hi);
  return out;
}

int BSplineBasis::find_span(double x) const {
  // Index i with knots[i] <= x < knots[i+1]; the last nonempty span is closed
  // on the right so that x == hi evaluates through the final polynomial piece.
  if (x >= domain_.hi) return num_basis_ - 1;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  int span = static_cast<int>(it - knots_.begin()) - 1;
  return std::clamp(span, order_ - 1, num_basis_ - 1);
}

Eigen::VectorXd BSplineBasis::at(double x) const {
  if (!domain_.contains(x)) {
    throw std::invalid_argument("BSplineBasis::at: point " + std::to_string(x) +
                                " outside domain [" + std::to_string(domain_.lo) +
                                ", " + std::to_string(domain_.hi) + "]");
  }
  Eigen::VectorXd values = Eigen::VectorXd::Zero(num_basis_);
  const int span = find_span(x);
  // Triangular Cox-de Boor scheme: N holds the order_ (at most) nonzero
  // basis values on the current span.
  std::vector<double> N(order_, 0.0);
  N[0] = 1.0;
  for (int p = 1; p < order_; ++p) {
    std::vector<double> next(p + 1, 0.0);
    for (int j = 0; j < p; ++j) {
      const int i = span - p + 1 + j;
      const double den = knots_[i + p] - knots_[i];
      const double w = den > 0.0 ? (x - knots_[i]) / den : 0.0;
      next[j] += (1.0 - w) * N[j];
      next[j + 1] += w * N[j];
    }
    N = std::move(next);
  }
  for (int j = 0; j < order_; ++j) {
    const int idx = span - order_ + 1 + j;
    if (idx >= 0 && idx < num_basis_) values[idx] = N[j];
  }
  return values;
}

BSplineBasis make_basis(Interval domain, int num_basis, int order) {
  return BSplineBasis(domain, num_basis, order);
}

Eigen::MatrixXd eval_basis(const BSplineBasis& basis, const Grid& grid) {
  Eigen::MatrixXd out(basis.size(), grid.size());
  for (int g = 0; g < grid.size(); ++g) {
    out.col(g) = basis.at(grid.points[g]);
  }
  return out;
}

}  // namespace lsfr
