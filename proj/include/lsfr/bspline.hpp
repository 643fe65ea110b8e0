#pragma once

#include <vector>

#include <Eigen/Dense>

namespace lsfr {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  bool operator==(const Interval& o) const { return lo == o.lo && hi == o.hi; }
};

/// Observation grid with quadrature weights approximating integrals over the domain.
struct Grid {
  std::vector<double> points;   ///< strictly increasing, size >= 2
  std::vector<double> weights;  ///< positive, sum equals the domain length

  int size() const { return static_cast<int>(points.size()); }
  Interval domain() const { return {points.front(), points.back()}; }
};

/// Equispaced grid on the domain with trapezoidal quadrature weights.
Grid make_grid(Interval domain, int num_points);

/// Univariate clamped B-spline basis of order d (piecewise polynomials of degree d-1).
///
/// The knot vector has the boundary knots repeated with multiplicity d and
/// num_basis - d evenly spaced interior knots, which yields exactly num_basis
/// basis functions. Basis function m (0-based) is supported on
/// [knots[m], knots[m + d]].
class BSplineBasis {
 public:
  /// Empty placeholder basis; build real ones through make_basis.
  BSplineBasis() = default;

  BSplineBasis(Interval domain, int num_basis, int order);

  int order() const { return order_; }
  int size() const { return num_basis_; }
  Interval domain() const { return domain_; }

  /// Full clamped knot vector, size num_basis + order.
  const std::vector<double>& knots() const { return knots_; }

  /// Distinct knot values: lo, interior knots, hi (size num_basis - order + 2).
  std::vector<double> distinct_knots() const;

  /// Values of all basis functions at x. Throws std::invalid_argument for x
  /// outside the domain.
  Eigen::VectorXd at(double x) const;

 private:
  int find_span(double x) const;

  Interval domain_;
  int num_basis_ = 0;
  int order_ = 0;
  std::vector<double> knots_;
};

/// Factory matching the construction above; rejects num_basis <= order,
/// order < 1 and degenerate domains.
BSplineBasis make_basis(Interval domain, int num_basis, int order);

/// num_basis x num_points matrix of basis values via the Cox-de Boor recursion.
/// Entry (m, g) is basis function m at grid point g; columns sum to 1.
Eigen::MatrixXd eval_basis(const BSplineBasis& basis, const Grid& grid);

}  // namespace lsfr
