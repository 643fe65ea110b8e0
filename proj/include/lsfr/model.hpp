#pragma once

#include <optional>
#include <utility>

#include <Eigen/Dense>

#include "lsfr/bspline.hpp"

namespace lsfr {

/// A sample of n curves observed on a shared grid, one curve per row.
struct FunctionalSample {
  Eigen::MatrixXd values;  ///< n x G
  Grid grid;
  /// Pointwise mean subtracted by center(); kept for back-transformation.
  std::optional<Eigen::VectorXd> mean_curve;

  int n() const { return static_cast<int>(values.rows()); }
  int num_points() const { return static_cast<int>(values.cols()); }
};

/// Subtract the pointwise mean curve; the mean is stored on the result.
FunctionalSample center(const FunctionalSample& sample);

/// Vectorized regression problem y = Z psi + e with
/// Z = Theta^T kron (X W Phi^T), W the diagonal of t-grid quadrature weights,
/// and y = vec(Y) stacking response grid points column-major.
struct DesignProblem {
  Eigen::MatrixXd Z;   ///< nG x LM
  Eigen::VectorXd y;   ///< length nG
  BSplineBasis basis_t;
  BSplineBasis basis_s;
  Grid grid_t;
  Grid grid_s;
  int n = 0;
  bool quadrature_weighted = true;
  /// Training means when the samples were centered, used by prediction.
  std::optional<Eigen::VectorXd> x_mean;
  std::optional<Eigen::VectorXd> y_mean;
  /// Cross products cached for the solver.
  Eigen::MatrixXd ZtZ;
  Eigen::VectorXd Zty;
  double yty = 0.0;
};

DesignProblem build_design(const FunctionalSample& x, const FunctionalSample& y,
                           const BSplineBasis& basis_t, const BSplineBasis& basis_s);

/// Bivariate kernel psi(t, s) = phi(t)^T Psi theta(s).
struct TensorKernel {
  Eigen::MatrixXd Psi;  ///< M x L
  BSplineBasis basis_t;
  BSplineBasis basis_s;
  /// Set when the kernel was fit on centered data; predictions then use
  /// y_mean + integral of psi against (x - x_mean).
  std::optional<Eigen::VectorXd> x_mean;
  std::optional<Eigen::VectorXd> y_mean;

  double eval(double t, double s) const;
  /// Values psi(t_i, s_j) on a tensor grid, size |gt| x |gs|.
  Eigen::MatrixXd surface(const Grid& gt, const Grid& gs) const;
};

/// yhat_i(s_g) = sum_h w_h x_i(t_h) psi(t_h, s_g), plus the stored mean curve
/// when the kernel carries one.
FunctionalSample predict(const TensorKernel& kernel, const FunctionalSample& x,
                         const Grid& s_grid);

/// Lag-1 pairs of a functional time series: x = curves 1..n-1, y = curves 2..n.
std::pair<FunctionalSample, FunctionalSample> build_ar_pairs(const FunctionalSample& series);

/// logH map y(s) = 1 - exp(-int_lo^s exp(z(u)) du) via cumulative trapezoid.
FunctionalSample logh_transform(const FunctionalSample& z);

/// Inverse of logh_transform on the same grid; recovers z up to quadrature
/// error. Requires curves strictly increasing with values in [0, 1).
FunctionalSample logh_inverse(const FunctionalSample& y);

}  // namespace lsfr
