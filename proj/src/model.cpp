#include "lsfr/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lsfr {

namespace {

Eigen::Map<const Eigen::VectorXd> grid_weights(const Grid& g) {
  return {g.weights.data(), static_cast<Eigen::Index>(g.weights.size())};
}

void check_grid_in_domain(const Grid& grid, const BSplineBasis& basis, const char* what) {
  const Interval dom = basis.domain();
  if (grid.points.front() < dom.lo || grid.points.back() > dom.hi) {
    throw std::invalid_argument(std::string(what) + ": grid extends outside the basis domain");
  }
}

}  // namespace

FunctionalSample center(const FunctionalSample& sample) {
  if (sample.n() < 2) {
    throw std::invalid_argument("center: need at least 2 curves");
  }
  FunctionalSample out = sample;
  Eigen::VectorXd mean = sample.values.colwise().mean();
  out.values.rowwise() -= mean.transpose();
  out.mean_curve = std::move(mean);
  return out;
}

DesignProblem build_design(const FunctionalSample& x, const FunctionalSample& y,
                           const BSplineBasis& basis_t, const BSplineBasis& basis_s) {
  if (x.n() != y.n()) {
    throw std::invalid_argument("build_design: x has " + std::to_string(x.n()) +
                                " curves but y has " + std::to_string(y.n()));
  }
  check_grid_in_domain(x.grid, basis_t, "build_design (t axis)");
  check_grid_in_domain(y.grid, basis_s, "build_design (s axis)");

  const int n = x.n();
  const int M = basis_t.size();
  const int L = basis_s.size();
  const int Gs = y.num_points();

  const Eigen::MatrixXd Phi = eval_basis(basis_t, x.grid);    // M x Gt
  const Eigen::MatrixXd Theta = eval_basis(basis_s, y.grid);  // L x Gs
  // X W Phi^T folds the t-integral quadrature into the design.
  const Eigen::MatrixXd A =
      x.values * grid_weights(x.grid).asDiagonal() * Phi.transpose();  // n x M

  DesignProblem p{.Z = Eigen::MatrixXd(static_cast<Eigen::Index>(n) * Gs,
                                       static_cast<Eigen::Index>(M) * L),
                  .y = Eigen::VectorXd(static_cast<Eigen::Index>(n) * Gs),
                  .basis_t = basis_t,
                  .basis_s = basis_s,
                  .grid_t = x.grid,
                  .grid_s = y.grid,
                  .n = n};
  for (int g = 0; g < Gs; ++g) {
    for (int l = 0; l < L; ++l) {
      p.Z.block(static_cast<Eigen::Index>(g) * n, static_cast<Eigen::Index>(l) * M, n, M) =
          Theta(l, g) * A;
    }
    p.y.segment(static_cast<Eigen::Index>(g) * n, n) = y.values.col(g);
  }
  p.x_mean = x.mean_curve;
  p.y_mean = y.mean_curve;
  p.ZtZ = p.Z.transpose() * p.Z;
  p.Zty = p.Z.transpose() * p.y;
  p.yty = p.y.squaredNorm();
  return p;
}

double TensorKernel::eval(double t, double s) const {
  return basis_t.at(t).dot(Psi * basis_s.at(s));
}

Eigen::MatrixXd TensorKernel::surface(const Grid& gt, const Grid& gs) const {
  const Eigen::MatrixXd Phi = eval_basis(basis_t, gt);    // M x |gt|
  const Eigen::MatrixXd Theta = eval_basis(basis_s, gs);  // L x |gs|
  return Phi.transpose() * Psi * Theta;
}

FunctionalSample predict(const TensorKernel& kernel, const FunctionalSample& x,
                         const Grid& s_grid) {
  check_grid_in_domain(x.grid, kernel.basis_t, "predict (t axis)");
  check_grid_in_domain(s_grid, kernel.basis_s, "predict (s axis)");
  Eigen::MatrixXd xv = x.values;
  if (kernel.x_mean) {
    if (kernel.x_mean->size() != x.num_points()) {
      throw std::invalid_argument("predict: stored x mean does not match the covariate grid");
    }
    xv.rowwise() -= kernel.x_mean->transpose();
  }
  const Eigen::MatrixXd Phi = eval_basis(kernel.basis_t, x.grid);
  const Eigen::MatrixXd Theta = eval_basis(kernel.basis_s, s_grid);
  Eigen::MatrixXd yhat = xv * grid_weights(x.grid).asDiagonal() * Phi.transpose() *
                         kernel.Psi * Theta;
  if (kernel.y_mean) {
    if (kernel.y_mean->size() != static_cast<Eigen::Index>(s_grid.points.size())) {
      throw std::invalid_argument("predict: stored y mean does not match the prediction grid");
    }
    yhat.rowwise() += kernel.y_mean->transpose();
  }
  return {std::move(yhat), s_grid, std::nullopt};
}

std::pair<FunctionalSample, FunctionalSample> build_ar_pairs(const FunctionalSample& series) {
  const int n = series.n();
  if (n < 2) {
    throw std::invalid_argument("build_ar_pairs: need at least 2 curves, got " +
                                std::to_string(n));
  }
  FunctionalSample x{series.values.topRows(n - 1), series.grid, std::nullopt};
  FunctionalSample y{series.values.bottomRows(n - 1), series.grid, std::nullopt};
  return {std::move(x), std::move(y)};
}

FunctionalSample logh_transform(const FunctionalSample& z) {
  constexpr double kExpGuard = 700.0;  // exp overflows past ~709
  if ((z.values.array().abs() >= kExpGuard).any()) {
    throw std::invalid_argument("logh_transform: |z| too large, exp(z) not representable");
  }
  const int G = z.num_points();
  FunctionalSample out = z;
  for (int i = 0; i < z.n(); ++i) {
    double g = 0.0;
    out.values(i, 0) = 0.0;
    for (int k = 1; k < G; ++k) {
      const double h = z.grid.points[k] - z.grid.points[k - 1];
      g += 0.5 * h * (std::exp(z.values(i, k - 1)) + std::exp(z.values(i, k)));
      out.values(i, k) = -std::expm1(-g);
    }
  }
  out.mean_curve = std::nullopt;
  return out;
}

FunctionalSample logh_inverse(const FunctionalSample& y) {
  const int G = y.num_points();
  if (G < 3) {
    throw std::invalid_argument("logh_inverse: need at least 3 grid points");
  }
  FunctionalSample out = y;
  for (int i = 0; i < y.n(); ++i) {
    for (int k = 0; k < G; ++k) {
      const double v = y.values(i, k);
      if (v < 0.0 || v >= 1.0) {
        throw std::invalid_argument("logh_inverse: curve " + std::to_string(i + 1) +
                                    " has values outside [0, 1)");
      }
      if (k > 0 && v <= y.values(i, k - 1)) {
        throw std::invalid_argument("logh_inverse: curve " + std::to_string(i + 1) +
                                    " is not strictly increasing");
      }
    }
    // g = -log(1 - y) is the cumulative trapezoid of E = exp(z), so the
    // pairwise sums E_{k-1} + E_k are known exactly. That fixes E up to one
    // alternating mode; the mode is resolved by minimizing the squared second
    // difference of E (closed-form 1-D least squares).
    Eigen::VectorXd A(G);
    A[0] = 0.0;
    for (int k = 1; k < G; ++k) {
      const double h = y.grid.points[k] - y.grid.points[k - 1];
      const double dg = -std::log1p(-y.values(i, k)) + std::log1p(-y.values(i, k - 1));
      A[k] = 2.0 * dg / h - A[k - 1];
    }
    double num = 0.0;
    double den = 0.0;
    for (int k = 1; k + 1 < G; ++k) {
      const double d2A = A[k + 1] - 2.0 * A[k] + A[k - 1];
      const double d2s = -4.0 * ((k % 2 == 0) ? 1.0 : -1.0);
      num += d2A * d2s;
      den += d2s * d2s;
    }
    const double eps = -num / den;
    for (int k = 0; k < G; ++k) {
      const double E = A[k] + eps * ((k % 2 == 0) ? 1.0 : -1.0);
      if (!(E > 0.0)) {
        throw std::invalid_argument("logh_inverse: reconstructed integrand not positive (curve " +
                                    std::to_string(i + 1) + ")");
      }
      out.values(i, k) = std::log(E);
    }
  }
  out.mean_curve = std::nullopt;
  return out;
}

}  // namespace lsfr
