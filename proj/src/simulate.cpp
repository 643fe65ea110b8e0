#include "lsfr/simulate.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace lsfr {

namespace {

constexpr int kIseGridSize = 200;

double smootherstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

/// Chebyshev distance from (t, s) to the closed rectangle [a1,b1] x [a2,b2].
double rect_distance(double t, double s, double a1, double b1, double a2, double b2) {
  const double dt = std::max({a1 - t, t - b1, 0.0});
  const double ds = std::max({a2 - s, s - b2, 0.0});
  return std::max(dt, ds);
}

Eigen::MatrixXd kernel_on_grid(const TrueKernel& k, const Grid& gt, const Grid& gs) {
  Eigen::MatrixXd K(gt.size(), gs.size());
  for (int i = 0; i < gt.size(); ++i) {
    for (int j = 0; j < gs.size(); ++j) {
      K(i, j) = k.evaluator(gt.points[i], gs.points[j]);
    }
  }
  return K;
}

std::uint64_t sub_seed(std::uint64_t base, int replicate, int role) {
  return base * 1000003ULL + static_cast<std::uint64_t>(replicate) * 101ULL +
         static_cast<std::uint64_t>(role);
}

double realized_snr_of(const Eigen::MatrixXd& signal, const Eigen::MatrixXd& noise,
                       const Grid& grid) {
  const Eigen::Map<const Eigen::VectorXd> w(grid.weights.data(),
                                            static_cast<Eigen::Index>(grid.weights.size()));
  const Eigen::VectorXd snum = (signal.array().square().matrix()) * w;
  const Eigen::VectorXd eden = (noise.array().square().matrix()) * w;
  return (snum.array() / eden.array()).mean();
}

}  // namespace

FunctionalSample gen_covariates(int n, int G, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_covariates: n must be >= 1");
  if (G < 2) throw std::invalid_argument("gen_covariates: G must be >= 2");
  const BSplineBasis basis = make_basis({0.0, 1.0}, 19, 4);  // 15 interior knots
  const Grid grid = make_grid({0.0, 1.0}, G);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd coef(n, basis.size());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < basis.size(); ++k) coef(i, k) = gauss(rng);
  }
  return {coef * eval_basis(basis, grid), grid, std::nullopt};
}

TrueKernel true_kernel(int kernel_id) {
  switch (kernel_id) {
    case 1: {
      // Quasi-concurrent band: compactly supported bump around the diagonal.
      TrueKernel k;
      k.evaluator = [](double t, double s) {
        const double r = (t - s) / 0.25;
        const double q = 1.0 - r * r;
        return q > 0.0 ? 5.0 * q * q * q : 0.0;
      };
      k.in_zero_region = [](double t, double s) { return std::abs(t - s) >= 0.25; };
      k.zero_area = 0.75 * 0.75;
      k.description = "psi1(t,s) = 5 (1 - ((t-s)/0.25)^2)^3 for |t-s| < 0.25, else 0";
      return k;
    }
    case 2: {
      // Historical: zero for t > s.
      TrueKernel k;
      k.evaluator = [](double t, double s) {
        if (t > s) return 0.0;
        const double u = s - t;
        return 20.0 * u * u * std::exp(-2.0 * u);
      };
      k.in_zero_region = [](double t, double s) { return t > s; };
      k.zero_area = 0.5;
      k.description = "psi2(t,s) = 20 (s-t)^2 exp(-2(s-t)) for t <= s, else 0";
      return k;
    }
    case 3: {
      // Zero on two disjoint rectangles.
      TrueKernel k;
      k.evaluator = [](double t, double s) {
        const double w1 = smootherstep(rect_distance(t, s, 0.10, 0.45, 0.55, 0.90) / 0.08);
        const double w2 = smootherstep(rect_distance(t, s, 0.55, 0.90, 0.10, 0.45) / 0.08);
        const double base = 1.0 + 0.5 * std::sin(M_PI * t) * std::sin(M_PI * s);
        return 2.0 * base * w1 * w2;
      };
      k.in_zero_region = [](double t, double s) {
        const bool in1 = t >= 0.10 && t <= 0.45 && s >= 0.55 && s <= 0.90;
        const bool in2 = t >= 0.55 && t <= 0.90 && s >= 0.10 && s <= 0.45;
        return in1 || in2;
      };
      k.zero_area = 2.0 * 0.35 * 0.35;
      k.description =
          "psi3(t,s) = 2 (1 + 0.5 sin(pi t) sin(pi s)) ramp(R1) ramp(R2), vanishing exactly on "
          "[0.10,0.45]x[0.55,0.90] and [0.55,0.90]x[0.10,0.45]";
      return k;
    }
    case 4: {
      // No sparsity: strictly positive everywhere.
      TrueKernel k;
      k.evaluator = [](double t, double s) {
        const double dt = t - 0.45;
        const double ds = s - 0.55;
        return 0.6 + 2.2 * std::exp(-(dt * dt + ds * ds) / 0.12);
      };
      k.in_zero_region = [](double, double) { return false; };
      k.zero_area = 0.0;
      k.description = "psi4(t,s) = 0.6 + 2.2 exp(-((t-0.45)^2 + (s-0.55)^2)/0.12), nowhere zero";
      return k;
    }
    default:
      throw std::invalid_argument("true_kernel: kernel_id must be in 1..4, got " +
                                  std::to_string(kernel_id));
  }
}

FunctionalSample gen_responses(const FunctionalSample& x, const TrueKernel& kernel,
                               double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw std::invalid_argument("gen_responses: snr must be > 0");
  const Grid& grid = x.grid;
  const Eigen::Map<const Eigen::VectorXd> w(grid.weights.data(),
                                            static_cast<Eigen::Index>(grid.weights.size()));
  const Eigen::MatrixXd K = kernel_on_grid(kernel, grid, grid);
  const Eigen::MatrixXd signal = x.values * w.asDiagonal() * K;

  const Eigen::VectorXd snum = (signal.array().square().matrix()) * w;
  if (snum.maxCoeff() <= 0.0) {
    throw std::runtime_error("gen_responses: degenerate, the signal is identically zero");
  }
  if (std::isinf(snr)) {
    return {signal, grid, std::nullopt};
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd e(x.n(), grid.size());
  for (int i = 0; i < x.n(); ++i) {
    for (int g = 0; g < grid.size(); ++g) e(i, g) = gauss(rng);
  }
  const Eigen::VectorXd eden = (e.array().square().matrix()) * w;
  const double sigma2 = (snum.array() / eden.array()).mean() / snr;
  return {signal + std::sqrt(sigma2) * e, grid, std::nullopt};
}

EvaluationReport ise_metrics(const TensorKernel& estimate, const TrueKernel& truth) {
  const Grid q = make_grid({0.0, 1.0}, kIseGridSize);
  const Eigen::MatrixXd est = estimate.surface(q, q);
  EvaluationReport rep;
  double ise0 = 0.0;
  double ise1 = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    for (int j = 0; j < q.size(); ++j) {
      const double t = q.points[i];
      const double s = q.points[j];
      const double diff = est(i, j) - truth.evaluator(t, s);
      const double cell = q.weights[i] * q.weights[j] * diff * diff;
      if (truth.in_zero_region(t, s)) {
        ise0 += cell;
      } else {
        ise1 += cell;
      }
    }
  }
  const double mu0 = truth.zero_area;
  rep.ise1 = ise1;
  if (mu0 > 0.0) {
    rep.ise0 = ise0;
    rep.ise = ise0 * mu0 + ise1 * (1.0 - mu0);
  } else {
    rep.ise0 = std::numeric_limits<double>::quiet_NaN();
    rep.ise = ise1 * 1.0;
  }
  return rep;
}

std::vector<EvaluationReport> run_scenario(const SimulationScenario& sc, int replicates) {
  if (replicates < 1) throw std::invalid_argument("run_scenario: replicates must be >= 1");
  if (sc.n < 2) throw std::invalid_argument("run_scenario: n must be >= 2");
  const TrueKernel truth = true_kernel(sc.kernel_id);

  const BSplineBasis basis_t = make_basis({0.0, 1.0}, sc.M, sc.order);
  const BSplineBasis basis_s = make_basis({0.0, 1.0}, sc.L, sc.order);
  const GroupStructure structure = balance_weights(enumerate_blocks(sc.M, sc.L, sc.order));
  const SolverConfig config;

  std::vector<EvaluationReport> reports;
  reports.reserve(replicates);
  for (int r = 0; r < replicates; ++r) {
    const FunctionalSample x = gen_covariates(sc.n, sc.G, sub_seed(sc.seed, r, 0));
    const FunctionalSample y = gen_responses(x, truth, sc.snr, sub_seed(sc.seed, r, 1));
    const FunctionalSample xv = gen_covariates(sc.validation_n, sc.G, sub_seed(sc.seed, r, 2));
    const FunctionalSample yv = gen_responses(xv, truth, sc.snr, sub_seed(sc.seed, r, 3));

    const DesignProblem problem = build_design(x, y, basis_t, basis_s);
    LambdaPath path;
    try {
      path = fit_path(problem, structure, config, sc.path_size, sc.min_ratio);
    } catch (const std::exception& e) {
      throw std::runtime_error("run_scenario: replicate " + std::to_string(r) +
                               " failed: " + e.what());
    }
    const int sel = select_lambda(path, problem, xv, yv);
    const FitResult& best = path.fits[sel];
    const TensorKernel kernel{
        Eigen::Map<const Eigen::MatrixXd>(best.psi_hat.data(), sc.M, sc.L), basis_t,
        basis_s, std::nullopt, std::nullopt};

    EvaluationReport rep = ise_metrics(kernel, truth);
    rep.replicate = r;
    rep.selected_index = sel;
    rep.selected_lambda = path.lambdas[sel];

    {  // realized signal-to-noise ratio of the training responses
      const Eigen::Map<const Eigen::VectorXd> w(
          x.grid.weights.data(), static_cast<Eigen::Index>(x.grid.weights.size()));
      const Eigen::MatrixXd K = kernel_on_grid(truth, x.grid, x.grid);
      const Eigen::MatrixXd signal = x.values * w.asDiagonal() * K;
      rep.realized_snr = std::isinf(sc.snr)
                             ? std::numeric_limits<double>::infinity()
                             : realized_snr_of(signal, y.values - signal, x.grid);
    }

    {  // prediction error on a fresh test set
      const FunctionalSample xt = gen_covariates(sc.test_n, sc.G, sub_seed(sc.seed, r, 4));
      const FunctionalSample yt = gen_responses(xt, truth, sc.snr, sub_seed(sc.seed, r, 5));
      const FunctionalSample yhat = predict(kernel, xt, yt.grid);
      rep.prediction_error = (yt.values - yhat.values).squaredNorm() / sc.test_n;
    }

    if (truth.zero_area > 0.0) {  // area of the true zero set covered by exact zeros
      double covered = 0.0;
      const int sub = 20;
      for (const auto& [m, l] : best.zero_set.rectangles) {
        const double t0 = best.zero_set.knots_t[m - 1];
        const double t1 = best.zero_set.knots_t[m];
        const double s0 = best.zero_set.knots_s[l - 1];
        const double s1 = best.zero_set.knots_s[l];
        int inside = 0;
        for (int a = 0; a < sub; ++a) {
          for (int b = 0; b < sub; ++b) {
            const double t = t0 + (t1 - t0) * (a + 0.5) / sub;
            const double s = s0 + (s1 - s0) * (b + 0.5) / sub;
            if (truth.in_zero_region(t, s)) ++inside;
          }
        }
        covered += (t1 - t0) * (s1 - s0) * inside / (sub * sub);
      }
      rep.zero_coverage = covered / truth.zero_area;
    } else {
      rep.zero_coverage = std::numeric_limits<double>::quiet_NaN();
    }
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace lsfr
