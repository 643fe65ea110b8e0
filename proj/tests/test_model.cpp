#include <doctest.h>

#include <cmath>
#include <random>

#include "lsfr/model.hpp"

using namespace lsfr;

namespace {

FunctionalSample random_sample(int n, int G, unsigned seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::MatrixXd v(n, G);
  for (int i = 0; i < n; ++i) {
    for (int g = 0; g < G; ++g) v(i, g) = gauss(rng);
  }
  return {std::move(v), make_grid({0.0, 1.0}, G), std::nullopt};
}

}  // namespace

TEST_CASE("center") {
  FunctionalSample two = random_sample(1, 12, 3);
  two.values.conservativeResize(2, Eigen::NoChange);
  two.values.row(1) = two.values.row(0);
  const FunctionalSample c = center(two);
  CHECK(c.values.cwiseAbs().maxCoeff() == doctest::Approx(0.0).epsilon(1e-15));
  REQUIRE(c.mean_curve.has_value());
  CHECK((*c.mean_curve - two.values.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-15);

  FunctionalSample anti = random_sample(2, 12, 4);
  anti.values.row(1) = -anti.values.row(0);
  const FunctionalSample ca = center(anti);
  CHECK((ca.values - anti.values).cwiseAbs().maxCoeff() < 1e-14);

  const FunctionalSample r = center(random_sample(9, 30, 5));
  CHECK(r.values.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(center(random_sample(1, 10, 6)), std::invalid_argument);
}

TEST_CASE("build_design matches the explicit double sum") {
  // n=1, G=2, M=L=2 with order-1 (indicator) bases
  const BSplineBasis b = make_basis({0.0, 1.0}, 2, 1);
  FunctionalSample x = random_sample(1, 2, 7);
  FunctionalSample y = random_sample(1, 2, 8);
  const DesignProblem p = build_design(x, y, b, b);
  CHECK(p.Z.rows() == 2);
  CHECK(p.Z.cols() == 4);
  const Grid& g = x.grid;
  for (int gi = 0; gi < 2; ++gi) {      // response grid point (row block)
    for (int l = 0; l < 2; ++l) {       // s-basis index (column block)
      for (int m = 0; m < 2; ++m) {
        double acc = 0.0;
        for (int h = 0; h < 2; ++h) {
          acc += x.values(0, h) * g.weights[h] * b.at(g.points[h])[m];
        }
        acc *= b.at(y.grid.points[gi])[l];
        CHECK(p.Z(gi, l * 2 + m) == doctest::Approx(acc).epsilon(1e-14));
      }
    }
  }
  // y = vec(Y) column-major
  CHECK(p.y[0] == y.values(0, 0));
  CHECK(p.y[1] == y.values(0, 1));
}

TEST_CASE("build_design zero covariate and dimensions") {
  const BSplineBasis bt = make_basis({0.0, 1.0}, 20, 4);
  const BSplineBasis bs = make_basis({0.0, 1.0}, 20, 4);
  FunctionalSample x = random_sample(50, 100, 9);
  FunctionalSample y = random_sample(50, 100, 10);

  FunctionalSample x0 = x;
  x0.values.setZero();
  CHECK(build_design(x0, y, bt, bs).Z.cwiseAbs().maxCoeff() == 0.0);

  const DesignProblem p = build_design(x, y, bt, bs);
  CHECK(p.Z.rows() == 5000);
  CHECK(p.Z.cols() == 400);

  FunctionalSample ybad = random_sample(49, 100, 11);
  CHECK_THROWS_AS(build_design(x, ybad, bt, bs), std::invalid_argument);
  const BSplineBasis small = make_basis({0.2, 0.8}, 6, 3);
  CHECK_THROWS_AS(build_design(x, y, small, bs), std::invalid_argument);
}

TEST_CASE("Kronecker consistency of Z") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 3, G = 9, M = 5, L = 4;
  const BSplineBasis bt = make_basis({0.0, 1.0}, M, 2);
  const BSplineBasis bs = make_basis({0.0, 1.0}, L, 2);
  FunctionalSample x = random_sample(n, G, 14);
  FunctionalSample y = random_sample(n, G, 15);
  const DesignProblem p = build_design(x, y, bt, bs);

  const Eigen::MatrixXd Phi = eval_basis(bt, x.grid);
  const Eigen::MatrixXd Theta = eval_basis(bs, y.grid);
  const Eigen::VectorXd w =
      Eigen::Map<const Eigen::VectorXd>(x.grid.weights.data(), G);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd Psi(M, L);
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < L; ++j) Psi(i, j) = gauss(rng);
    }
    const Eigen::VectorXd lhs =
        p.Z * Eigen::Map<const Eigen::VectorXd>(Psi.data(), M * L);
    const Eigen::MatrixXd Yhat = x.values * w.asDiagonal() * Phi.transpose() * Psi * Theta;
    const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(Yhat.data(), n * G);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <
          1e-12 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("predict") {
  const int M = 6, L = 5, d = 3, G = 40;
  const BSplineBasis bt = make_basis({0.0, 1.0}, M, d);
  const BSplineBasis bs = make_basis({0.0, 1.0}, L, d);
  const Grid grid = make_grid({0.0, 1.0}, G);

  SUBCASE("zero kernel gives the stored mean (or zero)") {
    TensorKernel k{Eigen::MatrixXd::Zero(M, L), bt, bs, std::nullopt, std::nullopt};
    const FunctionalSample x = random_sample(4, G, 21);
    CHECK(predict(k, x, grid).values.cwiseAbs().maxCoeff() == 0.0);
    Eigen::VectorXd mean = Eigen::VectorXd::LinSpaced(G, -1.0, 2.0);
    TensorKernel kc{Eigen::MatrixXd::Zero(M, L), bt, bs, Eigen::VectorXd::Zero(G), mean};
    const FunctionalSample pr = predict(kc, x, grid);
    for (int i = 0; i < 4; ++i) {
      CHECK((pr.values.row(i).transpose() - mean).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  SUBCASE("basis-function covariate reproduces the quadrature Gram value") {
    const int mprime = 2, m = 3, l = 1;
    const Eigen::MatrixXd Phi = eval_basis(bt, grid);
    FunctionalSample x{Phi.row(mprime), grid, std::nullopt};
    Eigen::MatrixXd Psi = Eigen::MatrixXd::Zero(M, L);
    Psi(m, l) = 1.0;
    TensorKernel k{Psi, bt, bs, std::nullopt, std::nullopt};
    const FunctionalSample pr = predict(k, x, grid);
    double gram = 0.0;  // quadrature of phi_m phi_{m'}
    for (int h = 0; h < G; ++h) {
      gram += grid.weights[h] * Phi(m, h) * Phi(mprime, h);
    }
    const Eigen::MatrixXd Theta = eval_basis(bs, grid);
    for (int g = 0; g < G; ++g) {
      CHECK(pr.values(0, g) == doctest::Approx(gram * Theta(l, g)).epsilon(1e-13));
    }
  }

  SUBCASE("linearity on uncentered kernels") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd Psi(M, L);
    for (int i = 0; i < M; ++i) {
      for (int j = 0; j < L; ++j) Psi(i, j) = gauss(rng);
    }
    TensorKernel k{Psi, bt, bs, std::nullopt, std::nullopt};
    const FunctionalSample x1 = random_sample(3, G, 23);
    const FunctionalSample x2 = random_sample(3, G, 24);
    FunctionalSample combo = x1;
    combo.values = 2.5 * x1.values - 0.75 * x2.values;
    const Eigen::MatrixXd got = predict(k, combo, grid).values;
    const Eigen::MatrixXd want =
        2.5 * predict(k, x1, grid).values - 0.75 * predict(k, x2, grid).values;
    CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("predict is consistent with build_design residuals") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 5, G = 25, M = 6, L = 6, d = 3;
  const BSplineBasis bt = make_basis({0.0, 1.0}, M, d);
  const BSplineBasis bs = make_basis({0.0, 1.0}, L, d);
  const FunctionalSample x = random_sample(n, G, 32);
  const FunctionalSample y = random_sample(n, G, 33);
  const DesignProblem p = build_design(x, y, bt, bs);
  Eigen::VectorXd psi(M * L);
  for (int j = 0; j < M * L; ++j) psi[j] = gauss(rng);

  const double vec_res = (p.y - p.Z * psi).squaredNorm();
  TensorKernel k{Eigen::Map<const Eigen::MatrixXd>(psi.data(), M, L), bt, bs,
                 std::nullopt, std::nullopt};
  const double grid_res = (y.values - predict(k, x, y.grid).values).squaredNorm();
  CHECK(vec_res == doctest::Approx(grid_res).epsilon(1e-10));
}

TEST_CASE("build_ar_pairs") {
  const FunctionalSample series = random_sample(375, 20, 41);
  const auto [x, y] = build_ar_pairs(series);
  CHECK(x.n() == 374);
  CHECK(y.n() == 374);
  CHECK((x.values.row(0) - series.values.row(0)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((y.values.row(373) - series.values.row(374)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(x.grid.points == series.grid.points);
  CHECK(y.grid.points == series.grid.points);
  // lagged alignment: y_i = x_{i+1}
  for (int i = 0; i + 1 < 374; ++i) {
    CHECK((y.values.row(i) - x.values.row(i + 1)).cwiseAbs().maxCoeff() == 0.0);
  }

  const auto [x2, y2] = build_ar_pairs(random_sample(2, 20, 42));
  CHECK(x2.n() == 1);

  FunctionalSample constant = random_sample(1, 20, 43);
  constant.values.conservativeResize(6, Eigen::NoChange);
  for (int i = 1; i < 6; ++i) constant.values.row(i) = constant.values.row(0);
  const auto [xc, yc] = build_ar_pairs(constant);
  CHECK((xc.values - yc.values).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(build_ar_pairs(random_sample(1, 20, 44)), std::invalid_argument);
}

TEST_CASE("logh transform") {
  const int G = 101;
  const Grid grid = make_grid({0.0, 1.0}, G);

  SUBCASE("closed form for z = 0") {
    FunctionalSample z{Eigen::MatrixXd::Zero(1, G), grid, std::nullopt};
    const FunctionalSample y = logh_transform(z);
    for (int g = 0; g < G; ++g) {
      CHECK(y.values(0, g) ==
            doctest::Approx(1.0 - std::exp(-grid.points[g])).epsilon(1e-13));
    }
  }

  SUBCASE("monotone increasing output in [0, 1)") {
    std::mt19937_64 rng(51);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd v(3, G);
    for (int i = 0; i < 3; ++i) {
      for (int g = 0; g < G; ++g) v(i, g) = gauss(rng);
    }
    const FunctionalSample y = logh_transform({v, grid, std::nullopt});
    for (int i = 0; i < 3; ++i) {
      CHECK(y.values(i, 0) == 0.0);
      for (int g = 1; g < G; ++g) {
        CHECK(y.values(i, g) > y.values(i, g - 1));
        CHECK(y.values(i, g) < 1.0);
      }
    }
  }

  SUBCASE("round trip on a 100-point grid") {
    const Grid g100 = make_grid({0.0, 1.0}, 100);
    Eigen::MatrixXd v(3, 100);
    for (int g = 0; g < 100; ++g) {
      const double u = g100.points[g];
      v(0, g) = 0.0;
      v(1, g) = std::sin(2.0 * M_PI * u);
      v(2, g) = 0.25 * (1.0 - std::cos(2.0 * M_PI * u));
    }
    const FunctionalSample z{v, g100, std::nullopt};
    const FunctionalSample rt = logh_inverse(logh_transform(z));
    CHECK((rt.values - v).cwiseAbs().maxCoeff() < 1e-6);
  }

  SUBCASE("overflow guard and inverse preconditions") {
    Eigen::MatrixXd big = Eigen::MatrixXd::Constant(1, G, 800.0);
    CHECK_THROWS_AS(logh_transform({big, grid, std::nullopt}), std::invalid_argument);

    Eigen::MatrixXd notmono(1, G);
    for (int g = 0; g < G; ++g) notmono(0, g) = 0.5 + 0.3 * std::sin(10.0 * g);
    CHECK_THROWS_AS(logh_inverse({notmono, grid, std::nullopt}), std::invalid_argument);

    Eigen::MatrixXd out_of_range = Eigen::MatrixXd::Constant(1, G, 1.5);
    CHECK_THROWS_AS(logh_inverse({out_of_range, grid, std::nullopt}), std::invalid_argument);
  }
}
