#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lsfr/model.hpp"
#include "lsfr/solver.hpp"

namespace lsfr {

struct SimulationScenario {
  int kernel_id = 2;
  int n = 50;
  int G = 100;
  double snr = 4.0;
  int M = 20;
  int L = 20;
  int order = 4;
  std::uint64_t seed = 1;
  int validation_n = 200;
  int test_n = 1000;
  int path_size = 50;
  double min_ratio = 1e-4;
};

/// Ground-truth kernel with its exact zero geometry.
struct TrueKernel {
  std::function<double(double, double)> evaluator;
  std::function<bool(double, double)> in_zero_region;
  double zero_area = 0.0;  ///< mu(F0), analytic
  std::string description;
};

struct EvaluationReport {
  int replicate = 0;
  double ise0 = 0.0;  ///< NaN when the true zero region has zero area
  double ise1 = 0.0;
  double ise = 0.0;
  double prediction_error = 0.0;  ///< mean over test curves of the summed squared error
  double realized_snr = 0.0;
  double zero_coverage = 0.0;  ///< fraction of the true zero area covered by exact-zero rectangles
  double selected_lambda = 0.0;
  int selected_index = -1;
};

/// Curves drawn from a cubic B-spline basis with 15 evenly spaced interior
/// knots on [0,1], coefficients i.i.d. standard normal.
FunctionalSample gen_covariates(int n, int G, std::uint64_t seed);

/// The four sparsity geometries: (1) diagonal band, (2) historical (zero for
/// t > s), (3) two disjoint rectangles, (4) no sparsity. Closed forms are
/// documented in the README.
TrueKernel true_kernel(int kernel_id);

/// y_i = integral of psi x_i + e_i with white Gaussian noise at grid points,
/// variance calibrated per replicate so the realized signal-to-noise ratio
/// equals snr exactly. An infinite snr yields noise-free responses.
FunctionalSample gen_responses(const FunctionalSample& x, const TrueKernel& kernel,
                               double snr, std::uint64_t seed);

/// ISE_0 / ISE_1 over the true zero region and its complement (tensor
/// trapezoid on a 200 x 200 grid), combined as ise0 * mu(F0) + ise1 * mu(F0^c).
/// Only the ise fields of the report are filled.
EvaluationReport ise_metrics(const TensorKernel& estimate, const TrueKernel& truth);

/// Full replication protocol: generate train/validation data, fit the lambda
/// path, select by validation prediction error, evaluate against the truth.
/// Deterministic given the scenario seed.
std::vector<EvaluationReport> run_scenario(const SimulationScenario& scenario,
                                           int replicates);

}  // namespace lsfr
