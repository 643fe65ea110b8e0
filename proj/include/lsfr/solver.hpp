#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lsfr/groups.hpp"
#include "lsfr/model.hpp"

namespace lsfr {

struct SolverConfig {
  enum class Route { kDirect, kSmw, kAuto };

  /// Absolute stopping tolerance on the objective change; negative selects
  /// the default 1e-8 * (1 + |l(psi0)|).
  double tolerance = -1.0;
  int max_iters = 500;
  /// Group-norm level at which a group is pruned to exact zero; negative
  /// selects the default 1e-10 * (max group norm of the initial iterate).
  double zero_threshold = -1.0;
  Route route = Route::kAuto;
};

/// MM expansion state at an iterate psi^(k).
struct MMState {
  Eigen::VectorXd psi;  ///< expansion point, exact zeros on pruned coordinates
  /// Surrogate constant sum_b (||D_b psi|| - ||D_b psi||^2 / (2||D_b psi||))
  /// over active groups; the surrogate applies it scaled by lambda.
  double d0 = 0.0;
  Eigen::VectorXd db;  ///< per-group 1/(2 ||D_b psi||); 0 for inactive groups
  /// Diagonal of H = (sum_b db D_b^2)^(1/2).
  Eigen::VectorXd h;
  /// Effective generalized-ridge diagonal 2 h^2 = sum_b D_b^2 / ||D_b psi||;
  /// the update (Z'Z + lambda diag(ridge))^-1 Z'y is the exact minimizer of
  /// the surrogate.
  Eigen::VectorXd ridge;
  std::vector<unsigned char> coord_active;
  std::vector<unsigned char> group_active;

  int num_active_coords() const;
};

struct FitResult {
  Eigen::VectorXd psi_hat;
  std::vector<double> objective_trace;  ///< nonincreasing, one entry per iterate
  int iterations = 0;
  bool converged = false;
  std::vector<int> active_groups;  ///< 0-based indices of groups with nonzero norm
  RectangleSet zero_set;           ///< exactly-zero blocks of the pruned solution
  double lambda = 0.0;
};

struct LambdaPath {
  std::vector<double> lambdas;  ///< strictly decreasing
  std::vector<FitResult> fits;
  std::vector<double> selection_score;  ///< validation prediction error per lambda
  int selected = -1;
};

/// l(psi) = 0.5 ||y - Z psi||^2 + lambda sum_b ||D_b psi||_2.
double objective(const Eigen::VectorXd& psi, const DesignProblem& problem,
                 double lambda, const GroupStructure& structure);

/// Majorizing surrogate Q(psi | state.psi); equals the objective at the
/// expansion point and dominates it elsewhere.
double surrogate(const Eigen::VectorXd& psi, const MMState& state,
                 const DesignProblem& problem, double lambda);

/// MM constants at psi_k with every group active; throws if any group norm is
/// zero (prune first).
MMState mm_weights(const Eigen::VectorXd& psi_k, const GroupStructure& structure,
                   double lambda);

/// Same, with pruned coordinates excluded; groups whose members are all pruned
/// become inactive instead of erroring.
MMState mm_weights_masked(const Eigen::VectorXd& psi_k, const GroupStructure& structure,
                          const std::vector<unsigned char>& coord_active);

/// Generalized-ridge update restricted to active coordinates; pruned
/// coordinates stay exactly zero. Route kAuto solves directly when the active
/// count is at most nG and through the SMW identity otherwise.
Eigen::VectorXd ridge_update(const DesignProblem& problem, double lambda,
                             const MMState& state,
                             SolverConfig::Route route = SolverConfig::Route::kAuto);

/// (Z'Z + lambda diag(w))^-1 rhs via the Sherman-Morrison-Woodbury identity and
/// the spectral decomposition of Z diag(1/w) Z'. w must be strictly positive.
Eigen::VectorXd smw_apply(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w,
                          double lambda, const Eigen::VectorXd& rhs);

struct PruneResult {
  std::vector<unsigned char> coord_alive;
  std::vector<unsigned char> block_above;  ///< overlap blocks above threshold
  int num_alive = 0;
  bool changed = false;
};

/// A coordinate survives iff some overlap block containing it has group norm
/// above the threshold; survivors are intersected with current_alive so pruned
/// coordinates never re-enter within a fit.
PruneResult prune(const Eigen::VectorXd& psi, const GroupStructure& structure,
                  double zero_threshold,
                  const std::vector<unsigned char>* current_alive = nullptr);

/// Smallest lambda at which the solution is entirely zero:
/// max_j |Z_j' y| / Dtilde_jj with Dtilde = sum_b D_b^2. Returns 0 for y = 0.
double lambda_max(const DesignProblem& problem, const GroupStructure& structure);

/// MM fit at a fixed lambda. A warm start has its exact-zero coordinates
/// restored from the current-lambda ridge initialization so groups can
/// re-enter across path steps.
FitResult fit(const DesignProblem& problem, const GroupStructure& structure,
              double lambda, const SolverConfig& config = {},
              const Eigen::VectorXd* warm_start = nullptr);

/// Log-spaced path from lambda_max down to min_ratio * lambda_max, each fit
/// warm-started from the previous one.
LambdaPath fit_path(const DesignProblem& problem, const GroupStructure& structure,
                    const SolverConfig& config, int grid_size, double min_ratio);

/// Same over an explicit (strictly decreasing) lambda grid.
LambdaPath fit_path(const DesignProblem& problem, const GroupStructure& structure,
                    const SolverConfig& config, const std::vector<double>& lambdas);

/// Score every fit by the validation prediction error
/// sum_i sum_g (y_i(s_g) - yhat_i(s_g))^2, fill path.selection_score and
/// path.selected, and return the selected index. Ties break toward larger
/// lambda.
int select_lambda(LambdaPath& path, const DesignProblem& problem,
                  const FunctionalSample& x_val, const FunctionalSample& y_val);

struct CvSelection {
  std::vector<double> lambdas;
  std::vector<double> scores;  ///< summed validation error over folds
  int selected = -1;
};

/// K-fold variant: one shared lambda grid from the full-data lambda_max, folds
/// are contiguous index blocks, scores summed over folds.
CvSelection cv_select_lambda(const FunctionalSample& x, const FunctionalSample& y,
                             const BSplineBasis& basis_t, const BSplineBasis& basis_s,
                             const GroupStructure& structure, const SolverConfig& config,
                             int grid_size, double min_ratio, int num_folds);

}  // namespace lsfr
