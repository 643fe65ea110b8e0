#include "lsfr/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lsfr {

namespace {

constexpr double kDefaultTolScale = 1e-8;
constexpr double kDefaultZeroThresholdScale = 1e-10;
// Groups that stall below this fraction of the initial norm scale are snapped
// to exact zero at exit, provided the objective does not increase.
constexpr double kSnapScale = 1e-6;
// A block this far below the prune threshold is in terminal collapse: its MM
// weight 1/(2||D_b psi||) would keep exploding and crush the coefficients it
// shares with healthy neighbors toward underflow. All its members are dropped,
// mirroring the H_0^-1 = 0 coordinate dropout of the SMW partition.
constexpr double kHardKillFactor = 1e-8;

Eigen::VectorXd group_norms_masked(const Eigen::VectorXd& psi, const GroupStructure& s,
                                   const std::vector<unsigned char>* alive) {
  Eigen::VectorXd norms(s.num_groups());
  for (int b = 0; b < s.num_groups(); ++b) {
    double acc = 0.0;
    for (int j : s.groups[b]) {
      if (alive && !(*alive)[j]) continue;
      const double v = s.weights[j] * psi[j];
      acc += v * v;
    }
    norms[b] = std::sqrt(acc);
  }
  return norms;
}

double objective_from_parts(const Eigen::VectorXd& psi, const DesignProblem& p,
                            double lambda, const Eigen::VectorXd& norms) {
  const Eigen::VectorXd r = p.y - p.Z * psi;
  return 0.5 * r.squaredNorm() + lambda * norms.sum();
}

std::vector<int> active_indices(const std::vector<unsigned char>& mask) {
  std::vector<int> idx;
  idx.reserve(mask.size());
  for (int j = 0; j < static_cast<int>(mask.size()); ++j) {
    if (mask[j]) idx.push_back(j);
  }
  return idx;
}

/// Ridge solution (Z'Z + lambda diag(w))^-1 Z'y on the active set, scattered
/// into a full-length vector.
Eigen::VectorXd solve_active(const DesignProblem& p, double lambda,
                             const Eigen::VectorXd& w,
                             const std::vector<int>& act, SolverConfig::Route route) {
  const int na = static_cast<int>(act.size());
  const Eigen::Index nG = p.Z.rows();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(p.Z.cols());
  if (na == 0) return psi;

  const bool use_smw = route == SolverConfig::Route::kSmw ||
                       (route == SolverConfig::Route::kAuto && na > nG);
  Eigen::VectorXd rhs(na);
  for (int a = 0; a < na; ++a) rhs[a] = p.Zty[act[a]];

  Eigen::VectorXd sol;
  if (use_smw) {
    Eigen::MatrixXd Za(nG, na);
    Eigen::VectorXd wa(na);
    for (int a = 0; a < na; ++a) {
      Za.col(a) = p.Z.col(act[a]);
      wa[a] = w[act[a]];
    }
    sol = smw_apply(Za, wa, lambda, rhs);
  } else {
    Eigen::MatrixXd A(na, na);
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < na; ++b) A(a, b) = p.ZtZ(act[a], act[b]);
      A(a, a) += lambda * w[act[a]];
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success) {
      throw std::runtime_error("ridge_update: LDLT factorization failed");
    }
    sol = ldlt.solve(rhs);
  }
  for (int a = 0; a < na; ++a) psi[act[a]] = sol[a];
  return psi;
}

Eigen::VectorXd ridge_init(const DesignProblem& p, const GroupStructure& s, double lambda) {
  const Eigen::VectorXd dtilde = penalty_diagonal(s);
  Eigen::MatrixXd A = p.ZtZ;
  A.diagonal() += lambda * dtilde;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("fit: initialization solve failed");
  }
  return ldlt.solve(p.Zty);
}

}  // namespace

int MMState::num_active_coords() const {
  int n = 0;
  for (unsigned char a : coord_active) n += a;
  return n;
}

double objective(const Eigen::VectorXd& psi, const DesignProblem& problem,
                 double lambda, const GroupStructure& structure) {
  if (!(lambda > 0.0)) throw std::invalid_argument("objective: lambda must be > 0");
  if (psi.size() != problem.Z.cols()) {
    throw std::invalid_argument("objective: psi has length " + std::to_string(psi.size()) +
                                ", expected " + std::to_string(problem.Z.cols()));
  }
  return objective_from_parts(psi, problem, lambda, group_norms(psi, structure));
}

double surrogate(const Eigen::VectorXd& psi, const MMState& state,
                 const DesignProblem& problem, double lambda) {
  if (psi.size() != problem.Z.cols()) {
    throw std::invalid_argument("surrogate: psi dimension mismatch");
  }
  for (size_t b = 0; b < state.group_active.size(); ++b) {
    if (state.group_active[b] && !(state.db[static_cast<Eigen::Index>(b)] > 0.0 &&
                                   std::isfinite(state.db[static_cast<Eigen::Index>(b)]))) {
      throw std::invalid_argument("surrogate: state has a zero-norm active group; prune first");
    }
  }
  const Eigen::VectorXd r = problem.y - problem.Z * psi;
  double quad = 0.0;
  // sum_b db ||D_b psi||^2 over active groups, computed through the effective
  // diagonal: sum_b db D_b^2 = ridge / 2.
  for (int j = 0; j < psi.size(); ++j) {
    quad += 0.5 * state.ridge[j] * psi[j] * psi[j];
  }
  return 0.5 * r.squaredNorm() + lambda * state.d0 + lambda * quad;
}

MMState mm_weights_masked(const Eigen::VectorXd& psi_k, const GroupStructure& structure,
                          const std::vector<unsigned char>& coord_active) {
  const int ml = structure.num_coeffs();
  if (psi_k.size() != ml) throw std::invalid_argument("mm_weights: psi dimension mismatch");
  MMState st;
  st.psi = psi_k;
  st.coord_active = coord_active;
  st.group_active.assign(structure.num_groups(), 0);
  st.db = Eigen::VectorXd::Zero(structure.num_groups());
  st.ridge = Eigen::VectorXd::Zero(ml);
  const Eigen::VectorXd norms = group_norms_masked(psi_k, structure, &coord_active);
  for (int b = 0; b < structure.num_groups(); ++b) {
    bool any_alive = false;
    for (int j : structure.groups[b]) {
      if (coord_active[j]) { any_alive = true; break; }
    }
    if (!any_alive) continue;
    if (norms[b] <= 0.0) {
      throw std::invalid_argument("mm_weights: active group " + std::to_string(b + 1) +
                                  " has zero norm; prune first");
    }
    st.group_active[b] = 1;
    st.db[b] = 1.0 / (2.0 * norms[b]);
    st.d0 += norms[b] - norms[b] * norms[b] * st.db[b];
    for (int j : structure.groups[b]) {
      if (!coord_active[j]) continue;
      const double c2 = structure.weights[j] * structure.weights[j];
      st.ridge[j] += c2 / norms[b];
    }
  }
  st.h = (st.ridge * 0.5).cwiseSqrt();
  return st;
}

MMState mm_weights(const Eigen::VectorXd& psi_k, const GroupStructure& structure,
                   double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("mm_weights: lambda must be > 0");
  std::vector<unsigned char> all(structure.num_coeffs(), 1);
  return mm_weights_masked(psi_k, structure, all);
}

Eigen::VectorXd smw_apply(const Eigen::MatrixXd& Z, const Eigen::VectorXd& w,
                          double lambda, const Eigen::VectorXd& rhs) {
  if (!(lambda > 0.0)) throw std::invalid_argument("smw_apply: lambda must be > 0");
  if (w.size() != Z.cols() || rhs.size() != Z.cols()) {
    throw std::invalid_argument("smw_apply: dimension mismatch");
  }
  if ((w.array() <= 0.0).any()) {
    throw std::invalid_argument("smw_apply: weight diagonal must be strictly positive");
  }
  const Eigen::VectorXd winv = w.cwiseInverse();
  const Eigen::VectorXd t0 = winv.cwiseProduct(rhs);
  const Eigen::MatrixXd J = Z * winv.asDiagonal() * Z.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(J);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("smw_apply: spectral decomposition of Z H^-1 Z' failed (nG=" +
                             std::to_string(Z.rows()) + ")");
  }
  const Eigen::VectorXd u = eig.eigenvectors().transpose() * (Z * t0);
  const Eigen::VectorXd bu =
      lambda * (u.array() / (lambda + eig.eigenvalues().array())).matrix();
  const Eigen::VectorXd corr = winv.cwiseProduct(Z.transpose() * (eig.eigenvectors() * bu));
  return t0 / lambda - corr / (lambda * lambda);
}

Eigen::VectorXd ridge_update(const DesignProblem& problem, double lambda,
                             const MMState& state, SolverConfig::Route route) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge_update: lambda must be > 0");
  return solve_active(problem, lambda, state.ridge, active_indices(state.coord_active),
                      route);
}

PruneResult prune(const Eigen::VectorXd& psi, const GroupStructure& structure,
                  double zero_threshold,
                  const std::vector<unsigned char>* current_alive) {
  const int ml = structure.num_coeffs();
  const int B = structure.num_overlap();
  const double hard_kill = zero_threshold * kHardKillFactor;
  std::vector<unsigned char> alive =
      current_alive ? *current_alive : std::vector<unsigned char>(ml, 1);
  PruneResult r;
  // Iterate to a fixed point: the hard-kill of a collapsed block can empty a
  // neighbor, which must then drop out as well.
  while (true) {
    const Eigen::VectorXd norms = group_norms_masked(psi, structure, &alive);
    r.block_above.assign(B, 0);
    std::vector<unsigned char> next(ml, 0);
    for (int b = 0; b < B; ++b) {
      if (norms[b] > zero_threshold) {
        r.block_above[b] = 1;
        for (int j : structure.groups[b]) next[j] = 1;
      }
    }
    for (int b = 0; b < B; ++b) {
      if (norms[b] <= hard_kill) {
        bool has_alive = false;
        for (int j : structure.groups[b]) {
          if (alive[j]) { has_alive = true; break; }
        }
        if (has_alive) {
          for (int j : structure.groups[b]) next[j] = 0;
        }
      }
    }
    for (int j = 0; j < ml; ++j) next[j] &= alive[j];
    if (next == alive) break;
    alive = std::move(next);
  }
  r.coord_alive = std::move(alive);
  for (int j = 0; j < ml; ++j) r.num_alive += r.coord_alive[j];
  if (current_alive) {
    for (int j = 0; j < ml; ++j) {
      if ((*current_alive)[j] && !r.coord_alive[j]) { r.changed = true; break; }
    }
  } else {
    r.changed = r.num_alive < ml;
  }
  return r;
}

double lambda_max(const DesignProblem& problem, const GroupStructure& structure) {
  if (problem.y.isZero(0.0)) return 0.0;
  const Eigen::VectorXd dtilde = penalty_diagonal(structure);
  return (problem.Zty.cwiseAbs().cwiseQuotient(dtilde)).maxCoeff();
}

FitResult fit(const DesignProblem& problem, const GroupStructure& structure,
              double lambda, const SolverConfig& config,
              const Eigen::VectorXd* warm_start) {
  if (!(lambda > 0.0)) throw std::invalid_argument("fit: lambda must be > 0");
  if (config.max_iters < 1) throw std::invalid_argument("fit: max_iters must be >= 1");
  const int ml = structure.num_coeffs();
  if (problem.Z.cols() != ml) {
    throw std::invalid_argument("fit: problem and group structure disagree on ML");
  }

  Eigen::VectorXd psi;
  if (warm_start) {
    if (warm_start->size() != ml) throw std::invalid_argument("fit: warm start dimension mismatch");
    psi = *warm_start;
    if ((psi.array() == 0.0).any()) {
      const Eigen::VectorXd filler = ridge_init(problem, structure, lambda);
      for (int j = 0; j < ml; ++j) {
        if (psi[j] == 0.0) psi[j] = filler[j];
      }
    }
  } else {
    psi = ridge_init(problem, structure, lambda);
  }

  FitResult res;
  res.lambda = lambda;

  Eigen::VectorXd norms = group_norms(psi, structure);
  const double norm_scale = norms.maxCoeff();
  const double zthr = config.zero_threshold >= 0.0
                          ? config.zero_threshold
                          : kDefaultZeroThresholdScale * norm_scale;
  double ell = objective_from_parts(psi, problem, lambda, norms);
  res.objective_trace.push_back(ell);
  const double tol =
      config.tolerance > 0.0 ? config.tolerance : kDefaultTolScale * (1.0 + std::abs(ell));

  std::vector<unsigned char> alive(ml, 1);
  for (int it = 0; it < config.max_iters; ++it) {
    const PruneResult pr = prune(psi, structure, zthr, &alive);
    alive = pr.coord_alive;
    for (int j = 0; j < ml; ++j) {
      if (!alive[j]) psi[j] = 0.0;
    }
    if (pr.num_alive == 0) {
      psi.setZero();
      res.objective_trace.push_back(
          objective_from_parts(psi, problem, lambda, group_norms(psi, structure)));
      res.converged = true;
      break;
    }

    const MMState state = mm_weights_masked(psi, structure, alive);
    psi = solve_active(problem, lambda, state.ridge, active_indices(alive), config.route);

    const Eigen::VectorXd new_norms = group_norms(psi, structure);
    const double ell_new = objective_from_parts(psi, problem, lambda, new_norms);
    res.objective_trace.push_back(ell_new);

    // A still-declared-active group halving per iteration is collapsing toward
    // the prune threshold; keep iterating until it crosses even if the
    // objective change is already below tolerance. Groups already below the
    // threshold are left to the prune and exit snap.
    bool collapsing = false;
    for (int b = 0; b < structure.num_groups(); ++b) {
      if (norms[b] > 0.0 && new_norms[b] > zthr && new_norms[b] < 0.5 * norms[b]) {
        collapsing = true;
        break;
      }
    }
    norms = new_norms;
    const bool small_change = std::abs(ell_new - ell) <= tol;
    ell = ell_new;
    if (small_change && !collapsing && !pr.changed) {
      res.converged = true;
      break;
    }
  }
  res.iterations = static_cast<int>(res.objective_trace.size()) - 1;

  // Slowly collapsing groups can stall above the prune threshold once the
  // objective change falls below tolerance; snap them to exact zero when that
  // is a (weak) descent step.
  const double snap_thr = std::max(zthr, kSnapScale * norm_scale);
  const PruneResult snap = prune(psi, structure, snap_thr, &alive);
  if (snap.changed) {
    Eigen::VectorXd snapped = psi;
    for (int j = 0; j < ml; ++j) {
      if (!snap.coord_alive[j]) snapped[j] = 0.0;
    }
    const double ell_snapped =
        objective_from_parts(snapped, problem, lambda, group_norms(snapped, structure));
    if (ell_snapped <= ell) {
      psi = std::move(snapped);
      alive = snap.coord_alive;
      ell = ell_snapped;
      res.objective_trace.push_back(ell_snapped);
    }
  }

  const PruneResult final_pr = prune(psi, structure, zthr, &alive);
  for (int j = 0; j < ml; ++j) {
    if (!final_pr.coord_alive[j]) psi[j] = 0.0;
  }
  res.psi_hat = psi;

  const Eigen::VectorXd final_norms = group_norms(psi, structure);
  for (int b = 0; b < structure.num_groups(); ++b) {
    if (final_norms[b] > 0.0) res.active_groups.push_back(b);
  }
  const Eigen::Map<const Eigen::MatrixXd> Psi(psi.data(), structure.M, structure.L);
  res.zero_set = zero_rectangles(Psi, structure, 0.0, problem.basis_t, problem.basis_s);
  return res;
}

LambdaPath fit_path(const DesignProblem& problem, const GroupStructure& structure,
                    const SolverConfig& config, const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("fit_path: empty lambda grid");
  for (size_t i = 1; i < lambdas.size(); ++i) {
    if (!(lambdas[i] < lambdas[i - 1])) {
      throw std::invalid_argument("fit_path: lambdas must be strictly decreasing");
    }
  }
  LambdaPath path;
  path.lambdas = lambdas;
  path.fits.reserve(lambdas.size());
  const Eigen::VectorXd* warm = nullptr;
  for (size_t i = 0; i < lambdas.size(); ++i) {
    try {
      path.fits.push_back(fit(problem, structure, lambdas[i], config, warm));
    } catch (const std::exception& e) {
      throw std::runtime_error("fit_path: fit at lambda=" + std::to_string(lambdas[i]) +
                               " (index " + std::to_string(i) + ") failed: " + e.what());
    }
    warm = &path.fits.back().psi_hat;
  }
  return path;
}

LambdaPath fit_path(const DesignProblem& problem, const GroupStructure& structure,
                    const SolverConfig& config, int grid_size, double min_ratio) {
  if (grid_size < 1) throw std::invalid_argument("fit_path: grid_size must be >= 1");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) {
    throw std::invalid_argument("fit_path: min_ratio must be in (0, 1)");
  }
  const double lmax = lambda_max(problem, structure);
  if (lmax <= 0.0) {
    throw std::invalid_argument("fit_path: degenerate problem, lambda_max is 0 (y = 0)");
  }
  std::vector<double> lambdas(grid_size);
  lambdas[0] = lmax;
  const double logr = std::log(min_ratio);
  for (int i = 1; i < grid_size; ++i) {
    lambdas[i] = lmax * std::exp(logr * i / (grid_size - 1));
  }
  return fit_path(problem, structure, config, lambdas);
}

int select_lambda(LambdaPath& path, const DesignProblem& problem,
                  const FunctionalSample& x_val, const FunctionalSample& y_val) {
  if (x_val.n() == 0 || y_val.n() == 0) {
    throw std::invalid_argument("select_lambda: empty validation set");
  }
  if (x_val.n() != y_val.n()) {
    throw std::invalid_argument("select_lambda: validation x and y sizes differ");
  }
  if (x_val.grid.points != problem.grid_t.points ||
      y_val.grid.points != problem.grid_s.points) {
    throw std::invalid_argument("select_lambda: validation grids do not match training grids");
  }
  const int M = problem.basis_t.size();
  const int L = problem.basis_s.size();
  path.selection_score.assign(path.fits.size(), 0.0);
  int best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < path.fits.size(); ++i) {
    TensorKernel k{Eigen::Map<const Eigen::MatrixXd>(path.fits[i].psi_hat.data(), M, L),
                   problem.basis_t, problem.basis_s, problem.x_mean, problem.y_mean};
    const FunctionalSample yhat = predict(k, x_val, problem.grid_s);
    const double score = (y_val.values - yhat.values).squaredNorm();
    path.selection_score[i] = score;
    if (score < best_score) {  // strict: ties stay at the larger lambda
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  path.selected = best;
  return best;
}

CvSelection cv_select_lambda(const FunctionalSample& x, const FunctionalSample& y,
                             const BSplineBasis& basis_t, const BSplineBasis& basis_s,
                             const GroupStructure& structure, const SolverConfig& config,
                             int grid_size, double min_ratio, int num_folds) {
  const int n = x.n();
  if (num_folds < 2 || num_folds > n) {
    throw std::invalid_argument("cv_select_lambda: need 2 <= folds <= n");
  }
  const DesignProblem full = build_design(x, y, basis_t, basis_s);
  const double lmax = lambda_max(full, structure);
  if (lmax <= 0.0) throw std::invalid_argument("cv_select_lambda: degenerate problem (y = 0)");
  if (grid_size < 2) throw std::invalid_argument("cv_select_lambda: grid_size must be >= 2");
  std::vector<double> lambdas(grid_size);
  const double logr = std::log(min_ratio);
  for (int i = 0; i < grid_size; ++i) {
    lambdas[i] = lmax * std::exp(logr * i / (grid_size - 1));
  }

  CvSelection sel;
  sel.lambdas = lambdas;
  sel.scores.assign(lambdas.size(), 0.0);
  for (int f = 0; f < num_folds; ++f) {
    const int lo = static_cast<int>(static_cast<long long>(f) * n / num_folds);
    const int hi = static_cast<int>(static_cast<long long>(f + 1) * n / num_folds);
    const int held = hi - lo;
    const int kept = n - held;
    Eigen::MatrixXd xtr(kept, x.num_points()), ytr(kept, y.num_points());
    Eigen::MatrixXd xva(held, x.num_points()), yva(held, y.num_points());
    int r = 0;
    for (int i = 0; i < n; ++i) {
      if (i >= lo && i < hi) continue;
      xtr.row(r) = x.values.row(i);
      ytr.row(r) = y.values.row(i);
      ++r;
    }
    xva = x.values.middleRows(lo, held);
    yva = y.values.middleRows(lo, held);
    const FunctionalSample xs{xtr, x.grid, std::nullopt};
    const FunctionalSample ys{ytr, y.grid, std::nullopt};
    const DesignProblem p = build_design(xs, ys, basis_t, basis_s);
    LambdaPath path = fit_path(p, structure, config, lambdas);
    FunctionalSample xv{xva, x.grid, std::nullopt};
    FunctionalSample yv{yva, y.grid, std::nullopt};
    select_lambda(path, p, xv, yv);
    for (size_t i = 0; i < lambdas.size(); ++i) {
      sel.scores[i] += path.selection_score[i];
    }
  }
  sel.selected = 0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sel.scores.size(); ++i) {
    if (sel.scores[i] < best) {
      best = sel.scores[i];
      sel.selected = static_cast<int>(i);
    }
  }
  return sel;
}

}  // namespace lsfr
