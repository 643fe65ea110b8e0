// Command-line driver for locally sparse function-on-function regression:
// single fits, warm-started lambda paths with validation or k-fold selection,
// lag-1 autoregressive fits (optionally after the logH transform), and the
// synthetic-experiment pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsfr/io.hpp"
#include "lsfr/simulate.hpp"
#include "lsfr/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  int order = 4;
  int num_basis_t = 20;
  int num_basis_s = 20;
  double tol = -1.0;
  int max_iters = 500;
  double zero_threshold = -1.0;
  std::string route = "auto";
  std::string out_dir = ".";
  bool strict = false;
  int surface_grid = 101;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_basis = true) {
  if (with_basis) {
    cmd->add_option("--order", o.order, "B-spline order d")->capture_default_str();
    cmd->add_option("--num-basis-t", o.num_basis_t, "basis size M on the t axis")
        ->capture_default_str();
    cmd->add_option("--num-basis-s", o.num_basis_s, "basis size L on the s axis")
        ->capture_default_str();
    cmd->add_option("--tol", o.tol, "objective-change stopping tolerance (<0: auto)");
    cmd->add_option("--max-iters", o.max_iters, "MM iteration cap")->capture_default_str();
    cmd->add_option("--zero-threshold", o.zero_threshold,
                    "group-norm prune level (<0: auto)");
    cmd->add_option("--route", o.route, "ridge solve route")
        ->check(CLI::IsMember({"direct", "smw", "auto"}))
        ->capture_default_str();
    cmd->add_option("--surface-grid", o.surface_grid, "surface export resolution")
        ->capture_default_str();
  }
  cmd->add_option("--out", o.out_dir, "output directory")->capture_default_str();
  cmd->add_flag("--strict", o.strict, "fail (exit 2) on unconverged fits");
}

lsfr::SolverConfig solver_config(const CommonOpts& o) {
  lsfr::SolverConfig cfg;
  cfg.tolerance = o.tol;
  cfg.max_iters = o.max_iters;
  cfg.zero_threshold = o.zero_threshold;
  if (o.route == "direct") cfg.route = lsfr::SolverConfig::Route::kDirect;
  else if (o.route == "smw") cfg.route = lsfr::SolverConfig::Route::kSmw;
  else cfg.route = lsfr::SolverConfig::Route::kAuto;
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

void write_manifest(const fs::path& out_dir, const std::vector<std::string>& argv,
                    const json& resolved) {
  write_json(out_dir / "manifest.json", json{{"command", argv}, {"resolved", resolved}});
}

int exit_unconverged(bool any_unconverged, bool strict) {
  if (any_unconverged) {
    std::cerr << "warning: at least one fit hit the iteration cap without converging\n";
    if (strict) return 2;
  }
  return 0;
}

struct FitInputs {
  lsfr::FunctionalSample x, y;
  lsfr::BSplineBasis basis_t, basis_s;
  lsfr::GroupStructure structure;
  lsfr::DesignProblem problem;
};

FitInputs prepare(lsfr::FunctionalSample x, lsfr::FunctionalSample y,
                  const CommonOpts& o, bool center_data) {
  if (center_data) {
    x = lsfr::center(x);
    y = lsfr::center(y);
  }
  lsfr::BSplineBasis bt = lsfr::make_basis(x.grid.domain(), o.num_basis_t, o.order);
  lsfr::BSplineBasis bs = lsfr::make_basis(y.grid.domain(), o.num_basis_s, o.order);
  lsfr::GroupStructure st = lsfr::balance_weights(
      lsfr::enumerate_blocks(o.num_basis_t, o.num_basis_s, o.order));
  lsfr::DesignProblem p = lsfr::build_design(x, y, bt, bs);
  return {std::move(x), std::move(y), std::move(bt), std::move(bs), std::move(st),
          std::move(p)};
}

lsfr::TensorKernel kernel_of(const lsfr::DesignProblem& p, const Eigen::VectorXd& psi) {
  return {Eigen::Map<const Eigen::MatrixXd>(psi.data(), p.basis_t.size(), p.basis_s.size()),
          p.basis_t, p.basis_s, p.x_mean, p.y_mean};
}

lsfr::FitResult run_fit_like(const FitInputs& in, double lambda, const CommonOpts& o,
                             const std::vector<std::string>& argv,
                             const json& extra_manifest) {
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);
  lsfr::FitResult fit = lsfr::fit(in.problem, in.structure, lambda, solver_config(o));
  json resolved = extra_manifest;
  resolved["lambda"] = lambda;
  resolved["order"] = o.order;
  resolved["num_basis_t"] = o.num_basis_t;
  resolved["num_basis_s"] = o.num_basis_s;
  resolved["max_iters"] = o.max_iters;
  resolved["tol"] = o.tol;
  resolved["zero_threshold"] = o.zero_threshold;
  resolved["route"] = o.route;
  resolved["surface_grid"] = o.surface_grid;
  resolved["n_curves"] = in.x.n();
  write_manifest(out_dir, argv, resolved);
  write_json(out_dir / "fit.json",
             lsfr::fit_result_to_json(fit, o.num_basis_t, o.num_basis_s));
  lsfr::write_surface_csv((out_dir / "kernel_surface.csv").string(),
                          kernel_of(in.problem, fit.psi_hat), o.surface_grid);
  return fit;
}

int cmd_fit(const std::vector<std::string>& argv, const std::string& x_path,
            const std::string& y_path, double lambda, bool center_data,
            const CommonOpts& o) {
  FitInputs in = prepare(lsfr::read_curves_csv(x_path), lsfr::read_curves_csv(y_path), o,
                         center_data);
  json extra{{"subcommand", "fit"}, {"x", x_path}, {"y", y_path}, {"center", center_data}};
  const lsfr::FitResult fit = run_fit_like(in, lambda, o, argv, extra);
  return exit_unconverged(!fit.converged, o.strict);
}

int cmd_path(const std::vector<std::string>& argv, const std::string& x_path,
             const std::string& y_path, const std::string& xv_path,
             const std::string& yv_path, int cv_folds, int grid_size, double min_ratio,
             bool center_data, const CommonOpts& o) {
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);
  FitInputs in = prepare(lsfr::read_curves_csv(x_path), lsfr::read_curves_csv(y_path), o,
                         center_data);
  json resolved{{"subcommand", "path"},   {"x", x_path},
                {"y", y_path},            {"grid_size", grid_size},
                {"min_ratio", min_ratio}, {"center", center_data},
                {"order", o.order},       {"num_basis_t", o.num_basis_t},
                {"num_basis_s", o.num_basis_s}, {"cv", cv_folds}};
  bool any_unconverged = false;
  json out;
  if (cv_folds > 0) {
    const lsfr::CvSelection sel =
        lsfr::cv_select_lambda(in.x, in.y, in.basis_t, in.basis_s, in.structure,
                               solver_config(o), grid_size, min_ratio, cv_folds);
    // refit the whole data on the shared grid to report per-lambda summaries
    lsfr::LambdaPath path = lsfr::fit_path(in.problem, in.structure, solver_config(o),
                                           sel.lambdas);
    path.selection_score = sel.scores;
    path.selected = sel.selected;
    for (const auto& f : path.fits) any_unconverged |= !f.converged;
    out = lsfr::path_to_json(path);
    out["selection"] = "cv";
    out["folds"] = cv_folds;
  } else {
    if (xv_path.empty() || yv_path.empty()) {
      std::cerr << "error: path requires x_val.csv and y_val.csv unless --cv is given\n";
      return 1;
    }
    resolved["x_val"] = xv_path;
    resolved["y_val"] = yv_path;
    lsfr::FunctionalSample xv = lsfr::read_curves_csv(xv_path);
    lsfr::FunctionalSample yv = lsfr::read_curves_csv(yv_path);
    lsfr::LambdaPath path = lsfr::fit_path(in.problem, in.structure, solver_config(o),
                                           grid_size, min_ratio);
    lsfr::select_lambda(path, in.problem, xv, yv);
    for (const auto& f : path.fits) any_unconverged |= !f.converged;
    out = lsfr::path_to_json(path);
    out["selection"] = "validation";
  }
  write_manifest(out_dir, argv, resolved);
  write_json(out_dir / "path.json", out);
  return exit_unconverged(any_unconverged, o.strict);
}

int cmd_ar(const std::vector<std::string>& argv, const std::string& series_path,
           double lambda, bool use_logh, bool center_data, const CommonOpts& o) {
  lsfr::FunctionalSample series = lsfr::read_curves_csv(series_path);
  if (use_logh) series = lsfr::logh_transform(series);
  auto [x, y] = lsfr::build_ar_pairs(series);
  FitInputs in = prepare(std::move(x), std::move(y), o, center_data);
  json extra{{"subcommand", "ar"},
             {"series", series_path},
             {"logh", use_logh},
             {"center", center_data},
             {"num_pairs", in.x.n()}};
  const lsfr::FitResult fit = run_fit_like(in, lambda, o, argv, extra);
  // in-sample one-step-ahead predictions, mapped back to the original space
  // when the series was transformed
  lsfr::FunctionalSample pred =
      lsfr::predict(kernel_of(in.problem, fit.psi_hat), in.x, in.y.grid);
  if (use_logh) pred = lsfr::logh_inverse(pred);
  lsfr::write_curves_csv((fs::path(o.out_dir) / "predictions.csv").string(), pred);
  return exit_unconverged(!fit.converged, o.strict);
}

int cmd_simulate(const std::vector<std::string>& argv, const std::string& scenario_path,
                 long long seed_override, const CommonOpts& o) {
  std::ifstream f(scenario_path);
  if (!f) {
    std::cerr << "error: cannot open '" << scenario_path << "'\n";
    return 1;
  }
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    std::cerr << "error: invalid scenario JSON: " << e.what() << "\n";
    return 1;
  }
  lsfr::SimulationScenario sc = lsfr::scenario_from_json(j);
  if (seed_override >= 0) sc.seed = static_cast<std::uint64_t>(seed_override);
  const int replicates = lsfr::replicates_from_json(j);
  const fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);
  const std::vector<lsfr::EvaluationReport> reports = lsfr::run_scenario(sc, replicates);
  json resolved = lsfr::scenario_to_json(sc);
  resolved["subcommand"] = "simulate";
  resolved["replicates"] = replicates;
  resolved["scenario_file"] = scenario_path;
  write_manifest(out_dir, argv, resolved);
  lsfr::write_reports_csv((out_dir / "reports.csv").string(), reports);
  write_json(out_dir / "summary.json", lsfr::summary_json(sc, reports));
  return 0;
}

}  // namespace

static int run_cli(int argc, char** argv);

namespace {

int cmd_rerun(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) {
    std::cerr << "error: cannot open '" << manifest_path << "'\n";
    return 1;
  }
  json m;
  try {
    f >> m;
  } catch (const std::exception& e) {
    std::cerr << "error: invalid manifest JSON: " << e.what() << "\n";
    return 1;
  }
  std::vector<std::string> args = m.at("command").get<std::vector<std::string>>();
  if (args.size() < 2) {
    std::cerr << "error: manifest holds no command\n";
    return 1;
  }
  std::vector<char*> cargs;
  cargs.reserve(args.size());
  for (auto& a : args) cargs.push_back(a.data());
  return run_cli(static_cast<int>(cargs.size()), cargs.data());
}

}  // namespace

static int run_cli(int argc, char** argv) {
  CLI::App app{"Locally sparse function-on-function regression"};
  app.require_subcommand(1);

  std::vector<std::string> argv_copy(argv, argv + argc);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "single penalized fit from x/y curve CSVs");
  std::string x_path, y_path;
  double lambda = 0.0;
  bool center_flag = false;
  CommonOpts fit_opts;
  fit_cmd->add_option("x", x_path, "covariate curves CSV")->required();
  fit_cmd->add_option("y", y_path, "response curves CSV")->required();
  fit_cmd->add_option("--lambda", lambda, "penalty level")->required();
  fit_cmd->add_flag("--center", center_flag, "center curves before fitting");
  add_common(fit_cmd, fit_opts);

  // path
  auto* path_cmd = app.add_subcommand("path", "lambda path with validation or CV selection");
  std::string px, py, pxv, pyv;
  int cv_folds = 0, grid_size = 100;
  double min_ratio = 1e-4;
  bool p_center = false;
  CommonOpts path_opts;
  path_cmd->add_option("x", px, "training covariate CSV")->required();
  path_cmd->add_option("y", py, "training response CSV")->required();
  path_cmd->add_option("x_val", pxv, "validation covariate CSV");
  path_cmd->add_option("y_val", pyv, "validation response CSV");
  path_cmd->add_option("--cv", cv_folds, "k-fold cross-validation instead of a validation set");
  path_cmd->add_option("--grid-size", grid_size, "number of lambdas")->capture_default_str();
  path_cmd->add_option("--min-ratio", min_ratio, "smallest lambda as a fraction of lambda_max")
      ->capture_default_str();
  path_cmd->add_flag("--center", p_center, "center curves before fitting");
  add_common(path_cmd, path_opts);

  // ar
  auto* ar_cmd = app.add_subcommand("ar", "lag-1 autoregressive fit of a functional series");
  std::string series_path;
  double ar_lambda = 0.0;
  bool ar_logh = false, ar_center = false;
  CommonOpts ar_opts;
  ar_cmd->add_option("series", series_path, "series curves CSV (temporal order)")->required();
  ar_cmd->add_option("--lambda", ar_lambda, "penalty level")->required();
  ar_cmd->add_flag("--logh", ar_logh, "apply the logH transform first");
  ar_cmd->add_flag("--center", ar_center, "center pairs before fitting");
  add_common(ar_cmd, ar_opts);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "run a synthetic scenario config");
  std::string scenario_path;
  long long sim_seed = -1;
  CommonOpts sim_opts;
  sim_cmd->add_option("scenario", scenario_path, "scenario JSON")->required();
  sim_cmd->add_option("--seed", sim_seed, "override the scenario seed");
  add_common(sim_cmd, sim_opts, /*with_basis=*/false);

  // rerun
  auto* rerun_cmd = app.add_subcommand("rerun", "re-execute the command of a manifest.json");
  std::string manifest_path;
  rerun_cmd->add_option("manifest", manifest_path, "manifest.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(fit_cmd)) {
      return cmd_fit(argv_copy, x_path, y_path, lambda, center_flag, fit_opts);
    }
    if (app.got_subcommand(path_cmd)) {
      return cmd_path(argv_copy, px, py, pxv, pyv, cv_folds, grid_size, min_ratio, p_center,
                      path_opts);
    }
    if (app.got_subcommand(ar_cmd)) {
      return cmd_ar(argv_copy, series_path, ar_lambda, ar_logh, ar_center, ar_opts);
    }
    if (app.got_subcommand(sim_cmd)) {
      return cmd_simulate(argv_copy, scenario_path, sim_seed, sim_opts);
    }
    if (app.got_subcommand(rerun_cmd)) {
      return cmd_rerun(manifest_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    // parse/usage problems exit 1, numerical failures exit 2
    const std::string msg = e.what();
    if (msg.find("CSV") != std::string::npos || msg.find("cannot") != std::string::npos) {
      return 1;
    }
    return 2;
  }
  return 0;
}

int main(int argc, char** argv) { return run_cli(argc, argv); }
