#include "lsfr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lsfr {

namespace {

std::vector<double> parse_row(const std::string& line, int line_number) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      size_t used = 0;
      const double v = std::stod(cell, &used);
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size()) throw std::invalid_argument("trailing characters");
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("CSV parse error at line " + std::to_string(line_number) +
                               ": cannot read value '" + cell + "'");
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

nlohmann::json stat_entry(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  const double m = mean_of(v);
  const double s = sd_of(v);
  return {{"mean", m}, {"sd", s}, {"mean_x1e5", m * 1e5}, {"sd_x1e5", s * 1e5}};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

FunctionalSample read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  int line_number = 0;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::vector<double> row = parse_row(line, line_number);
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("CSV parse error at line " + std::to_string(line_number) +
                               ": expected " + std::to_string(rows.front().size()) +
                               " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) {
    throw std::runtime_error("'" + path + "': need a grid row and at least one curve row");
  }
  const int G = static_cast<int>(rows.front().size());
  if (G < 2) throw std::runtime_error("'" + path + "': grid must have at least 2 points");
  Grid grid;
  grid.points = rows.front();
  for (int g = 1; g < G; ++g) {
    if (!(grid.points[g] > grid.points[g - 1])) {
      throw std::runtime_error("'" + path + "': grid points must be strictly increasing");
    }
  }
  grid.weights.assign(G, 0.0);
  for (int g = 0; g + 1 < G; ++g) {
    const double h = grid.points[g + 1] - grid.points[g];
    grid.weights[g] += 0.5 * h;
    grid.weights[g + 1] += 0.5 * h;
  }
  Eigen::MatrixXd values(static_cast<int>(rows.size()) - 1, G);
  for (size_t i = 1; i < rows.size(); ++i) {
    for (int g = 0; g < G; ++g) values(static_cast<int>(i) - 1, g) = rows[i][g];
  }
  return {std::move(values), std::move(grid), std::nullopt};
}

void write_curves_csv(const std::string& path, const FunctionalSample& sample) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  for (int g = 0; g < sample.num_points(); ++g) {
    out << (g ? "," : "") << format_double(sample.grid.points[g]);
  }
  out << "\n";
  for (int i = 0; i < sample.n(); ++i) {
    for (int g = 0; g < sample.num_points(); ++g) {
      out << (g ? "," : "") << format_double(sample.values(i, g));
    }
    out << "\n";
  }
}

void write_surface_csv(const std::string& path, const TensorKernel& kernel, int grid_size) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const Grid gt = make_grid(kernel.basis_t.domain(), grid_size);
  const Grid gs = make_grid(kernel.basis_s.domain(), grid_size);
  const Eigen::MatrixXd S = kernel.surface(gt, gs);
  out << "t,s,value\n";
  for (int i = 0; i < gt.size(); ++i) {
    for (int j = 0; j < gs.size(); ++j) {
      out << format_double(gt.points[i]) << "," << format_double(gs.points[j]) << ","
          << format_double(S(i, j)) << "\n";
    }
  }
}

nlohmann::json fit_result_to_json(const FitResult& fit, int M, int L) {
  nlohmann::json j;
  j["lambda"] = fit.lambda;
  j["M"] = M;
  j["L"] = L;
  j["coefficients"] = std::vector<double>(fit.psi_hat.data(),
                                          fit.psi_hat.data() + fit.psi_hat.size());
  j["objective_trace"] = fit.objective_trace;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["active_groups"] = fit.active_groups;
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& [m, l] : fit.zero_set.rectangles) {
    rects.push_back({m, l});
  }
  j["zero_set"] = {{"rectangles", rects},
                   {"knots_t", fit.zero_set.knots_t},
                   {"knots_s", fit.zero_set.knots_s}};
  return j;
}

nlohmann::json path_to_json(const LambdaPath& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (size_t i = 0; i < path.fits.size(); ++i) {
    const FitResult& f = path.fits[i];
    nlohmann::json e;
    e["lambda"] = path.lambdas[i];
    e["objective"] = f.objective_trace.back();
    e["iterations"] = f.iterations;
    e["converged"] = f.converged;
    e["num_active_groups"] = f.active_groups.size();
    e["num_zero_rectangles"] = f.zero_set.rectangles.size();
    if (i < path.selection_score.size()) e["validation_score"] = path.selection_score[i];
    e["selected"] = (static_cast<int>(i) == path.selected);
    entries.push_back(std::move(e));
  }
  return {{"selected", path.selected}, {"path", entries}};
}

SimulationScenario scenario_from_json(const nlohmann::json& j) {
  SimulationScenario sc;
  sc.kernel_id = j.at("kernel_id").get<int>();
  sc.n = j.at("n").get<int>();
  sc.G = j.at("G").get<int>();
  sc.snr = j.at("snr").get<double>();
  sc.M = j.value("M", sc.M);
  sc.L = j.value("L", sc.L);
  sc.order = j.value("order", sc.order);
  sc.seed = j.value("seed", sc.seed);
  sc.validation_n = j.value("validation_n", sc.validation_n);
  sc.test_n = j.value("test_n", sc.test_n);
  sc.path_size = j.value("path_size", sc.path_size);
  sc.min_ratio = j.value("min_ratio", sc.min_ratio);
  return sc;
}

nlohmann::json scenario_to_json(const SimulationScenario& sc) {
  return {{"kernel_id", sc.kernel_id}, {"n", sc.n},
          {"G", sc.G},                 {"snr", sc.snr},
          {"M", sc.M},                 {"L", sc.L},
          {"order", sc.order},         {"seed", sc.seed},
          {"validation_n", sc.validation_n}, {"test_n", sc.test_n},
          {"path_size", sc.path_size}, {"min_ratio", sc.min_ratio}};
}

int replicates_from_json(const nlohmann::json& j) {
  return j.value("replicates", 1);
}

void write_reports_csv(const std::string& path,
                       const std::vector<EvaluationReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "replicate,ise0,ise1,ise,prediction_error,realized_snr,zero_coverage,"
         "selected_lambda,selected_index\n";
  for (const auto& r : reports) {
    out << r.replicate << ",";
    out << (std::isnan(r.ise0) ? "" : format_double(r.ise0)) << ",";
    out << format_double(r.ise1) << "," << format_double(r.ise) << ","
        << format_double(r.prediction_error) << "," << format_double(r.realized_snr) << ",";
    out << (std::isnan(r.zero_coverage) ? "" : format_double(r.zero_coverage)) << ",";
    out << format_double(r.selected_lambda) << "," << r.selected_index << "\n";
  }
}

nlohmann::json summary_json(const SimulationScenario& sc,
                            const std::vector<EvaluationReport>& reports) {
  std::vector<double> ise0, ise1, ise, pred, snr, cov;
  for (const auto& r : reports) {
    if (!std::isnan(r.ise0)) ise0.push_back(r.ise0);
    ise1.push_back(r.ise1);
    ise.push_back(r.ise);
    pred.push_back(r.prediction_error);
    snr.push_back(r.realized_snr);
    if (!std::isnan(r.zero_coverage)) cov.push_back(r.zero_coverage);
  }
  nlohmann::json j;
  j["scenario"] = scenario_to_json(sc);
  j["replicates"] = reports.size();
  j["ise0"] = ise0.empty() ? nlohmann::json(nullptr) : stat_entry(ise0);
  j["ise1"] = stat_entry(ise1);
  j["ise"] = stat_entry(ise);
  j["prediction_error"] = stat_entry(pred);
  j["realized_snr"] = stat_entry(snr);
  j["zero_coverage"] = cov.empty() ? nlohmann::json(nullptr) : stat_entry(cov);
  return j;
}

}  // namespace lsfr
