#pragma once

#include <string>

#include <json.hpp>

#include "lsfr/model.hpp"
#include "lsfr/simulate.hpp"
#include "lsfr/solver.hpp"

namespace lsfr {

/// Curve CSV format: row 1 = grid points, rows 2.. = one curve per row.
/// Parse failures report the 1-based line number.
FunctionalSample read_curves_csv(const std::string& path);
void write_curves_csv(const std::string& path, const FunctionalSample& sample);

/// Long-format surface CSV (t, s, value) on a dense grid_size x grid_size grid.
void write_surface_csv(const std::string& path, const TensorKernel& kernel,
                       int grid_size);

nlohmann::json fit_result_to_json(const FitResult& fit, int M, int L);
nlohmann::json path_to_json(const LambdaPath& path);

SimulationScenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const SimulationScenario& sc);
/// Replicates live next to the scenario in the config file.
int replicates_from_json(const nlohmann::json& j);

void write_reports_csv(const std::string& path,
                       const std::vector<EvaluationReport>& reports);
/// Means and standard deviations, raw and scaled by 1e5; ise0 entries are null
/// when the true zero region has zero area.
nlohmann::json summary_json(const SimulationScenario& sc,
                            const std::vector<EvaluationReport>& reports);

/// Format a double with 17 significant digits.
std::string format_double(double v);

}  // namespace lsfr
