#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "heatalloc/allocation_metrics.hpp"
#include "heatalloc/domain.hpp"
#include "heatalloc/estimator.hpp"
#include "heatalloc/evaluation.hpp"
#include "heatalloc/sensitivity.hpp"
#include "heatalloc/simulator.hpp"
#include "heatalloc/uncertainty.hpp"

namespace heatalloc::io {

inline constexpr int kSchemaVersion = 1;

/// 12 significant digits, '.' decimal separator.
std::string format_number(double value);

// Dataset layout:
//   <dir>/dataset.json      manifest: devices, periods, per-period totals
//   <dir>/radiators.json    registry keyed by radiator id
//   <dir>/devices/<id>.csv  one file per device, `timestamp,<payload columns>`
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& file);
GroundTruth read_ground_truth(const std::filesystem::path& file);

ScenarioConfig scenario_from_json(const std::string& text);
ScenarioConfig read_scenario(const std::filesystem::path& file);
std::string scenario_to_json(const ScenarioConfig& cfg);

struct EstimationFile {
  Method method = Method::Hca;
  EstimationResult result;
  Eigen::VectorXd theta_prior_w;
};

void write_estimation(const EstimationRun& run, const Eigen::VectorXd& prior_w,
                      const std::filesystem::path& file);
EstimationFile read_estimation(const std::filesystem::path& file);

void write_lcurve_csv(const LCurveSelection& selection, const std::filesystem::path& file);

/// JSON object: subset id -> list of radiator ids.
SubsetMap read_subsets(const std::filesystem::path& file);

void write_report_json(const std::vector<AllocationReport>& reports,
                       const std::filesystem::path& file);
std::vector<AllocationReport> read_report_json(const std::filesystem::path& file);
/// One row per subset followed by a `__global__` row.
void write_report_csv(const AllocationReport& report, const std::filesystem::path& file);
/// Indicators as rows, methods as columns.
std::string comparison_table(const std::vector<AllocationReport>& reports);
void write_comparison_csv(const std::vector<AllocationReport>& reports,
                          const std::filesystem::path& file);

void write_budget_json(const std::vector<RadiatorAllocation>& allocations,
                       const UncertaintyConfig& cfg, const std::filesystem::path& file);

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, SensitivityAxis axis,
                           const std::filesystem::path& file);

struct MonteCarloRecord {
  std::string name;
  MonteCarloResult result;
};
void write_monte_carlo_csv(const std::vector<MonteCarloRecord>& records,
                           const std::filesystem::path& file);

}  // namespace heatalloc::io
