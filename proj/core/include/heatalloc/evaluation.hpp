#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "heatalloc/allocation_metrics.hpp"
#include "heatalloc/domain.hpp"
#include "heatalloc/estimator.hpp"
#include "heatalloc/reference_metering.hpp"
#include "heatalloc/simulator.hpp"
#include "heatalloc/uncertainty.hpp"

namespace heatalloc {

/// The three accounting methods compared in reports.
enum class AllocationMethod { HcaNominal, HcaImproved, StvImproved };

std::string_view label(AllocationMethod method);
AllocationMethod parse_allocation_method(std::string_view text);

struct UncertaintyConfig {
  MeterUncertainties meter;
  double u_h = kDefaultUH;
  double u_k = default_u_k();
  DisplayDeviationBands bands;
};

/// Per-radiator consumption estimate and its standard uncertainty.
struct RadiatorAllocation {
  std::string method;
  std::vector<std::string> radiator_ids;
  std::vector<double> amount;
  std::vector<double> u_amount;
  std::vector<std::string> warnings;
};

/// Fixed lambda, or L-curve selection over a grid.
struct LambdaPolicy {
  std::optional<double> fixed;
  std::vector<double> grid = default_lambda_grid();
};

struct EstimationRun {
  Method method = Method::Hca;
  SamplingMatrix sampling;
  EstimationResult result;
  std::optional<LCurveSelection> lcurve;
};

/// assemble -> (lcurve_select) -> solve_rls. `prior_w` overrides the dataset
/// prior for the method.
EstimationRun run_estimation(const Dataset& dataset, Method method, const LambdaPolicy& policy,
                             const std::optional<Eigen::VectorXd>& prior_w = std::nullopt);

/// Allocator readings re-scaled by the nominal rating factors (units).
RadiatorAllocation nominal_hca_allocation(const Dataset& dataset, const UncertaintyConfig& cfg);

/// theta_hat_j times the season integral of radiator j, in kWh.
RadiatorAllocation improved_allocation(const Dataset& dataset, Method method,
                                       const EstimationResult& estimate,
                                       const UncertaintyConfig& cfg);

RadiatorAllocation reference_from_truth(const GroundTruth& truth, const UncertaintyConfig& cfg);

/// Season reference energies from per-radiator meters, cut-off corrected.
RadiatorAllocation reference_from_meters(const Dataset& dataset, const WaterProperties& water,
                                         const UncertaintyConfig& cfg,
                                         double cutoff_lph = kDefaultCutoffFlow_lph);

SubsetMap subsets_from_registry(const Dataset& dataset);
SubsetMap per_radiator_subsets(const std::vector<std::string>& radiator_ids);

/// Fractions, errors, indicators and the uncertainty budget of one method
/// against the reference. With a baseline, also Delta E_HCA, P_L and
/// u(Delta E_HCA).
AllocationReport evaluate_allocation(const RadiatorAllocation& method,
                                     const RadiatorAllocation& reference,
                                     const SubsetMap& subsets,
                                     const AllocationReport* baseline = nullptr);

}  // namespace heatalloc
