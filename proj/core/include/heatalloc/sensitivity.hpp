#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "heatalloc/evaluation.hpp"
#include "heatalloc/simulator.hpp"

namespace heatalloc {

/// Sensitivity protocols for the improved allocator method:
///  - Frequency: sampling frequency of allocator and meter readings, 1/h.
///  - HeatLoss: pipework loss fraction added to the total energy.
///  - PriorOffset: constant relative offset applied to every prior.
///  - PriorUniform: relative prior errors uniform in +-level, averaged over
///    several draws.
enum class SensitivityAxis { Frequency, HeatLoss, PriorOffset, PriorUniform };

std::string_view to_string(SensitivityAxis axis);
SensitivityAxis parse_sensitivity_axis(std::string_view text);

struct SensitivityOptions {
  LambdaPolicy lambda;
  bool per_radiator = true;  // otherwise group by registry subsets
  std::size_t uniform_draws = 5;
  bool parallel = true;
};

struct SensitivityRow {
  double level = 0.0;
  double lambda = 0.0;
  GlobalIndicators improved;
  GlobalIndicators nominal;
  double mean_u_error = 0.0;
  double u_global = 0.0;
};

std::vector<SensitivityRow> sensitivity_suite(const ScenarioConfig& base, SensitivityAxis axis,
                                              std::span<const double> levels,
                                              const SensitivityOptions& options = {});

}  // namespace heatalloc
