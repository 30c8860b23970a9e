#pragma once

#include <cstdint>

#include "heatalloc/simulator.hpp"

namespace fixture {

/// A few radiators over a few days: fast enough for unit tests.
inline heatalloc::ScenarioConfig small_scenario(std::uint64_t seed = 7, double days = 3.0,
                                                std::size_t radiators = 6) {
  heatalloc::ScenarioConfig c;
  c.seed = seed;
  c.duration_days = days;
  c.radiator_count = radiators;
  c.floors = 2;
  c.heater_off_margin_h = 2.0;
  c.step_s = 120.0;
  return c;
}

/// Zero noise, exact device models: the estimator must recover theta.
inline heatalloc::ScenarioConfig exact_scenario(heatalloc::ScenarioConfig c) {
  c.noise = {};
  c.loss_fraction = 0.0;
  c.exponent_spread = 0.0;
  c.hca_start_difference_k = 0.0;
  c.inertia_time_constant_min = 0.0;
  c.hca_counts_per_unit_hour = 1e9;
  c.outdoor_noise_sd = 0.0;
  return c;
}

}  // namespace fixture
