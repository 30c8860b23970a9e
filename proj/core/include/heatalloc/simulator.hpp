#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heatalloc/domain.hpp"
#include "heatalloc/reference_metering.hpp"

namespace heatalloc {

enum class HeaterMode { Constant, Climatic, Mixed };
enum class ValveMode { RoomSetPoint, PositionSetPoint, Alternating };

/// How true radiator output is generated.
///  - En442: output follows the mean fluid temperature via the EN 442 law.
///    The allocator model is exact for this physics when inertia is zero.
///  - StvMatched: output is theta * ((T_in - T_av)/50)^n on the noiseless valve
///    readings, so the valve model is exact by construction.
enum class Physics { En442, StvMatched };

/// One simulated radiator. Unset optional fields are drawn from the seed.
struct SimRadiator {
  std::optional<double> q_n50;
  std::optional<double> exponent_n;
  std::optional<double> deviation;  // true output / nominal output
  std::optional<double> coupling;   // allocator sensor coupling in [0.7, 1]
  std::optional<int> floor;
  std::optional<std::string> wall;  // "N" or "S"
};

struct NoiseConfig {
  double stv_temperature_sd = 0.0;    // K
  double reference_flow_sd_rel = 0.0;
  double hca_display_deviation = 0.0;  // half-width of a per-device gain error
};

struct ScenarioConfig {
  double duration_days = 30.0;
  Timestamp start = 1546819200;  // 2019-01-07T00:00:00Z
  double sampling_frequency_per_hour = 0.33;
  HeaterMode heater_mode = HeaterMode::Mixed;
  double constant_supply_c = 55.0;
  double heater_off_margin_h = 6.0;

  double outdoor_mean_c = 5.0;
  double outdoor_amplitude_c = 5.0;
  double outdoor_noise_sd = 1.0;

  std::size_t radiator_count = 40;
  std::vector<SimRadiator> radiators;  // overrides radiator_count when non-empty
  double deviation_low = 1.1;
  double deviation_high = 1.4;
  double coupling_low = 0.7;
  double coupling_high = 1.0;
  // Installed exponent = nominal n + U(-spread, spread). Allocators and
  // valves keep using the nominal one.
  double exponent_spread = 0.0;
  int floors = 4;

  ValveMode valve_mode = ValveMode::Alternating;
  double rsp_day_c = 22.0;
  double rsp_night_c = 19.0;
  double rsp_floor_increment_c = 0.5;
  double rsp_gain_pct_per_k = 40.0;
  double rsp_deadband_k = 0.2;

  double loss_fraction = 0.0;
  NoiseConfig noise;
  double hca_counts_per_unit_hour = 999.0;
  double hca_start_difference_k = 0.0;  // allocator ignores T_s - T_a below this

  Physics physics = Physics::En442;
  double inertia_time_constant_min = 30.0;
  double inlet_time_constant_min = 10.0;
  double flow_gain = 8.0;  // full-open fluid conductance relative to q/50K

  double step_s = 60.0;
  Timestamp stv_cadence_s = 300;
  Timestamp hca_cadence_s = 3 * 3600;
  Timestamp dhm_cadence_s = 300;
  bool emit_reference_meters = false;
  WaterProperties water;
  double cutoff_flow_lph = kDefaultCutoffFlow_lph;

  std::uint64_t seed = 1;
};

/// Throws ConfigError naming the first invalid field.
void validate_config(const ScenarioConfig& cfg);

struct GroundTruth {
  std::vector<std::string> radiator_ids;
  /// [period][radiator], energy emitted by each radiator in kWh.
  std::vector<std::vector<double>> radiator_energy_kwh;
  std::vector<double> total_kwh;
  std::vector<double> theta_true_hca_w;
  std::vector<double> theta_true_stv_w;
  std::vector<double> deviation;
  double loss_fraction = 0.0;

  std::vector<double> season_energy_kwh() const;
};

struct Simulation {
  Dataset dataset;
  GroundTruth truth;
};

/// Linear heating curve: 70 C at 0 C outdoor, 40 C at 20 C, clamped.
double climatic_supply_temp(double t_out_c);

Simulation simulate_season(const ScenarioConfig& cfg);

}  // namespace heatalloc
