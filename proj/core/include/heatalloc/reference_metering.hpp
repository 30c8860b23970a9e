#pragma once

#include <span>

#include "heatalloc/domain.hpp"

namespace heatalloc {

struct WaterProperties {
  double density = 1000.0;        // kg/m^3
  double specific_heat = 4186.0;  // J/(kg K)
  double u_density_rel = 0.0005;
  double u_specific_heat_rel = 0.0075;
};

/// Metered flow must stay at exactly zero for longer than this before the
/// cut-off correction switches on.
inline constexpr Timestamp kCutoffDelay_s = 3600;
inline constexpr double kCutoffMinDeltaT = 8.0;  // K
inline constexpr double kDefaultCutoffFlow_lph = 2.5;

struct ReferenceEnergy {
  double energy_kwh = 0.0;      // metered enthalpy flow plus correction
  double correction_kwh = 0.0;  // integral of q_co alone
};

/// Power added while the meter is below its cut-off: 0.5 * V_co * rho * c_p * dT, W.
double cutoff_correction_power(double cutoff_lph, const WaterProperties& water,
                               double delta_t);

/// Reference thermal energy over a period from flow (L/h) and inlet-outlet
/// difference (K) traces. Throws DataError on a negative flow sample.
ReferenceEnergy reference_energy(std::span<const ScalarSample> flow_lph,
                                 std::span<const ScalarSample> delta_t,
                                 const WaterProperties& water,
                                 const IntegrationPeriod& period,
                                 double cutoff_lph = kDefaultCutoffFlow_lph);

/// Same, reading flow and temperatures from a radiator meter series.
ReferenceEnergy reference_energy(std::span<const DhmSample> meter,
                                 const WaterProperties& water,
                                 const IntegrationPeriod& period,
                                 double cutoff_lph = kDefaultCutoffFlow_lph);

}  // namespace heatalloc
