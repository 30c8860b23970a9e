#pragma once

#include <span>
#include <string>

#include "heatalloc/domain.hpp"

namespace heatalloc {

inline constexpr double kEn442BaseDifference = 50.0;  // K
inline constexpr double kHcaBaseDifference = 60.0;    // K
inline constexpr double kDefaultExponent = 1.3;

/// Steady-state EN 442 output: q_n50 * ((t_mean - t_air) / 50)^n, or 0 when
/// the radiator is not warmer than the air.
double en442_power(double q_n50, double exponent_n, double t_mean_c, double t_air_c);

/// Allocator rating factor at a 60 K difference: q_n50 * (60/50)^n.
double kq_from_en442(double q_n50, double exponent_n);

/// ((max(dT, 0)) / base)^n. The building block of every normalized integral.
double normalized_difference_power(double delta_t, double base, double exponent_n);

struct RatingFactors {
  double kq = 1.0;
  double kc = 1.0;
  double kt = 1.0;

  double product() const { return kq * kc * kt; }
};

/// Real-valued allocation units K_Q K_C K_T * integral(((T_s - T_ar)/60)^n dt),
/// time in hours. The two traces may be sampled at different instants; the
/// integrand is evaluated on the union of sample times inside the period.
double hca_allocation_units(std::span<const ScalarSample> surface_c,
                            std::span<const ScalarSample> air_c, double exponent_n,
                            const RatingFactors& rating, const IntegrationPeriod& period);

/// theta_j * R_ij in kWh, with theta in W and R in unit-hours (ratings = 1).
double hca_energy_term(double units, double theta_w);

/// theta_j * integral(((T_in - T_av)/50)^n dt) in kWh.
double stv_energy_term(std::span<const ScalarSample> inlet_c,
                       std::span<const ScalarSample> room_c, double exponent_n,
                       double theta_w, const IntegrationPeriod& period);

/// Normalized valve-method integral over one period from a combined STV
/// series, in hours.
double stv_normalized_integral(std::span<const StvSample> samples, double exponent_n,
                               const IntegrationPeriod& period);

/// Allocator units with unit ratings over a period: count difference divided by
/// the device scale. Counts at the boundaries are linearly interpolated.
double hca_normalized_units(const DeviceTimeSeries& hca, const IntegrationPeriod& period);

struct NormalizedTempIntegral {
  std::string radiator_id;
  std::size_t period_index = 0;
  double value = 0.0;  // hours
};

/// Entry of the sampling matrix for (period, radiator).
NormalizedTempIntegral integral_column(const Dataset& dataset, Method method,
                                       std::string_view radiator_id,
                                       const IntegrationPeriod& period);

}  // namespace heatalloc
