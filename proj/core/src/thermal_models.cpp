#include "heatalloc/thermal_models.hpp"

#include <algorithm>
#include <cmath>

#include "heatalloc/errors.hpp"

namespace heatalloc {

double normalized_difference_power(double delta_t, double base, double exponent_n) {
  if (!(delta_t > 0.0)) return 0.0;
  return std::pow(delta_t / base, exponent_n);
}

double en442_power(double q_n50, double exponent_n, double t_mean_c, double t_air_c) {
  return q_n50 * normalized_difference_power(t_mean_c - t_air_c, kEn442BaseDifference, exponent_n);
}

double kq_from_en442(double q_n50, double exponent_n) {
  return q_n50 * std::pow(kHcaBaseDifference / kEn442BaseDifference, exponent_n);
}

namespace {

// Integral over the period of ((a(t) - b(t)) / base)^n on the union of both
// traces' sample times, hours.
double difference_integral(std::span<const ScalarSample> a, std::span<const ScalarSample> b,
                           double base, double exponent_n, const IntegrationPeriod& period) {
  if (period.end <= period.start) throw DataError("empty integration period");
  const auto in_a = clip(a, period.start, period.end);
  const auto in_b = clip(b, period.start, period.end);

  std::vector<Timestamp> knots;
  knots.reserve(in_a.size() + in_b.size());
  for (const auto& s : in_a) knots.push_back(s.t);
  for (const auto& s : in_b) knots.push_back(s.t);
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  std::vector<ScalarSample> diff;
  diff.reserve(knots.size());
  for (const Timestamp t : knots) {
    const double va = sample_at(std::span<const ScalarSample>(in_a), t).value;
    const double vb = sample_at(std::span<const ScalarSample>(in_b), t).value;
    diff.push_back({t, va - vb});
  }
  return trapezoid_hours(std::span<const ScalarSample>(diff), [&](const ScalarSample& s) {
    return normalized_difference_power(s.value, base, exponent_n);
  });
}

}  // namespace

double hca_allocation_units(std::span<const ScalarSample> surface_c,
                            std::span<const ScalarSample> air_c, double exponent_n,
                            const RatingFactors& rating, const IntegrationPeriod& period) {
  return rating.product() *
         difference_integral(surface_c, air_c, kHcaBaseDifference, exponent_n, period);
}

double hca_energy_term(double units, double theta_w) { return units * theta_w / 1000.0; }

double stv_energy_term(std::span<const ScalarSample> inlet_c,
                       std::span<const ScalarSample> room_c, double exponent_n,
                       double theta_w, const IntegrationPeriod& period) {
  return theta_w *
         difference_integral(inlet_c, room_c, kEn442BaseDifference, exponent_n, period) / 1000.0;
}

double stv_normalized_integral(std::span<const StvSample> samples, double exponent_n,
                               const IntegrationPeriod& period) {
  if (period.end <= period.start) throw DataError("empty integration period");
  const auto in = clip(samples, period.start, period.end);
  return trapezoid_hours(std::span<const StvSample>(in), [&](const StvSample& s) {
    return normalized_difference_power(s.inlet_c - s.room_c, kEn442BaseDifference, exponent_n);
  });
}

double hca_normalized_units(const DeviceTimeSeries& hca, const IntegrationPeriod& period) {
  const auto& v = hca.as<HcaSample>();
  const std::span<const HcaSample> s(v);
  const double counts = sample_at(s, period.end).count - sample_at(s, period.start).count;
  return counts / hca.counts_per_unit_hour;
}

NormalizedTempIntegral integral_column(const Dataset& dataset, Method method,
                                       std::string_view radiator_id,
                                       const IntegrationPeriod& period) {
  const RadiatorSpec* radiator = dataset.find_radiator(radiator_id);
  if (!radiator) throw DataError("unknown radiator '" + std::string(radiator_id) + "'");
  const DeviceKind kind = method == Method::Hca ? DeviceKind::Hca : DeviceKind::Stv;
  const DeviceTimeSeries* series = dataset.find_series(radiator_id, kind);
  if (!series) {
    throw DataError("radiator '" + std::string(radiator_id) + "' has no " +
                    std::string(to_string(kind)) + " series");
  }
  NormalizedTempIntegral out{std::string(radiator_id), period.index, 0.0};
  if (method == Method::Hca) {
    out.value = hca_normalized_units(*series, period);
  } else {
    out.value = stv_normalized_integral(series->as<StvSample>(), radiator->exponent_n, period);
  }
  return out;
}

}  // namespace heatalloc
