#include "heatalloc/reference_metering.hpp"

#include <algorithm>
#include <cmath>

#include "heatalloc/errors.hpp"

namespace heatalloc {

namespace {

constexpr double kLitresPerHourToCubicMetresPerSecond = 1.0 / (1000.0 * 3600.0);
constexpr double kJoulesPerKwh = 3.6e6;

struct Knot {
  Timestamp t;
  double flow;
  double delta_t;
};

// Integral of the correction over [a, b] where the correction is active for
// the whole interval and dT is linear between the end values. Only the part
// with dT >= threshold counts.
double active_correction_j(double k_w_per_k, Timestamp a, Timestamp b, double dt_a, double dt_b) {
  if (b <= a) return 0.0;
  const double span = static_cast<double>(b - a);
  double lo = 0.0;
  double hi = span;
  if (dt_a < kCutoffMinDeltaT && dt_b < kCutoffMinDeltaT) return 0.0;
  if (dt_a < kCutoffMinDeltaT || dt_b < kCutoffMinDeltaT) {
    const double cross = (kCutoffMinDeltaT - dt_a) / (dt_b - dt_a) * span;
    if (dt_a < kCutoffMinDeltaT) lo = cross;
    else hi = cross;
  }
  auto at = [&](double s) { return dt_a + (dt_b - dt_a) * s / span; };
  return k_w_per_k * 0.5 * (at(lo) + at(hi)) * (hi - lo);
}

ReferenceEnergy integrate(const std::vector<Knot>& knots, const WaterProperties& water,
                          const IntegrationPeriod& period, double cutoff_lph) {
  const double rho_cp = water.density * water.specific_heat;
  const double correction_k = 0.5 * cutoff_lph * kLitresPerHourToCubicMetresPerSecond * rho_cp;

  double metered_j = 0.0;
  double correction_j = 0.0;
  // Zero-flow clock: start of the current run of exactly-zero flow samples.
  Timestamp zero_since = 0;
  bool zero_run = false;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const Knot& cur = knots[k];
    if (cur.flow != 0.0) {
      zero_run = false;
    } else if (!zero_run) {
      zero_run = true;
      zero_since = cur.t;
    }
    if (k == 0) continue;
    const Knot& prev = knots[k - 1];
    const Timestamp a = std::max(prev.t, period.start);
    const Timestamp b = std::min(cur.t, period.end);
    if (b <= a) continue;

    const auto power = [&](const Knot& x) {
      return rho_cp * x.flow * kLitresPerHourToCubicMetresPerSecond * x.delta_t;
    };
    const double w = static_cast<double>(cur.t - prev.t);
    auto lerp_power = [&](Timestamp t) {
      const double s = static_cast<double>(t - prev.t) / w;
      const double f = prev.flow + (cur.flow - prev.flow) * s;
      const double d = prev.delta_t + (cur.delta_t - prev.delta_t) * s;
      return rho_cp * f * kLitresPerHourToCubicMetresPerSecond * d;
    };
    const double pa = (a == prev.t) ? power(prev) : lerp_power(a);
    const double pb = (b == cur.t) ? power(cur) : lerp_power(b);
    metered_j += 0.5 * (pa + pb) * static_cast<double>(b - a);

    // Both ends at zero flow: the correction applies after the first hour.
    if (prev.flow == 0.0 && cur.flow == 0.0 && zero_run) {
      const Timestamp active_from = zero_since + kCutoffDelay_s;
      const Timestamp lo = std::max(a, active_from);
      if (b > lo) {
        auto dt_at = [&](Timestamp t) {
          return prev.delta_t +
                 (cur.delta_t - prev.delta_t) * static_cast<double>(t - prev.t) / w;
        };
        correction_j += active_correction_j(correction_k, lo, b, dt_at(lo), dt_at(b));
      }
    }
  }
  return ReferenceEnergy{(metered_j + correction_j) / kJoulesPerKwh, correction_j / kJoulesPerKwh};
}

}  // namespace

double cutoff_correction_power(double cutoff_lph, const WaterProperties& water, double delta_t) {
  return 0.5 * cutoff_lph * kLitresPerHourToCubicMetresPerSecond * water.density *
         water.specific_heat * delta_t;
}

ReferenceEnergy reference_energy(std::span<const ScalarSample> flow_lph,
                                 std::span<const ScalarSample> delta_t,
                                 const WaterProperties& water, const IntegrationPeriod& period,
                                 double cutoff_lph) {
  if (!(cutoff_lph > 0.0)) throw ConfigError("cut-off flow must be positive");
  if (period.end <= period.start) throw DataError("empty integration period");
  for (const auto& s : flow_lph) {
    if (s.value < 0.0) throw DataError("negative flow sample at " + format_iso8601(s.t));
  }
  if (flow_lph.empty() || delta_t.empty()) throw DataError("empty meter series");

  // Evaluate both channels on the union of their sample times. The full
  // history is kept so the zero-flow clock sees episodes that began earlier.
  std::vector<Timestamp> t;
  t.reserve(flow_lph.size() + delta_t.size());
  for (const auto& s : flow_lph) t.push_back(s.t);
  for (const auto& s : delta_t) t.push_back(s.t);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  const Timestamp lo = std::max(flow_lph.front().t, delta_t.front().t);
  const Timestamp hi = std::min(flow_lph.back().t, delta_t.back().t);
  if (period.start < lo || period.end > hi) {
    throw DataError("meter series do not cover period " + std::to_string(period.index));
  }
  std::vector<Knot> knots;
  knots.reserve(t.size());
  for (const Timestamp x : t) {
    if (x < lo || x > hi) continue;
    knots.push_back({x, sample_at(flow_lph, x).value, sample_at(delta_t, x).value});
  }
  return integrate(knots, water, period, cutoff_lph);
}

ReferenceEnergy reference_energy(std::span<const DhmSample> meter, const WaterProperties& water,
                                 const IntegrationPeriod& period, double cutoff_lph) {
  if (!(cutoff_lph > 0.0)) throw ConfigError("cut-off flow must be positive");
  if (period.end <= period.start) throw DataError("empty integration period");
  if (meter.empty() || period.start < meter.front().t || period.end > meter.back().t) {
    throw DataError("meter series does not cover period " + std::to_string(period.index));
  }
  std::vector<Knot> knots;
  knots.reserve(meter.size());
  for (const auto& s : meter) {
    if (s.flow_lph < 0.0) throw DataError("negative flow sample at " + format_iso8601(s.t));
    knots.push_back({s.t, s.flow_lph, s.inlet_c - s.outlet_c});
  }
  return integrate(knots, water, period, cutoff_lph);
}

}  // namespace heatalloc
