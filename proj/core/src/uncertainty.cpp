#include "heatalloc/uncertainty.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "heatalloc/errors.hpp"

namespace heatalloc {

namespace {

const double kSqrt3 = std::sqrt(3.0);

void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw DataError(std::string(what) + " must be finite and non-negative");
  }
}

// Welford running variance.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

class Sampler {
 public:
  Sampler(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    rng_.seed(seq);
  }
  double gauss(double sd) { return sd > 0.0 ? sd * normal_(rng_) : 0.0; }
  // Zero-mean rectangular deviate with the given standard deviation.
  double rect(double sd) { return sd > 0.0 ? sd * kSqrt3 * (2.0 * unit_(rng_) - 1.0) : 0.0; }
  double rect_half_width(double a) { return a > 0.0 ? a * (2.0 * unit_(rng_) - 1.0) : 0.0; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

}  // namespace

double u_reference_energy(double q_ref_kwh, const MeterUncertainties& rel, double u_co_kwh) {
  require_non_negative(q_ref_kwh, "Q_ref");
  require_non_negative(rel.flow, "flow uncertainty");
  require_non_negative(rel.delta_t, "temperature difference uncertainty");
  require_non_negative(rel.density, "density uncertainty");
  require_non_negative(rel.specific_heat, "specific heat uncertainty");
  require_non_negative(u_co_kwh, "u_co");
  if (q_ref_kwh == 0.0) {
    if (u_co_kwh > 0.0) throw DataError("Q_ref = 0 with a nonzero cut-off correction uncertainty");
    return 0.0;
  }
  const double rel2 = rel.flow * rel.flow + rel.delta_t * rel.delta_t +
                      rel.density * rel.density + rel.specific_heat * rel.specific_heat;
  const double co = u_co_kwh / q_ref_kwh;
  return q_ref_kwh * std::sqrt(rel2 + co * co);
}

double u_cutoff_correction(double correction_integral_kwh) {
  require_non_negative(correction_integral_kwh, "cut-off correction");
  return correction_integral_kwh / kSqrt3;
}

double u_hca_units(double count, double u_d) {
  require_non_negative(u_d, "u_D");
  if (!(count >= 1.0) || !std::isfinite(count)) {
    throw DataError("allocator count must be at least 1");
  }
  const double res = 1.0 / (2.0 * kSqrt3 * count);
  return count * std::sqrt(2.0 * res * res + u_d * u_d);
}

double u_estimated_energy(double q_rad_kwh, double u_h, double u_k, double u_p) {
  require_non_negative(u_h, "u_H");
  require_non_negative(u_k, "u_K");
  require_non_negative(u_p, "u_P");
  if (!std::isfinite(q_rad_kwh)) throw DataError("non-finite radiator energy");
  return std::abs(q_rad_kwh) * std::sqrt(u_h * u_h + u_k * u_k + u_p * u_p);
}

double default_u_k() { return 0.02 / kSqrt3; }

bool parameter_uncertainty_in_expected_range(double u_p) {
  return u_p >= kParameterUncertaintyLow && u_p <= kParameterUncertaintyHigh;
}

DisplayUncertainty hca_display_uncertainty(double delta_ts_k, const DisplayDeviationBands& bands) {
  const bool in_band = delta_ts_k >= bands.band_low_k && delta_ts_k <= bands.band_high_k;
  const double bound = in_band ? bands.in_band_bound : bands.outside_band_bound;
  return DisplayUncertainty{bound / kSqrt3, !in_band};
}

double u_sum(std::span<const double> u) {
  double s = 0.0;
  for (const double x : u) {
    require_non_negative(x, "subset uncertainty");
    s += x * x;
  }
  return std::sqrt(s);
}

std::vector<double> u_fraction(std::span<const double> amounts, std::span<const double> u) {
  if (amounts.size() != u.size()) throw DataError("amounts and uncertainties differ in length");
  double total = 0.0;
  double u_total2 = 0.0;
  for (std::size_t s = 0; s < amounts.size(); ++s) {
    require_non_negative(u[s], "subset uncertainty");
    if (amounts[s] == 0.0 && u[s] > 0.0) {
      throw DataError("zero subset consumption with a nonzero uncertainty");
    }
    total += amounts[s];
    u_total2 += u[s] * u[s];
  }
  if (!(total > 0.0)) throw DataError("total consumption is zero");
  // (f/X)^2 u_X^2 + (f/T)^2 u_T^2 - 2 f^2/(X T) u_X^2, rearranged so it stays
  // non-negative in floating point.
  std::vector<double> out(amounts.size());
  const double scale = 100.0 / (total * total);
  for (std::size_t s = 0; s < amounts.size(); ++s) {
    const double others2 = std::max(0.0, u_total2 - u[s] * u[s]);
    const double var = (total - amounts[s]) * (total - amounts[s]) * u[s] * u[s] +
                       amounts[s] * amounts[s] * others2;
    out[s] = scale * std::sqrt(var);
  }
  return out;
}

double u_allocation_error(double u_f_ref, double u_f_x) {
  require_non_negative(u_f_ref, "u(f_ref)");
  require_non_negative(u_f_x, "u(f)");
  return std::hypot(u_f_ref, u_f_x);
}

namespace {

double analytic_value(const PropagationCase& model) {
  return std::visit(
      [](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ReferenceEnergyCase>) {
          return u_reference_energy(c.q_ref_kwh, c.rel,
                                    u_cutoff_correction(c.correction_integral_kwh));
        } else if constexpr (std::is_same_v<T, HcaUnitsCase>) {
          return u_hca_units(c.count, c.u_d);
        } else if constexpr (std::is_same_v<T, EstimatedEnergyCase>) {
          return u_estimated_energy(c.q_rad_kwh, c.u_h, c.u_k, c.u_p);
        } else if constexpr (std::is_same_v<T, FractionCase>) {
          if (c.subset >= c.amounts.size()) throw DataError("fraction case subset out of range");
          return u_fraction(c.amounts, c.u)[c.subset];
        } else {
          return u_allocation_error(c.u_f_ref, c.u_f_x);
        }
      },
      model);
}

double draw(const PropagationCase& model, Sampler& s) {
  return std::visit(
      [&s](const auto& c) -> double {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ReferenceEnergyCase>) {
          const double q = c.q_ref_kwh * (1.0 + s.gauss(c.rel.flow)) *
                           (1.0 + s.gauss(c.rel.delta_t)) * (1.0 + s.gauss(c.rel.density)) *
                           (1.0 + s.gauss(c.rel.specific_heat));
          // The true correction lies anywhere in [0, 2 q_co]; the estimate is q_co.
          return q + s.rect_half_width(c.correction_integral_kwh);
        } else if constexpr (std::is_same_v<T, HcaUnitsCase>) {
          // Two readings, each quantized to +-0.5 count, then the display deviation.
          const double r = c.count + s.rect_half_width(0.5) - s.rect_half_width(0.5);
          return r * (1.0 + s.rect(c.u_d));
        } else if constexpr (std::is_same_v<T, EstimatedEnergyCase>) {
          return c.q_rad_kwh * (1.0 + s.gauss(c.u_h)) * (1.0 + s.rect(c.u_k)) *
                 (1.0 + s.gauss(c.u_p));
        } else if constexpr (std::is_same_v<T, FractionCase>) {
          double total = 0.0;
          double mine = 0.0;
          for (std::size_t k = 0; k < c.amounts.size(); ++k) {
            const double x = c.amounts[k] + s.gauss(c.u[k]);
            total += x;
            if (k == c.subset) mine = x;
          }
          return 100.0 * mine / total;
        } else {
          return s.gauss(c.u_f_ref) - s.gauss(c.u_f_x);
        }
      },
      model);
}

}  // namespace

MonteCarloResult monte_carlo_check(const PropagationCase& model, std::size_t n_draws,
                                   std::uint64_t seed) {
  if (n_draws < kMinMonteCarloDraws) {
    throw ConfigError("Monte-Carlo check needs at least " + std::to_string(kMinMonteCarloDraws) +
                      " draws");
  }
  MonteCarloResult out;
  out.analytic = analytic_value(model);
  out.draws = n_draws;
  Sampler sampler(seed, model.index());
  RunningStats stats;
  for (std::size_t i = 0; i < n_draws; ++i) {
    const double y = draw(model, sampler);
    if (!std::isfinite(y)) throw NumericalError("degenerate distribution: non-finite draw");
    stats.add(y);
  }
  out.empirical = stats.sd();
  if (out.empirical == 0.0) {
    out.z_score = out.analytic == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    const double se = out.empirical / std::sqrt(2.0 * static_cast<double>(n_draws - 1));
    out.z_score = (out.analytic - out.empirical) / se;
  }
  return out;
}

}  // namespace heatalloc
