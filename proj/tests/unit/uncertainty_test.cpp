#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "heatalloc/errors.hpp"
#include "heatalloc/uncertainty.hpp"
#include "oracles.hpp"

using namespace heatalloc;

namespace {

const double kSqrt3 = std::sqrt(3.0);

// Independent brute-force sd of f_1 = 100 X_1 / sum(X) under Gaussian inputs.
double brute_force_fraction_sd(const std::vector<double>& x, const std::vector<double>& u,
                               std::size_t subset, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  double mean = 0.0, m2 = 0.0;
  for (int i = 1; i <= n; ++i) {
    double total = 0.0, mine = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double v = x[k] + u[k] * z(rng);
      total += v;
      if (k == subset) mine = v;
    }
    const double f = 100.0 * mine / total;
    const double d = f - mean;
    mean += d / i;
    m2 += d * (f - mean);
  }
  return std::sqrt(m2 / (n - 1));
}

}  // namespace

TEST(UReferenceEnergy, Examples) {
  EXPECT_NEAR(u_reference_energy(100, {}, 0.0), 0.8646, 5e-5);
  EXPECT_EQ(u_reference_energy(0, {0, 0, 0, 0}, 0.0), 0.0);
  EXPECT_NEAR(u_reference_energy(100, {0, 0, 0, 0}, u_cutoff_correction(3.0)), 3.0 / kSqrt3, 1e-12);
  EXPECT_NEAR(3.0 / kSqrt3, 1.7321, 5e-5);
  EXPECT_THROW(u_reference_energy(0, {}, 1.0), DataError);
}

TEST(UHcaUnits, Examples) {
  EXPECT_NEAR(u_hca_units(100, 0.05 / kSqrt3), 2.9155, 5e-5);
  EXPECT_NEAR(u_hca_units(100, 0.0), 100.0 * std::sqrt(2.0) / (200.0 * kSqrt3), 1e-12);
  EXPECT_NEAR(u_hca_units(100, 0.0), 0.4082, 5e-5);
  EXPECT_THROW(u_hca_units(0, 0.01), DataError);
  double last = 1.0;
  for (double r = 1; r <= 1e6; r *= 10) {
    const double rel = u_hca_units(r, 0.0) / r;
    EXPECT_LT(rel, last);
    last = rel;
  }
  EXPECT_LT(last, 1e-6);
}

TEST(UEstimatedEnergy, Examples) {
  EXPECT_NEAR(default_u_k(), 0.011547, 5e-7);
  EXPECT_NEAR(u_estimated_energy(100, 0.01, default_u_k(), 0.005), 1.6073, 5e-5);
  EXPECT_EQ(u_estimated_energy(100, 0, 0, 0), 0.0);
  EXPECT_TRUE(parameter_uncertainty_in_expected_range(0.01));
  EXPECT_FALSE(parameter_uncertainty_in_expected_range(0.001));
  EXPECT_FALSE(parameter_uncertainty_in_expected_range(0.05));
}

TEST(UFraction, Examples) {
  const auto u = u_fraction(std::vector<double>{50, 50}, std::vector<double>{1, 1});
  EXPECT_NEAR(u[0], 50.0 * std::sqrt(2e-4), 1e-12);
  EXPECT_NEAR(u[0], 0.7071, 5e-5);
  EXPECT_EQ(u_fraction(std::vector<double>{50, 50}, std::vector<double>{0, 0}),
            (std::vector<double>{0, 0}));
  EXPECT_THROW(u_fraction(std::vector<double>{0, 50}, std::vector<double>{1, 1}), DataError);
}

TEST(UFraction, PinnedAtHundredPercent) {
  const auto u = u_fraction(std::vector<double>{100, 0, 0}, std::vector<double>{3, 0, 0});
  EXPECT_EQ(u[0], 0.0);
}

TEST(UFraction, AgreesWithBruteForce) {
  const std::vector<std::vector<double>> xs{{50, 50}, {100, 1e-3}, {10, 30, 60}, {5, 5, 90}};
  const std::vector<std::vector<double>> us{{1, 1}, {1, 1e-4}, {0.5, 1, 2}, {0.2, 0.1, 3}};
  for (std::size_t c = 0; c < xs.size(); ++c) {
    const auto a = u_fraction(xs[c], us[c]);
    for (std::size_t s = 0; s < xs[c].size(); ++s) {
      const int n = 100000;
      const double e = brute_force_fraction_sd(xs[c], us[c], s, n, 300 + c);
      const double se = e / std::sqrt(2.0 * (n - 1));
      EXPECT_LE(std::abs(a[s] - e), 5 * se + 1e-12) << "case " << c << " subset " << s;
    }
  }
}

TEST(UAllocationError, Examples) {
  EXPECT_DOUBLE_EQ(u_allocation_error(0.3, 0.4), 0.5);
  EXPECT_EQ(u_allocation_error(0, 0), 0.0);
  EXPECT_EQ(u_allocation_error(0.42, 0), 0.42);
}

TEST(DisplayUncertainty, Bands) {
  const auto in = hca_display_uncertainty(25);
  EXPECT_NEAR(in.u_d, 0.05 / kSqrt3, 1e-15);
  EXPECT_FALSE(in.placeholder_band);
  const auto out = hca_display_uncertainty(8);
  EXPECT_NEAR(out.u_d, 0.08 / kSqrt3, 1e-15);
  EXPECT_TRUE(out.placeholder_band);
}

TEST(UncertaintyProperties, HomogeneousAndNonNegative) {
  oracle::Gen g(301);
  for (int c = 0; c < 300; ++c) {
    const double s = g.uniform(0.1, 10);
    const double q = g.uniform(1, 500);
    const MeterUncertainties rel{g.uniform(0, 0.01), g.uniform(0, 0.01), g.uniform(0, 0.01), g.uniform(0, 0.01)};
    const double uco = g.uniform(0, 5);
    const double a = u_reference_energy(q, rel, uco);
    EXPECT_GE(a, 0.0);
    EXPECT_NEAR(u_reference_energy(s * q, rel, s * uco), s * a, 1e-12 * s * a + 1e-15);

    const std::size_t n = static_cast<std::size_t>(g.integer(2, 8));
    const auto x = g.positive_vector(n, 1, 100);
    const auto u = g.positive_vector(n, 0, 3);
    std::vector<double> su(n);
    for (std::size_t k = 0; k < n; ++k) su[k] = s * u[k];
    const auto f = u_fraction(x, u);
    const auto fs = u_fraction(x, su);
    for (std::size_t k = 0; k < n; ++k) {
      EXPECT_GE(f[k], 0.0);
      EXPECT_NEAR(fs[k], s * f[k], 1e-12 * (1 + s * f[k]));
    }
    const double e1 = g.uniform(0, 2), e2 = g.uniform(0, 2);
    EXPECT_NEAR(u_allocation_error(s * e1, s * e2), s * u_allocation_error(e1, e2), 1e-12 * s);
    EXPECT_NEAR(u_sum(su), s * u_sum(u), 1e-12 * s * (1 + u_sum(u)));
  }
}

TEST(MonteCarlo, AgreesWithinThreeStandardErrors) {
  const std::vector<PropagationCase> cases{
      ReferenceEnergyCase{100, {}, 0.0},
      ReferenceEnergyCase{100, {}, 3.0},
      HcaUnitsCase{100, 0.05 / kSqrt3},
      HcaUnitsCase{100, 0.0},
      EstimatedEnergyCase{100, 0.01, default_u_k(), 0.005},
      FractionCase{{50, 50}, {1, 1}, 0},
      AllocationErrorCase{0.3, 0.4},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto r = monte_carlo_check(cases[i], 100000, 17 + i);
    EXPECT_LE(std::abs(r.z_score), 3.0) << "case " << i;
    EXPECT_EQ(r.draws, 100000u);
  }
}

TEST(MonteCarlo, SkewedFractionWithinFive) {
  const auto r = monte_carlo_check(FractionCase{{100, 1e-3}, {1, 1e-4}, 0}, 100000, 5);
  EXPECT_LE(std::abs(r.z_score), 5.0);
}

TEST(MonteCarlo, ZeroUncertaintyIsExactlyZero) {
  const auto r = monte_carlo_check(EstimatedEnergyCase{100, 0, 0, 0}, 10000, 1);
  EXPECT_EQ(r.empirical, 0.0);
  EXPECT_EQ(r.analytic, 0.0);
  EXPECT_EQ(r.z_score, 0.0);
}

TEST(MonteCarlo, TooFewDraws) {
  EXPECT_THROW(monte_carlo_check(AllocationErrorCase{0.3, 0.4}, 100, 1), ConfigError);
}

TEST(MonteCarlo, DeterministicPerSeed) {
  const PropagationCase c = FractionCase{{10, 30, 60}, {0.5, 1, 2}, 2};
  EXPECT_EQ(monte_carlo_check(c, 20000, 9).empirical, monte_carlo_check(c, 20000, 9).empirical);
}
