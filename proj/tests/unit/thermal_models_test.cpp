#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "heatalloc/errors.hpp"
#include "heatalloc/thermal_models.hpp"
#include "oracles.hpp"

using namespace heatalloc;

namespace {

IntegrationPeriod hours(double h) {
  return IntegrationPeriod{0, 0, static_cast<Timestamp>(h * 3600.0)};
}

// Constant trace sampled every `step` seconds over [0, end].
std::vector<ScalarSample> flat(double value, Timestamp end, Timestamp step = 600) {
  std::vector<ScalarSample> s;
  for (Timestamp t = 0; t <= end; t += step) s.push_back({t, value});
  return s;
}

}  // namespace

TEST(En442Power, BaseDifferenceGivesNominal) { EXPECT_DOUBLE_EQ(en442_power(1200, 1.3, 70, 20), 1200.0); }

TEST(En442Power, HalfDifferenceMatchesOracle) {
  const double expected = oracle::powered_ratio(1200, 25, 50, 1.3);
  EXPECT_NEAR(expected, 487.35, 5e-3);
  EXPECT_NEAR(en442_power(1200, 1.3, 45, 20), expected, 1e-12 * expected);
}

TEST(En442Power, NoDifferenceOrColderRadiatorGivesZero) {
  EXPECT_EQ(en442_power(1200, 1.3, 20, 20), 0.0);
  EXPECT_EQ(en442_power(1200, 1.3, 15, 20), 0.0);
}

TEST(KqFromEn442, MatchesOracle) {
  EXPECT_NEAR(kq_from_en442(1000, 1.3), oracle::powered_ratio(1000, 60, 50, 1.3), 1e-10);
  EXPECT_NEAR(kq_from_en442(1000, 1.3), 1267.46, 5e-3);
  EXPECT_DOUBLE_EQ(kq_from_en442(1000, 1.0), 1200.0);
  EXPECT_NEAR(kq_from_en442(500, 1.3), 633.73, 5e-3);
}

TEST(HcaAllocationUnits, BaseDifferenceTenHours) {
  const auto ts = flat(80, 36000);
  const auto ta = flat(20, 36000);
  EXPECT_NEAR(hca_allocation_units(ts, ta, 1.3, {}, hours(10)), 10.0, 1e-12);
  EXPECT_NEAR(hca_allocation_units(ts, ta, 1.3, {2.0, 0.5, 1.0}, hours(10)), 10.0, 1e-12);
}

TEST(HcaAllocationUnits, HalfDifferenceMatchesOracle) {
  const auto ts = flat(50, 36000);
  const auto ta = flat(20, 36000);
  const double expected = oracle::powered_ratio(10.0, 30, 60, 1.3);
  EXPECT_NEAR(expected, 4.0613, 5e-5);
  EXPECT_NEAR(hca_allocation_units(ts, ta, 1.3, {}, hours(10)), expected, 1e-12);
}

TEST(HcaAllocationUnits, RatingsScaleLinearly) {
  oracle::Gen g(11);
  for (int c = 0; c < 50; ++c) {
    std::vector<ScalarSample> ts, ta;
    for (Timestamp t = 0; t <= 7200; t += 300) {
      ts.push_back({t, g.uniform(15, 80)});
      ta.push_back({t, g.uniform(18, 24)});
    }
    const double base = hca_allocation_units(ts, ta, 1.3, {}, hours(2));
    const double kq = g.uniform(0.1, 3), kc = g.uniform(0.1, 3), kt = g.uniform(0.1, 3);
    EXPECT_NEAR(hca_allocation_units(ts, ta, 1.3, {kq, kc, kt}, hours(2)), kq * kc * kt * base,
                1e-12 * (1 + base));
  }
}

TEST(HcaEnergyTerm, UnitConversion) {
  EXPECT_DOUBLE_EQ(hca_energy_term(10.0, 1000.0), 10.0);
  EXPECT_NEAR(hca_energy_term(4.0613, 1000.0), 4.0613, 1e-12);
  EXPECT_EQ(hca_energy_term(0.0, 1234.0), 0.0);
}

TEST(StvEnergyTerm, Examples) {
  EXPECT_NEAR(stv_energy_term(flat(70, 7200), flat(20, 7200), 1.3, 2000, hours(2)), 4.0, 1e-12);
  const double expected = oracle::powered_ratio(2000.0 * 2.0 / 1000.0, 25, 50, 1.3);
  EXPECT_NEAR(expected, 1.6245, 5e-5);
  EXPECT_NEAR(stv_energy_term(flat(45, 7200), flat(20, 7200), 1.3, 2000, hours(2)), expected, 1e-12);
  EXPECT_EQ(stv_energy_term(flat(21, 7200), flat(21, 7200), 1.3, 2000, hours(2)), 0.0);
}

TEST(StvEnergyTerm, NegativeDifferencesContributeNothing) {
  EXPECT_EQ(stv_energy_term(flat(15, 7200), flat(20, 7200), 1.3, 2000, hours(2)), 0.0);
}

TEST(StvEnergyTerm, UncoveredPeriodThrows) {
  EXPECT_THROW(stv_energy_term(flat(45, 3600), flat(20, 3600), 1.3, 2000, hours(2)), DataError);
}

TEST(NormalizedIntegral, MonotoneInConstantDifference) {
  double last = -1.0;
  for (double dt = 0.0; dt <= 80.0; dt += 2.5) {
    const double v = stv_energy_term(flat(20 + dt, 3600), flat(20, 3600), 1.3, 1000, hours(1));
    EXPECT_GE(v, last);
    last = v;
  }
}

TEST(NormalizedIntegral, AdditiveOverTime) {
  oracle::Gen g(5);
  for (int c = 0; c < 100; ++c) {
    std::vector<ScalarSample> tin, tr;
    for (Timestamp t = 0; t <= 6 * 3600; t += 300) {
      tin.push_back({t, g.uniform(25, 75)});
      tr.push_back({t, g.uniform(18, 24)});
    }
    const Timestamp b = g.integer(1, 6 * 3600 - 1);
    // Any split point, with a linear integrand (n = 1).
    const double whole = stv_energy_term(tin, tr, 1.0, 1000, {0, 0, 6 * 3600});
    const double left = stv_energy_term(tin, tr, 1.0, 1000, {0, 0, b});
    const double right = stv_energy_term(tin, tr, 1.0, 1000, {1, b, 6 * 3600});
    EXPECT_NEAR(left + right, whole, 1e-9 * whole);
  }
}

TEST(NormalizedIntegral, AdditiveAtSampleInstants) {
  oracle::Gen g(6);
  for (int c = 0; c < 100; ++c) {
    std::vector<ScalarSample> tin, tr;
    for (Timestamp t = 0; t <= 6 * 3600; t += 300) {
      tin.push_back({t, g.uniform(25, 75)});
      tr.push_back({t, g.uniform(18, 24)});
    }
    const Timestamp b = 300 * g.integer(1, 71);
    const double whole = stv_energy_term(tin, tr, 1.3, 1000, {0, 0, 6 * 3600});
    const double parts = stv_energy_term(tin, tr, 1.3, 1000, {0, 0, b}) +
                         stv_energy_term(tin, tr, 1.3, 1000, {1, b, 6 * 3600});
    EXPECT_NEAR(parts, whole, 1e-9 * whole);
  }
}

TEST(NormalizedIntegral, TrapezoidExactForLinearDifferenceWithUnitExponent) {
  // dT rises linearly from 10 K to 60 K over 5 h; n = 1 makes the integrand linear.
  std::vector<ScalarSample> tin{{0, 30.0}, {5 * 3600, 80.0}};
  std::vector<ScalarSample> tr{{0, 20.0}, {5 * 3600, 20.0}};
  const double exact = 1000.0 * (10.0 + 60.0) / 2.0 / 50.0 * 5.0 / 1000.0;
  EXPECT_NEAR(stv_energy_term(tin, tr, 1.0, 1000, {0, 0, 5 * 3600}), exact, 1e-14 * exact);
  // Clipped to an interior window, still exact.
  const double part = 1000.0 * (20.0 + 40.0) / 2.0 / 50.0 * 2.0 / 1000.0;
  EXPECT_NEAR(stv_energy_term(tin, tr, 1.0, 1000, {0, 3600, 3 * 3600}), part, 1e-14 * part);
}

TEST(NormalizedIntegral, BoundedByPeakDifference) {
  oracle::Gen g(8);
  for (int c = 0; c < 50; ++c) {
    std::vector<StvSample> s;
    double peak = 0.0;
    for (Timestamp t = 0; t <= 3 * 3600; t += 300) {
      StvSample x{t, g.uniform(20, 70), g.uniform(18, 24), 50};
      peak = std::max(peak, x.inlet_c - x.room_c);
      s.push_back(x);
    }
    const double v = stv_normalized_integral(s, 1.3, {0, 0, 3 * 3600});
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 3.0 * std::pow(peak / 50.0, 1.3) * (1 + 1e-12));
  }
}

TEST(HcaNormalizedUnits, InterpolatesCountsAtBoundaries) {
  DeviceTimeSeries hca{"H", "R1", 100.0, std::vector<HcaSample>{{0, 0}, {3600, 100}, {7200, 300}}};
  EXPECT_NEAR(hca_normalized_units(hca, {0, 0, 7200}), 3.0, 1e-12);
  EXPECT_NEAR(hca_normalized_units(hca, {0, 1800, 5400}), 1.5, 1e-12);
}

TEST(IntegralColumn, RoutesByMethod) {
  Dataset d;
  d.radiators.push_back({"R1", 1000, 1.3, 1, 1, 1, 1000, "A"});
  d.series.push_back({"H1", "R1", 10.0, std::vector<HcaSample>{{0, 0}, {10800, 30}}});
  d.series.push_back(
      {"S1", "R1", 1.0, std::vector<StvSample>{{0, 70, 20, 100}, {10800, 70, 20, 100}}});
  const IntegrationPeriod p{0, 0, 10800};
  EXPECT_NEAR(integral_column(d, Method::Stv, "R1", p).value, 3.0, 1e-12);
  EXPECT_NEAR(integral_column(d, Method::Hca, "R1", p).value, 3.0, 1e-12);
  EXPECT_THROW(integral_column(d, Method::Hca, "R9", p), DataError);
}

TEST(IntegralColumn, HeaterOffGivesZero) {
  Dataset d;
  d.radiators.push_back({"R1", 1000, 1.3, 1, 1, 1, 1000, "A"});
  d.series.push_back(
      {"S1", "R1", 1.0, std::vector<StvSample>{{0, 19, 20, 0}, {10800, 20, 20, 0}}});
  EXPECT_EQ(integral_column(d, Method::Stv, "R1", {0, 0, 10800}).value, 0.0);
}
