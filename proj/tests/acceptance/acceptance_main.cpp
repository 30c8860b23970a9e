// Acceptance suite: one PASS/FAIL line per criterion, details indented below.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "heatalloc/allocation_metrics.hpp"
#include "heatalloc/errors.hpp"
#include "heatalloc/estimator.hpp"
#include "heatalloc/evaluation.hpp"
#include "heatalloc/io.hpp"
#include "heatalloc/sensitivity.hpp"
#include "heatalloc/simulator.hpp"
#include "heatalloc/uncertainty.hpp"
#include "illposed.hpp"
#include "oracles.hpp"

using namespace heatalloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::vector<std::string> details;
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// The off-design season used by the trend and improvement criteria: rated
// outputs off by 10-40%, installed exponents off by up to 0.05, 2% allocator
// gain spread, 0.1 K valve sensor noise.
ScenarioConfig off_design(std::uint64_t seed) {
  ScenarioConfig c;
  c.seed = seed;
  c.valve_mode = ValveMode::Alternating;
  c.exponent_spread = 0.05;
  c.noise.stv_temperature_sd = 0.1;
  c.noise.hca_display_deviation = 0.02;
  return c;
}

// 1 -----------------------------------------------------------------------

Outcome exact_recovery() {
  Outcome o;
  o.pass = true;
  for (const Method m : {Method::Hca, Method::Stv}) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg = fixture::exact_scenario(ScenarioConfig{});
    cfg.seed = 2024;
    cfg.radiator_count = 20;
    cfg.duration_days = 30;
    if (m == Method::Stv) cfg.physics = Physics::StvMatched;
    const auto sim = simulate_season(cfg);
    const auto sm = assemble(sim.dataset, m);
    const auto r = solve_rls(sm, prior_vector(sim.dataset, m), 1e-8);
    const double secs = seconds_since(t0);
    const auto truth = as_vector(m == Method::Hca ? sim.truth.theta_true_hca_w : sim.truth.theta_true_stv_w);
    const double err = (r.theta_hat_w - truth).lpNorm<Eigen::Infinity>() / truth.lpNorm<Eigen::Infinity>();
    double min_dev = 1e9;
    for (const double d : sim.truth.deviation) min_dev = std::min(min_dev, d);
    const bool ok = err <= 1e-6 && secs <= 10.0 && min_dev > 1.0;
    o.pass = o.pass && ok;
    o.details.push_back(fmt("%s: rel inf error %.3g (<= 1e-6), %.2f s (<= 10 s), min deviation %.3f",
                            m == Method::Hca ? "hca" : "stv", err, secs, min_dev));
  }
  return o;
}

// 2 -----------------------------------------------------------------------

Outcome solver_correctness() {
  oracle::Gen g(2);
  double worst_res = 0.0, worst_prior = 0.0, worst_ols = 0.0;
  int ols_cases = 0;
  for (int c = 0; c < 1000; ++c) {
    const int m = g.integer(1, 50), k = g.integer(1, 50);
    const auto sm = fixture::random_system(g, m, k);
    Eigen::VectorXd prior(k);
    for (int j = 0; j < k; ++j) prior(j) = g.uniform(0, 3000);
    const double lambda = std::pow(10.0, g.uniform(-6, 3));
    const auto r = solve_rls(sm, prior, lambda);
    const Eigen::VectorXd th = r.theta_hat_w / 1000.0;
    const Eigen::MatrixXd n = sm.a.transpose() * sm.a + lambda * Eigen::MatrixXd::Identity(k, k);
    const Eigen::VectorXd rhs = sm.a.transpose() * sm.q + lambda * prior / 1000.0;
    worst_res = std::max(worst_res, (n * th - rhs).lpNorm<Eigen::Infinity>() / rhs.lpNorm<Eigen::Infinity>());

    const Eigen::VectorXd big = solve_rls(sm, prior, 1e12).theta_hat_w;
    worst_prior = std::max(worst_prior, (big - prior).lpNorm<Eigen::Infinity>() / prior.lpNorm<Eigen::Infinity>());

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sm.a);
    const auto& sv = svd.singularValues();
    if (m >= k && sv(sv.size() - 1) > 0 && sv(0) / sv(sv.size() - 1) < 1e3) {
      ++ols_cases;
      const Eigen::VectorXd ols = sm.a.colPivHouseholderQr().solve(sm.q) * 1000.0;
      const Eigen::VectorXd zero = solve_rls(sm, prior, 0.0).theta_hat_w;
      worst_ols = std::max(worst_ols, (zero - ols).lpNorm<Eigen::Infinity>() / ols.lpNorm<Eigen::Infinity>());
    }
  }
  Outcome o;
  o.pass = worst_res <= 1e-8 && worst_prior <= 1e-6 && worst_ols <= 1e-8 && ols_cases > 100;
  o.details.push_back(fmt("worst normal-equation residual %.3g (<= 1e-8) over 1000 systems", worst_res));
  o.details.push_back(fmt("lambda = 1e12: worst distance to prior %.3g (<= 1e-6)", worst_prior));
  o.details.push_back(fmt("lambda = 0: worst distance to QR least squares %.3g (<= 1e-8) on %d well-conditioned systems",
                          worst_ols, ols_cases));
  return o;
}

// 3 -----------------------------------------------------------------------

Outcome path_monotonicity() {
  oracle::Gen g(3);
  const auto grid = log_grid(1e-6, 1e3, 20);
  int violations = 0;
  for (int c = 0; c < 100; ++c) {
    const int k = g.integer(1, 50);
    const auto sm = fixture::random_system(g, g.integer(1, 50), k);
    Eigen::VectorXd prior(k);
    for (int j = 0; j < k; ++j) prior(j) = g.uniform(0, 3000);
    double res = 0.0, dev = std::numeric_limits<double>::infinity();
    for (const double l : grid) {
      const auto r = solve_rls(sm, prior, l);
      if (r.residual_norm_kwh < res * (1 - 1e-12)) ++violations;
      if (r.prior_deviation_norm_w > dev * (1 + 1e-12)) ++violations;
      res = r.residual_norm_kwh;
      dev = r.prior_deviation_norm_w;
    }
  }
  Outcome o;
  o.pass = violations == 0;
  o.details.push_back(fmt("%d monotonicity violations over 100 systems x 20 lambdas", violations));
  return o;
}

// 4 -----------------------------------------------------------------------

Outcome lcurve_quality() {
  const auto grid = default_lambda_grid();
  int within = 0;
  std::vector<double> ratios;
  for (int s = 1; s <= 50; ++s) {
    const auto p = fixture::ill_posed(static_cast<std::uint64_t>(s));
    double best = std::numeric_limits<double>::infinity();
    for (const double l : grid) best = std::min(best, (solve_rls(p.sm, p.theta0_w, l).theta_hat_w - p.theta_true_w).norm());
    double chosen = std::numeric_limits<double>::infinity();
    try {
      const auto sel = lcurve_select(p.sm, p.theta0_w, grid);
      chosen = (solve_rls(p.sm, p.theta0_w, sel.lambda_star).theta_hat_w - p.theta_true_w).norm();
    } catch (const DegenerateCurveError&) {
    }
    ratios.push_back(chosen / best);
    if (chosen <= 2.0 * best) ++within;
  }
  std::sort(ratios.begin(), ratios.end());
  Outcome o;
  o.pass = within >= 45;
  o.details.push_back(fmt("%d/50 problems within 2x of the grid-optimal error (need >= 45)", within));
  o.details.push_back(fmt("error ratio median %.3f, worst %.3f", ratios[25], ratios.back()));
  return o;
}

// 5 -----------------------------------------------------------------------

Outcome table_consistency() {
  const double a = global_uncertainty(0.70, 0.18);
  const double b = global_uncertainty(0.21, 0.08);
  Outcome o;
  o.pass = std::abs(a - 0.73) <= 0.01 && std::abs(b - 0.22) <= 0.01;
  o.details.push_back(fmt("sqrt(0.70^2 + 0.18^2) = %.4f vs printed 0.73", a));
  o.details.push_back(fmt("sqrt(0.21^2 + 0.08^2) = %.4f vs printed 0.22", b));
  return o;
}

// 6 -----------------------------------------------------------------------

Outcome heat_loss_trend() {
  const std::vector<double> levels{0.0, 0.05, 0.10, 0.20};
  int monotone = 0;
  Outcome o;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto rows = sensitivity_suite(off_design(s), SensitivityAxis::HeatLoss, levels);
    bool ok = true;
    std::string line = fmt("seed %2d MAPE", static_cast<int>(s));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      line += fmt(" %.4f", rows[i].improved.mape);
      if (i > 0 && rows[i].improved.mape < rows[i - 1].improved.mape) ok = false;
    }
    line += fmt("  lambda %.3g -> %.3g", rows.front().lambda, rows.back().lambda);
    line += ok ? "  monotone" : "";
    o.details.push_back(line);
    monotone += ok;
  }
  o.pass = monotone >= 8;
  o.details.insert(o.details.begin(), fmt("%d/10 seeds non-decreasing over losses 0/5/10/20%% (need >= 8)", monotone));
  return o;
}

// 7 -----------------------------------------------------------------------

Outcome improvement_claim() {
  std::vector<double> ratios;
  Outcome o;
  const UncertaintyConfig u;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto sim = simulate_season(off_design(s));
    const auto ref = reference_from_truth(sim.truth, u);
    const auto subsets = per_radiator_subsets(sim.truth.radiator_ids);
    const auto nom = evaluate_allocation(nominal_hca_allocation(sim.dataset, u), ref, subsets);
    const auto run = run_estimation(sim.dataset, Method::Hca, {});
    const auto imp = evaluate_allocation(improved_allocation(sim.dataset, Method::Hca, run.result, u), ref, subsets);
    const double r = imp.indicators.mape / nom.indicators.mape;
    ratios.push_back(r);
    o.details.push_back(fmt("seed %2d nominal %.3f improved %.3f ratio %.3f (lambda %.3g)", static_cast<int>(s),
                            nom.indicators.mape, imp.indicators.mape, r, run.result.lambda));
  }
  auto sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[9] + sorted[10]);
  o.pass = median <= 0.8;
  o.details.insert(o.details.begin(),
                   fmt("median improved/nominal MAPE %.3f (<= 0.8); min %.3f q1 %.3f q3 %.3f max %.3f", median,
                       sorted.front(), 0.5 * (sorted[4] + sorted[5]), 0.5 * (sorted[14] + sorted[15]), sorted.back()));
  return o;
}

// 8 -----------------------------------------------------------------------

Outcome monte_carlo_agreement() {
  struct Case {
    const char* name;
    PropagationCase model;
    double limit;
  };
  const double s3 = std::sqrt(3.0);
  const std::vector<Case> cases{
      {"reference energy", ReferenceEnergyCase{100, {}, 0.0}, 3},
      {"reference energy + cut-off", ReferenceEnergyCase{100, {}, 3.0}, 3},
      {"allocator units", HcaUnitsCase{100, 0.05 / s3}, 3},
      {"estimated energy", EstimatedEnergyCase{100, 0.01, default_u_k(), 0.005}, 3},
      {"fraction, equal shares", FractionCase{{50, 50}, {1, 1}, 0}, 3},
      {"fraction, three subsets", FractionCase{{20, 30, 50}, {0.5, 0.8, 1.2}, 1}, 3},
      {"fraction, skewed shares", FractionCase{{100, 1e-3}, {1, 1e-4}, 0}, 5},
      {"allocation error", AllocationErrorCase{0.3, 0.4}, 3},
  };
  Outcome o;
  o.pass = true;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto r = monte_carlo_check(cases[i].model, 100000, 800 + i);
    const bool ok = std::abs(r.z_score) <= cases[i].limit;
    o.pass = o.pass && ok;
    o.details.push_back(fmt("%-28s analytic %.6g empirical %.6g z %+.2f (|z| <= %.0f)", cases[i].name, r.analytic,
                            r.empirical, r.z_score, cases[i].limit));
  }
  return o;
}

// 9 -----------------------------------------------------------------------

Outcome metric_identities() {
  oracle::Gen g(9);
  int bad_sum = 0, bad_err = 0, bad_scale = 0, bad_self = 0;
  for (int c = 0; c < 1000; ++c) {
    const auto n = static_cast<std::size_t>(g.integer(2, 40));
    const auto x = g.positive_vector(n);
    const auto ref = g.positive_vector(n);
    const auto f = fractions(x);
    const auto fr = fractions(ref);
    const auto e = allocation_errors(f, fr);
    if (std::abs(std::accumulate(f.begin(), f.end(), 0.0) - 100.0) > 1e-9) ++bad_sum;
    if (std::abs(std::accumulate(e.begin(), e.end(), 0.0)) > 1e-9) ++bad_err;

    // Independent positive scale factors for allocation and reference.
    const double s = std::pow(10.0, g.uniform(-4, 4));
    const double t = std::pow(10.0, g.uniform(-4, 4));
    auto xs = x, refs = ref;
    for (auto& v : xs) v *= s;
    for (auto& v : refs) v *= t;
    const auto fs = fractions(refs);
    const auto a = global_indicators(e, fr, std::span<const double>(e));
    const auto b_e = allocation_errors(fractions(xs), fs);
    const auto b = global_indicators(b_e, fs, std::span<const double>(b_e));
    const auto close = [](double p, double q) { return std::abs(p - q) <= 1e-9 * (1 + std::abs(p)); };
    if (!close(a.mape, b.mape) || !close(a.sigma, b.sigma) || !close(a.max, b.max) || !close(a.min, b.min)) ++bad_scale;
    if (*a.delta_e_hca != 0.0 || *a.p_l != 0.0) ++bad_self;
  }
  Outcome o;
  o.pass = bad_sum + bad_err + bad_scale + bad_self == 0;
  o.details.push_back(fmt("fraction sums off by > 1e-9: %d/1000", bad_sum));
  o.details.push_back(fmt("error sums off by > 1e-9: %d/1000", bad_err));
  o.details.push_back(fmt("indicators changed under scaling: %d/1000", bad_scale));
  o.details.push_back(fmt("self-baseline Delta E != 0 or P_L != 0: %d/1000", bad_self));
  return o;
}

// 10 ----------------------------------------------------------------------

std::vector<std::pair<std::string, std::string>> tree(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    out.emplace_back(fs::relative(e.path(), dir).string(), os.str());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism_round_trip() {
  const fs::path root = fs::temp_directory_path() / "heatalloc_acceptance_c10";
  fs::remove_all(root);
  ScenarioConfig cfg = off_design(77);
  cfg.duration_days = 7;
  cfg.emit_reference_meters = true;
  cfg.noise.reference_flow_sd_rel = 0.01;
  io::write_dataset(simulate_season(cfg).dataset, root / "a");
  io::write_dataset(simulate_season(cfg).dataset, root / "b");
  const auto a = tree(root / "a");
  const bool identical = a == tree(root / "b");

  io::write_dataset(io::read_dataset(root / "a"), root / "c");
  const bool reemit = a == tree(root / "c");
  fs::remove_all(root);

  Outcome o;
  o.pass = identical && reemit && a.size() > 80;
  o.details.push_back(fmt("same seed twice: %zu files %s", a.size(), identical ? "byte-identical" : "DIFFER"));
  o.details.push_back(std::string("simulate -> ingest -> re-emit at 12 significant digits: ") +
                      (reemit ? "identical" : "DIFFERS"));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact recovery", exact_recovery},
      {"solver correctness", solver_correctness},
      {"tikhonov path monotonicity", path_monotonicity},
      {"l-curve quality", lcurve_quality},
      {"published table consistency", table_consistency},
      {"heat-loss trend", heat_loss_trend},
      {"improvement over nominal allocators", improvement_claim},
      {"monte-carlo agreement", monte_carlo_agreement},
      {"metric identities", metric_identities},
      {"determinism and round trip", determinism_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.details.push_back(std::string("threw: ") + e.what());
    }
    std::printf("%s %2zu %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, seconds_since(t0));
    for (const auto& d : o.details) std::printf("       %s\n", d.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
