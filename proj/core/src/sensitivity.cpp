#include "heatalloc/sensitivity.hpp"

#include <future>
#include <random>

#include "heatalloc/errors.hpp"

namespace heatalloc {

std::string_view to_string(SensitivityAxis axis) {
  switch (axis) {
    case SensitivityAxis::Frequency: return "frequency";
    case SensitivityAxis::HeatLoss: return "heat_loss";
    case SensitivityAxis::PriorOffset: return "prior_offset";
    case SensitivityAxis::PriorUniform: return "prior_uniform";
  }
  return "?";
}

SensitivityAxis parse_sensitivity_axis(std::string_view text) {
  if (text == "frequency") return SensitivityAxis::Frequency;
  if (text == "heat_loss") return SensitivityAxis::HeatLoss;
  if (text == "prior_offset") return SensitivityAxis::PriorOffset;
  if (text == "prior_uniform") return SensitivityAxis::PriorUniform;
  throw ConfigError("unknown sensitivity axis '" + std::string(text) +
                    "' (expected frequency, heat_loss, prior_offset or prior_uniform)");
}

namespace {

struct Evaluated {
  double lambda = 0.0;
  AllocationReport improved;
  AllocationReport nominal;
};

Evaluated evaluate_once(const Simulation& sim, const Eigen::VectorXd& prior,
                        const SensitivityOptions& options) {
  const UncertaintyConfig ucfg;
  const Dataset& ds = sim.dataset;
  const SubsetMap subsets = options.per_radiator ? per_radiator_subsets(sim.truth.radiator_ids)
                                                 : subsets_from_registry(ds);
  const RadiatorAllocation reference = reference_from_truth(sim.truth, ucfg);
  Evaluated out;
  out.nominal = evaluate_allocation(nominal_hca_allocation(ds, ucfg), reference, subsets);
  const EstimationRun run = run_estimation(ds, Method::Hca, options.lambda, prior);
  out.lambda = run.result.lambda;
  out.improved = evaluate_allocation(improved_allocation(ds, Method::Hca, run.result, ucfg),
                                     reference, subsets, &out.nominal);
  return out;
}

SensitivityRow to_row(double level, const Evaluated& e) {
  SensitivityRow row;
  row.level = level;
  row.lambda = e.lambda;
  row.improved = e.improved.indicators;
  row.nominal = e.nominal.indicators;
  row.mean_u_error = e.improved.mean_u_error;
  row.u_global = e.improved.u_global;
  return row;
}

void accumulate(GlobalIndicators& acc, const GlobalIndicators& g) {
  acc.sigma += g.sigma;
  acc.max += g.max;
  acc.min += g.min;
  acc.mape += g.mape;
  if (g.delta_e_hca) acc.delta_e_hca = acc.delta_e_hca.value_or(0.0) + *g.delta_e_hca;
  if (g.p_l) acc.p_l = acc.p_l.value_or(0.0) + *g.p_l;
}

void divide(GlobalIndicators& g, double n) {
  g.sigma /= n;
  g.max /= n;
  g.min /= n;
  g.mape /= n;
  if (g.delta_e_hca) *g.delta_e_hca /= n;
  if (g.p_l) *g.p_l /= n;
}

SensitivityRow run_level(const ScenarioConfig& base, const Simulation* shared,
                         SensitivityAxis axis, double level, std::size_t level_index,
                         const SensitivityOptions& options) {
  switch (axis) {
    case SensitivityAxis::Frequency: {
      ScenarioConfig cfg = base;
      cfg.sampling_frequency_per_hour = level;
      const Simulation sim = simulate_season(cfg);
      return to_row(level, evaluate_once(sim, prior_vector(sim.dataset, Method::Hca), options));
    }
    case SensitivityAxis::HeatLoss: {
      if (!(level >= 0.0 && level <= 0.5)) throw ConfigError("heat-loss level must lie in [0, 0.5]");
      Simulation sim = *shared;
      // Losses scale the building meter only; radiator energies are unchanged.
      for (std::size_t i = 0; i < sim.truth.total_kwh.size(); ++i) {
        double s = 0.0;
        for (const double e : sim.truth.radiator_energy_kwh[i]) s += e;
        sim.truth.total_kwh[i] = (1.0 + level) * s;
      }
      sim.truth.loss_fraction = level;
      sim.dataset.total_energy_kwh = sim.truth.total_kwh;
      return to_row(level, evaluate_once(sim, prior_vector(sim.dataset, Method::Hca), options));
    }
    case SensitivityAxis::PriorOffset: {
      const Eigen::VectorXd prior = prior_vector(shared->dataset, Method::Hca) * (1.0 + level);
      return to_row(level, evaluate_once(*shared, prior, options));
    }
    case SensitivityAxis::PriorUniform: {
      if (options.uniform_draws == 0) throw ConfigError("uniform_draws must be >= 1");
      const Eigen::VectorXd nominal = prior_vector(shared->dataset, Method::Hca);
      std::seed_seq seq{static_cast<std::uint32_t>(base.seed),
                        static_cast<std::uint32_t>(base.seed >> 32), 0x5eedu,
                        static_cast<std::uint32_t>(level_index)};
      std::mt19937_64 rng(seq);
      std::uniform_real_distribution<double> u(-level, level);
      SensitivityRow avg;
      avg.level = level;
      for (std::size_t d = 0; d < options.uniform_draws; ++d) {
        Eigen::VectorXd prior = nominal;
        for (Eigen::Index j = 0; j < prior.size(); ++j) prior(j) *= 1.0 + (level > 0.0 ? u(rng) : 0.0);
        const SensitivityRow r = to_row(level, evaluate_once(*shared, prior, options));
        avg.lambda += r.lambda;
        accumulate(avg.improved, r.improved);
        accumulate(avg.nominal, r.nominal);
        avg.mean_u_error += r.mean_u_error;
        avg.u_global += r.u_global;
      }
      const auto n = static_cast<double>(options.uniform_draws);
      avg.lambda /= n;
      divide(avg.improved, n);
      divide(avg.nominal, n);
      avg.mean_u_error /= n;
      avg.u_global /= n;
      return avg;
    }
  }
  throw ConfigError("unknown sensitivity axis");
}

}  // namespace

std::vector<SensitivityRow> sensitivity_suite(const ScenarioConfig& base, SensitivityAxis axis,
                                              std::span<const double> levels,
                                              const SensitivityOptions& options) {
  if (levels.empty()) throw ConfigError("sensitivity levels must not be empty");
  std::optional<Simulation> shared;
  if (axis != SensitivityAxis::Frequency) shared = simulate_season(base);
  const Simulation* sp = shared ? &*shared : nullptr;

  std::vector<SensitivityRow> rows(levels.size());
  if (options.parallel && levels.size() > 1) {
    std::vector<std::future<SensitivityRow>> jobs;
    jobs.reserve(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
      jobs.push_back(std::async(std::launch::async, run_level, std::cref(base), sp, axis,
                                levels[i], i, std::cref(options)));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) rows[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      rows[i] = run_level(base, sp, axis, levels[i], i, options);
    }
  }
  return rows;
}

}  // namespace heatalloc
