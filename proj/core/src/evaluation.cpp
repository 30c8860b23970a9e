#include "heatalloc/evaluation.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "heatalloc/errors.hpp"
#include "heatalloc/thermal_models.hpp"

namespace heatalloc {

namespace {

IntegrationPeriod season_span(const Dataset& dataset) {
  if (dataset.periods.empty()) throw DataError("dataset has no integration periods");
  return IntegrationPeriod{0, dataset.periods.front().start, dataset.periods.back().end};
}

std::string format_pct(double x) {
  std::ostringstream os;
  os.precision(3);
  os << 100.0 * x << "%";
  return os.str();
}

// Mean surface-to-air difference over the time the allocator was counting,
// recovered from the counts themselves.
double mean_active_difference(const std::vector<HcaSample>& v, double counts_per_unit_hour,
                              double exponent_n) {
  double units = 0.0;
  double hours = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double dc = v[k].count - v[k - 1].count;
    if (dc > 0.0) {
      units += dc / counts_per_unit_hour;
      hours += static_cast<double>(v[k].t - v[k - 1].t) / kSecondsPerHour;
    }
  }
  if (hours <= 0.0) return 0.0;
  return kHcaBaseDifference * std::pow(units / hours, 1.0 / exponent_n);
}

}  // namespace

std::string_view label(AllocationMethod method) {
  switch (method) {
    case AllocationMethod::HcaNominal: return "hca_nominal";
    case AllocationMethod::HcaImproved: return "hca_improved";
    case AllocationMethod::StvImproved: return "stv_improved";
  }
  return "?";
}

AllocationMethod parse_allocation_method(std::string_view text) {
  if (text == "hca_nominal") return AllocationMethod::HcaNominal;
  if (text == "hca_improved") return AllocationMethod::HcaImproved;
  if (text == "stv_improved") return AllocationMethod::StvImproved;
  throw ConfigError("unknown allocation method '" + std::string(text) +
                    "' (expected hca_nominal, hca_improved or stv_improved)");
}

EstimationRun run_estimation(const Dataset& dataset, Method method, const LambdaPolicy& policy,
                             const std::optional<Eigen::VectorXd>& prior_w) {
  EstimationRun run;
  run.method = method;
  run.sampling = assemble(dataset, method);
  const Eigen::VectorXd prior = prior_w ? *prior_w : prior_vector(dataset, method);
  double lambda = 0.0;
  if (policy.fixed) {
    lambda = *policy.fixed;
  } else {
    run.lcurve = lcurve_select(run.sampling, prior, policy.grid);
    lambda = run.lcurve->lambda_star;
  }
  run.result = solve_rls(run.sampling, prior, lambda);
  return run;
}

RadiatorAllocation nominal_hca_allocation(const Dataset& dataset, const UncertaintyConfig& cfg) {
  const IntegrationPeriod span = season_span(dataset);
  RadiatorAllocation out;
  out.method = std::string(label(AllocationMethod::HcaNominal));
  for (const auto& r : dataset.radiators) {
    const DeviceTimeSeries* s = dataset.find_series(r.id, DeviceKind::Hca);
    if (!s) throw DataError("radiator '" + r.id + "' has no hca series");
    const auto& v = s->as<HcaSample>();
    const std::span<const HcaSample> sv(v);
    const double counts = sample_at(sv, span.end).count - sample_at(sv, span.start).count;
    const double per_count = r.rating_product() / s->counts_per_unit_hour;

    const auto ud = hca_display_uncertainty(
        mean_active_difference(v, s->counts_per_unit_hour, r.exponent_n), cfg.bands);
    if (ud.placeholder_band) {
      out.warnings.push_back(r.id + ": surface-to-air difference outside the documented band, "
                                    "display deviation uses the placeholder bound");
    }
    double u = 0.0;
    if (counts >= 1.0) {
      u = u_hca_units(counts, ud.u_d);
    } else {
      u = std::sqrt(2.0) / (2.0 * std::sqrt(3.0));
      out.warnings.push_back(r.id + ": allocator registered no counts");
    }
    out.radiator_ids.push_back(r.id);
    out.amount.push_back(per_count * counts);
    out.u_amount.push_back(per_count * u);
  }
  return out;
}

RadiatorAllocation improved_allocation(const Dataset& dataset, Method method,
                                       const EstimationResult& estimate,
                                       const UncertaintyConfig& cfg) {
  const IntegrationPeriod span = season_span(dataset);
  if (estimate.radiator_ids.size() != dataset.radiators.size()) {
    throw DataError("estimate covers " + std::to_string(estimate.radiator_ids.size()) +
                    " radiators, dataset has " + std::to_string(dataset.radiators.size()));
  }
  RadiatorAllocation out;
  out.method = std::string(
      label(method == Method::Hca ? AllocationMethod::HcaImproved : AllocationMethod::StvImproved));
  for (std::size_t j = 0; j < dataset.radiators.size(); ++j) {
    const std::string& id = dataset.radiators[j].id;
    if (estimate.radiator_ids[j] != id) {
      throw DataError("estimate radiator order differs from the dataset at '" + id + "'");
    }
    const double column = integral_column(dataset, method, id, span).value;
    const double theta = estimate.theta_hat_w(static_cast<Eigen::Index>(j));
    const double q = theta * column / 1000.0;
    const double u_p = estimate.relative_parameter_uncertainty(j);
    if (!parameter_uncertainty_in_expected_range(u_p)) {
      out.warnings.push_back(id + ": relative parameter uncertainty " + format_pct(u_p) +
                             " outside the expected 0.3%-3% band");
    }
    if (theta < 0.0) out.warnings.push_back(id + ": negative parameter estimate");
    out.radiator_ids.push_back(id);
    out.amount.push_back(q);
    out.u_amount.push_back(u_estimated_energy(q, cfg.u_h, cfg.u_k, std::isfinite(u_p) ? u_p : 0.0));
  }
  return out;
}

RadiatorAllocation reference_from_truth(const GroundTruth& truth, const UncertaintyConfig& cfg) {
  RadiatorAllocation out;
  out.method = "reference";
  out.radiator_ids = truth.radiator_ids;
  out.amount = truth.season_energy_kwh();
  for (const double q : out.amount) out.u_amount.push_back(u_reference_energy(q, cfg.meter, 0.0));
  return out;
}

RadiatorAllocation reference_from_meters(const Dataset& dataset, const WaterProperties& water,
                                         const UncertaintyConfig& cfg, double cutoff_lph) {
  const IntegrationPeriod span = season_span(dataset);
  RadiatorAllocation out;
  out.method = "reference";
  for (const auto& r : dataset.radiators) {
    const DeviceTimeSeries* s = dataset.find_series(r.id, DeviceKind::Dhm);
    if (!s) throw DataError("radiator '" + r.id + "' has no reference meter");
    const ReferenceEnergy e = reference_energy(s->as<DhmSample>(), water, span, cutoff_lph);
    out.radiator_ids.push_back(r.id);
    out.amount.push_back(e.energy_kwh);
    out.u_amount.push_back(
        u_reference_energy(e.energy_kwh, cfg.meter, u_cutoff_correction(e.correction_kwh)));
  }
  return out;
}

SubsetMap subsets_from_registry(const Dataset& dataset) {
  SubsetMap out;
  for (const auto& r : dataset.radiators) {
    if (r.subset_id.empty()) throw DataError("radiator '" + r.id + "' has no subset id");
    out[r.subset_id].push_back(r.id);
  }
  return out;
}

SubsetMap per_radiator_subsets(const std::vector<std::string>& radiator_ids) {
  SubsetMap out;
  for (const auto& id : radiator_ids) out[id].push_back(id);
  return out;
}

AllocationReport evaluate_allocation(const RadiatorAllocation& method,
                                     const RadiatorAllocation& reference,
                                     const SubsetMap& subsets, const AllocationReport* baseline) {
  if (method.radiator_ids != reference.radiator_ids) {
    throw DataError("method and reference cover different radiators");
  }
  if (method.amount.size() != method.radiator_ids.size() ||
      method.u_amount.size() != method.radiator_ids.size() ||
      reference.amount.size() != reference.radiator_ids.size() ||
      reference.u_amount.size() != reference.radiator_ids.size()) {
    throw DataError("allocation vectors differ in length");
  }
  const auto x = aggregate(subsets, method.radiator_ids, method.amount);
  const auto x_ref = aggregate(subsets, reference.radiator_ids, reference.amount);

  // Subset uncertainties: root-sum-square of the members.
  std::vector<double> u2(method.u_amount.size()), u2_ref(reference.u_amount.size());
  for (std::size_t j = 0; j < u2.size(); ++j) {
    u2[j] = method.u_amount[j] * method.u_amount[j];
    u2_ref[j] = reference.u_amount[j] * reference.u_amount[j];
  }
  const auto ux2 = aggregate(subsets, method.radiator_ids, u2);
  const auto ux2_ref = aggregate(subsets, reference.radiator_ids, u2_ref);

  const std::size_t n = x.size();
  std::vector<double> amounts(n), amounts_ref(n), ux(n), ux_ref(n);
  for (std::size_t s = 0; s < n; ++s) {
    amounts[s] = x[s].amount;
    amounts_ref[s] = x_ref[s].amount;
    ux[s] = std::sqrt(ux2[s].amount);
    ux_ref[s] = std::sqrt(ux2_ref[s].amount);
  }
  const auto f = fractions(amounts);
  const auto f_ref = fractions(amounts_ref);
  const auto e = allocation_errors(f, f_ref);
  const auto uf = u_fraction(amounts, ux);
  const auto uf_ref = u_fraction(amounts_ref, ux_ref);

  AllocationReport report;
  report.method = method.method;
  std::vector<double> base_e;
  if (baseline) {
    if (baseline->rows.size() != n) throw DataError("baseline report has a different subset count");
    for (std::size_t s = 0; s < n; ++s) {
      if (baseline->rows[s].subset_id != x[s].subset_id) {
        throw DataError("baseline subsets differ at '" + x[s].subset_id + "'");
      }
      base_e.push_back(baseline->rows[s].error);
    }
  }
  double sum_u = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    SubsetRow row;
    row.subset_id = x[s].subset_id;
    row.fraction = f[s];
    row.reference_fraction = f_ref[s];
    row.error = e[s];
    row.u_fraction = uf[s];
    row.u_reference_fraction = uf_ref[s];
    row.u_error = u_allocation_error(uf_ref[s], uf[s]);
    sum_u += row.u_error;
    report.rows.push_back(std::move(row));
  }
  report.indicators =
      baseline ? global_indicators(e, f_ref, std::span<const double>(base_e)) : global_indicators(e, f_ref);
  report.mean_u_error = sum_u / static_cast<double>(n);
  report.u_global = global_uncertainty(report.indicators.sigma, report.mean_u_error);
  if (baseline) report.u_delta_e_hca = delta_e_hca_uncertainty(report.u_global, baseline->u_global);
  return report;
}

}  // namespace heatalloc
