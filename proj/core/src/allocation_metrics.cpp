#include "heatalloc/allocation_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "heatalloc/errors.hpp"

namespace heatalloc {

std::vector<SubsetConsumption> aggregate(const SubsetMap& subsets,
                                         std::span<const std::string> radiator_ids,
                                         std::span<const double> amounts) {
  if (radiator_ids.size() != amounts.size()) {
    throw DataError("radiator ids and amounts differ in length");
  }
  std::unordered_map<std::string, double> by_id;
  for (std::size_t j = 0; j < radiator_ids.size(); ++j) {
    if (!by_id.emplace(radiator_ids[j], amounts[j]).second) {
      throw DataError("radiator '" + radiator_ids[j] + "' listed twice");
    }
  }
  std::set<std::string> seen;
  std::vector<SubsetConsumption> out;
  out.reserve(subsets.size());
  for (const auto& [sid, members] : subsets) {
    if (members.empty()) throw DataError("subset '" + sid + "' has no members");
    SubsetConsumption c{sid, 0.0, members};
    for (const auto& m : members) {
      const auto it = by_id.find(m);
      if (it == by_id.end()) {
        throw DataError("subset '" + sid + "' references unknown radiator '" + m + "'");
      }
      if (!seen.insert(m).second) {
        throw DataError("radiator '" + m + "' belongs to more than one subset");
      }
      c.amount += it->second;
    }
    out.push_back(std::move(c));
  }
  for (const auto& id : radiator_ids) {
    if (!seen.contains(id)) throw DataError("radiator '" + id + "' is not in any subset");
  }
  return out;
}

std::vector<double> fractions(std::span<const double> amounts) {
  if (amounts.size() < 2) throw DataError("fractions need at least two subsets");
  double total = 0.0;
  for (const double x : amounts) {
    if (!std::isfinite(x)) throw DataError("non-finite subset consumption");
    if (x < 0.0) throw DataError("negative subset consumption");
    total += x;
  }
  if (!(total > 0.0)) throw DataError("total consumption is zero");
  std::vector<double> f(amounts.size());
  for (std::size_t s = 0; s < amounts.size(); ++s) f[s] = 100.0 * amounts[s] / total;
  return f;
}

std::vector<double> fractions(std::span<const SubsetConsumption> consumptions) {
  std::vector<double> x;
  x.reserve(consumptions.size());
  for (const auto& c : consumptions) x.push_back(c.amount);
  return fractions(x);
}

std::vector<double> allocation_errors(std::span<const double> f, std::span<const double> f_ref) {
  if (f.size() != f_ref.size()) throw DataError("fraction vectors differ in length");
  std::vector<double> e(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) e[s] = f[s] - f_ref[s];
  return e;
}

GlobalIndicators global_indicators(std::span<const double> errors, std::span<const double> f_ref,
                                   std::optional<std::span<const double>> baseline) {
  const std::size_t n = errors.size();
  if (n == 0) throw DataError("no allocation errors");
  if (f_ref.size() != n) throw DataError("errors and reference fractions differ in length");
  if (baseline && baseline->size() != n) throw DataError("baseline errors differ in length");

  GlobalIndicators g;
  const double mean = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  double mape = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    ss += (errors[s] - mean) * (errors[s] - mean);
    if (f_ref[s] == 0.0) throw DataError("MAPE undefined: a reference fraction is zero");
    mape += std::abs(errors[s]) / f_ref[s];
  }
  g.sigma = std::sqrt(ss / static_cast<double>(n));
  g.max = *std::max_element(errors.begin(), errors.end());
  g.min = *std::min_element(errors.begin(), errors.end());
  g.mape = 100.0 * mape / static_cast<double>(n);
  if (baseline) {
    double delta = 0.0;
    std::size_t lower = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const double a = std::abs(errors[s]);
      const double b = std::abs((*baseline)[s]);
      delta += a - b;
      if (a < b) ++lower;
    }
    g.delta_e_hca = delta;
    g.p_l = 100.0 * static_cast<double>(lower) / static_cast<double>(n);
  }
  return g;
}

double global_uncertainty(double sigma_e, double mean_u_e) {
  if (sigma_e < 0.0 || mean_u_e < 0.0) throw DataError("uncertainties must be non-negative");
  return std::hypot(sigma_e, mean_u_e);
}

double delta_e_hca_uncertainty(double u_g_method, double u_g_baseline) {
  if (u_g_method < 0.0 || u_g_baseline < 0.0) {
    throw DataError("uncertainties must be non-negative");
  }
  return std::hypot(u_g_method, u_g_baseline);
}

}  // namespace heatalloc
