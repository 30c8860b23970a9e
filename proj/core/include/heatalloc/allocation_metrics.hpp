#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace heatalloc {

struct SubsetConsumption {
  std::string subset_id;
  double amount = 0.0;  // kWh, or allocation units for the nominal allocators
  std::vector<std::string> members;
};

/// Subset id -> member radiator ids. Ordered so reports are deterministic.
using SubsetMap = std::map<std::string, std::vector<std::string>>;

/// Sums per-radiator amounts into subsets. Every radiator must belong to
/// exactly one subset; throws DataError otherwise.
std::vector<SubsetConsumption> aggregate(const SubsetMap& subsets,
                                         std::span<const std::string> radiator_ids,
                                         std::span<const double> amounts);

/// f_s = 100 X_s / sum(X), in percent.
std::vector<double> fractions(std::span<const double> amounts);
std::vector<double> fractions(std::span<const SubsetConsumption> consumptions);

/// E_s = f_s - f_ref,s, in percentage points.
std::vector<double> allocation_errors(std::span<const double> f, std::span<const double> f_ref);

struct GlobalIndicators {
  double sigma = 0.0;  // population standard deviation of E
  double max = 0.0;
  double min = 0.0;
  double mape = 0.0;
  std::optional<double> delta_e_hca;  // only against a baseline
  std::optional<double> p_l;          // percent
};

GlobalIndicators global_indicators(std::span<const double> errors,
                                   std::span<const double> f_ref,
                                   std::optional<std::span<const double>> baseline = {});

/// u_G = sqrt(sigma^2 + mean_u^2).
double global_uncertainty(double sigma_e, double mean_u_e);

/// Uncertainty of Delta E_HCA as the root-sum-square of the two global
/// uncertainties.
double delta_e_hca_uncertainty(double u_g_method, double u_g_baseline);

struct SubsetRow {
  std::string subset_id;
  double fraction = 0.0;
  double reference_fraction = 0.0;
  double error = 0.0;
  double u_fraction = 0.0;
  double u_reference_fraction = 0.0;
  double u_error = 0.0;
};

struct AllocationReport {
  std::string method;
  std::vector<SubsetRow> rows;
  GlobalIndicators indicators;
  double mean_u_error = 0.0;
  double u_global = 0.0;
  std::optional<double> u_delta_e_hca;
};

}  // namespace heatalloc
