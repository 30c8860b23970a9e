#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heatalloc/timestamp.hpp"

namespace heatalloc {

enum class DeviceKind { Hca, Stv, Dhm };

/// Indirect accounting method whose readings form the columns of A.
enum class Method { Hca, Stv };

std::string_view to_string(DeviceKind kind);
std::string_view to_string(Method method);
DeviceKind parse_device_kind(std::string_view text);
Method parse_method(std::string_view text);

/// Static description of one heating body.
///
/// `theta_prior` is the prior for the valve-based method (EN 442 nominal power
/// or a previous-season estimate). The allocator-based method uses the product
/// of the rating factors as its prior, see prior_for().
struct RadiatorSpec {
  std::string id;
  double q_n50 = 0.0;       // W at 50 K
  double exponent_n = 1.3;
  double rating_kq = 1.0;
  double rating_kc = 1.0;
  double rating_kt = 1.0;
  double theta_prior = 0.0;  // W
  std::string subset_id;

  double rating_product() const { return rating_kq * rating_kc * rating_kt; }
  double prior_for(Method method) const;
};

struct HcaSample {
  Timestamp t = 0;
  double count = 0.0;  // cumulative, integer valued

  bool operator==(const HcaSample&) const = default;
};

struct StvSample {
  Timestamp t = 0;
  double inlet_c = 0.0;
  double room_c = 0.0;
  double valve_pct = 0.0;

  bool operator==(const StvSample&) const = default;
};

struct DhmSample {
  Timestamp t = 0;
  double flow_lph = 0.0;
  double inlet_c = 0.0;
  double outlet_c = 0.0;
  double energy_kwh = 0.0;  // cumulative

  bool operator==(const DhmSample&) const = default;
};

/// Generic single-channel series, used for raw temperature or flow traces.
struct ScalarSample {
  Timestamp t = 0;
  double value = 0.0;

  bool operator==(const ScalarSample&) const = default;
};

using SampleList =
    std::variant<std::vector<HcaSample>, std::vector<StvSample>, std::vector<DhmSample>>;

struct DeviceTimeSeries {
  std::string device_id;
  std::optional<std::string> radiator_id;  // empty for the central meter
  /// Allocator counts per unit-hour of the normalized integral (the device
  /// configuration scale). Only meaningful for HCA series.
  double counts_per_unit_hour = 1.0;
  SampleList samples;

  DeviceKind kind() const;
  std::size_t size() const;
  Timestamp front_time() const;
  Timestamp back_time() const;

  template <class S>
  const std::vector<S>& as() const {
    return std::get<std::vector<S>>(samples);
  }
};

struct IntegrationPeriod {
  std::size_t index = 0;
  Timestamp start = 0;
  Timestamp end = 0;

  Timestamp duration_s() const { return end - start; }
  double hours() const { return static_cast<double>(end - start) / kSecondsPerHour; }
};

struct Dataset {
  std::vector<RadiatorSpec> radiators;
  std::vector<DeviceTimeSeries> series;
  std::vector<IntegrationPeriod> periods;
  std::vector<double> total_energy_kwh;  // one entry per period

  const RadiatorSpec* find_radiator(std::string_view id) const;
  const DeviceTimeSeries* find_series(std::string_view radiator_id, DeviceKind kind) const;
  /// The building-level meter (a DHM series without a radiator link), if any.
  const DeviceTimeSeries* central_meter() const;
};

/// Nominal device cadences; a period counts as covered when no gap between
/// consecutive samples exceeds `gap_factor` times the device cadence.
struct ValidationOptions {
  std::optional<Method> method;
  Timestamp hca_cadence_s = 3 * 3600;
  Timestamp stv_cadence_s = 5 * 60;
  Timestamp dhm_cadence_s = 5 * 60;
  double gap_factor = 3.0;
};

enum class ViolationCode {
  InvalidRadiator,
  DuplicateRadiator,
  DanglingReference,
  DuplicateSeries,
  MissingSeries,
  NonIncreasingTime,
  DecreasingCumulative,
  OutOfRange,
  InvalidPeriod,
  TotalsMismatch,
  UncoveredPeriod,
};

struct Violation {
  ViolationCode code;
  std::string subject;  // radiator or device id
  std::optional<Timestamp> timestamp;
  std::string message;
};

/// Checks every invariant of the data model. Never throws; returns the list of
/// violations, empty iff the dataset is well formed.
std::vector<Violation> validate_dataset(const Dataset& dataset,
                                        const ValidationOptions& options = {});

/// Throws DataError listing the violations when validate_dataset is non-empty.
void require_valid(const Dataset& dataset, const ValidationOptions& options = {});

/// Splits [start, end) into contiguous periods of 1/frequency hours; the last
/// one is truncated at `end`. M = ceil(span_hours * frequency).
std::vector<IntegrationPeriod> partition_periods(Timestamp start, Timestamp end,
                                                 double frequency_per_hour);

// ---------------------------------------------------------------------------
// Sample interpolation and clipping. All integrals use the trapezoidal rule on
// the raw samples inside a period, with linearly interpolated boundary values
// taken from the nearest samples outside it.

StvSample lerp(const StvSample& a, const StvSample& b, Timestamp t);
DhmSample lerp(const DhmSample& a, const DhmSample& b, Timestamp t);
HcaSample lerp(const HcaSample& a, const HcaSample& b, Timestamp t);
ScalarSample lerp(const ScalarSample& a, const ScalarSample& b, Timestamp t);

/// Value of the series at `t`; throws DataError when `t` is outside the
/// sampled range.
template <class S>
S sample_at(std::span<const S> samples, Timestamp t);

/// Samples of `samples` restricted to [start, end], with interpolated samples
/// inserted at both boundaries. Throws DataError when a boundary cannot be
/// interpolated (no sample on its far side).
template <class S>
std::vector<S> clip(std::span<const S> samples, Timestamp start, Timestamp end);

/// Trapezoidal integral of f(sample) over the samples, in hours.
template <class S, class F>
double trapezoid_hours(std::span<const S> samples, F&& f) {
  double total = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double dt = static_cast<double>(samples[k].t - samples[k - 1].t) / kSecondsPerHour;
    total += 0.5 * dt * (f(samples[k - 1]) + f(samples[k]));
  }
  return total;
}

}  // namespace heatalloc
