#include "heatalloc/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "heatalloc/errors.hpp"

namespace heatalloc {

std::string_view to_string(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Hca: return "hca";
    case DeviceKind::Stv: return "stv";
    case DeviceKind::Dhm: return "dhm";
  }
  return "?";
}

std::string_view to_string(Method method) { return method == Method::Hca ? "hca" : "stv"; }

DeviceKind parse_device_kind(std::string_view text) {
  if (text == "hca") return DeviceKind::Hca;
  if (text == "stv") return DeviceKind::Stv;
  if (text == "dhm") return DeviceKind::Dhm;
  throw ConfigError("unknown device kind '" + std::string(text) + "'");
}

Method parse_method(std::string_view text) {
  if (text == "hca") return Method::Hca;
  if (text == "stv") return Method::Stv;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected hca or stv)");
}

double RadiatorSpec::prior_for(Method method) const {
  return method == Method::Hca ? rating_product() : theta_prior;
}

DeviceKind DeviceTimeSeries::kind() const {
  return static_cast<DeviceKind>(samples.index());
}

std::size_t DeviceTimeSeries::size() const {
  return std::visit([](const auto& v) { return v.size(); }, samples);
}

Timestamp DeviceTimeSeries::front_time() const {
  return std::visit([](const auto& v) { return v.empty() ? Timestamp{0} : v.front().t; },
                    samples);
}

Timestamp DeviceTimeSeries::back_time() const {
  return std::visit([](const auto& v) { return v.empty() ? Timestamp{0} : v.back().t; },
                    samples);
}

const RadiatorSpec* Dataset::find_radiator(std::string_view id) const {
  for (const auto& r : radiators) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const DeviceTimeSeries* Dataset::find_series(std::string_view radiator_id,
                                             DeviceKind kind) const {
  for (const auto& s : series) {
    if (s.kind() == kind && s.radiator_id && *s.radiator_id == radiator_id) return &s;
  }
  return nullptr;
}

const DeviceTimeSeries* Dataset::central_meter() const {
  for (const auto& s : series) {
    if (s.kind() == DeviceKind::Dhm && !s.radiator_id) return &s;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------

namespace {

class ViolationSink {
 public:
  void add(ViolationCode code, std::string subject, std::string message,
           std::optional<Timestamp> t = std::nullopt) {
    out_.push_back(Violation{code, std::move(subject), t, std::move(message)});
  }
  std::vector<Violation> take() { return std::move(out_); }

 private:
  std::vector<Violation> out_;
};

bool temp_ok(double v) { return std::isfinite(v) && v >= -20.0 && v <= 120.0; }

Timestamp cadence_for(DeviceKind kind, const ValidationOptions& o) {
  switch (kind) {
    case DeviceKind::Hca: return o.hca_cadence_s;
    case DeviceKind::Stv: return o.stv_cadence_s;
    case DeviceKind::Dhm: return o.dhm_cadence_s;
  }
  return o.stv_cadence_s;
}

void check_samples(const DeviceTimeSeries& s, ViolationSink& sink) {
  const std::string& id = s.device_id;
  std::visit(
      [&](const auto& v) {
        for (std::size_t k = 1; k < v.size(); ++k) {
          if (v[k].t <= v[k - 1].t) {
            sink.add(ViolationCode::NonIncreasingTime, id, "timestamps not strictly increasing",
                     v[k].t);
          }
        }
      },
      s.samples);

  switch (s.kind()) {
    case DeviceKind::Hca: {
      const auto& v = s.as<HcaSample>();
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!std::isfinite(v[k].count) || v[k].count < 0.0 ||
            v[k].count != std::floor(v[k].count)) {
          sink.add(ViolationCode::OutOfRange, id, "count is not a non-negative integer", v[k].t);
        }
        if (k > 0 && v[k].count < v[k - 1].count) {
          sink.add(ViolationCode::DecreasingCumulative, id, "cumulative count decreases",
                   v[k].t);
        }
      }
      if (!(s.counts_per_unit_hour > 0.0)) {
        sink.add(ViolationCode::OutOfRange, id, "counts_per_unit_hour must be positive");
      }
      break;
    }
    case DeviceKind::Stv:
      for (const auto& x : s.as<StvSample>()) {
        if (!temp_ok(x.inlet_c) || !temp_ok(x.room_c)) {
          sink.add(ViolationCode::OutOfRange, id, "temperature outside [-20, 120] C", x.t);
        }
        if (!(x.valve_pct >= 0.0 && x.valve_pct <= 100.0)) {
          sink.add(ViolationCode::OutOfRange, id, "valve position outside [0, 100] %", x.t);
        }
      }
      break;
    case DeviceKind::Dhm: {
      const auto& v = s.as<DhmSample>();
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!temp_ok(v[k].inlet_c) || !temp_ok(v[k].outlet_c)) {
          sink.add(ViolationCode::OutOfRange, id, "temperature outside [-20, 120] C", v[k].t);
        }
        if (!(v[k].flow_lph >= 0.0) || !std::isfinite(v[k].flow_lph)) {
          sink.add(ViolationCode::OutOfRange, id, "negative or non-finite flow", v[k].t);
        }
        if (k > 0 && v[k].energy_kwh < v[k - 1].energy_kwh) {
          sink.add(ViolationCode::DecreasingCumulative, id, "cumulative energy decreases",
                   v[k].t);
        }
      }
      break;
    }
  }
}

std::vector<Timestamp> times_of(const DeviceTimeSeries& s) {
  return std::visit(
      [](const auto& v) {
        std::vector<Timestamp> t;
        t.reserve(v.size());
        for (const auto& x : v) t.push_back(x.t);
        return t;
      },
      s.samples);
}

void check_coverage(const DeviceTimeSeries& s, const std::vector<IntegrationPeriod>& periods,
                    const ValidationOptions& o, ViolationSink& sink) {
  const std::vector<Timestamp> t = times_of(s);
  const double tolerance = o.gap_factor * static_cast<double>(cadence_for(s.kind(), o));
  for (const auto& p : periods) {
    if (p.end <= p.start) continue;
    // last sample at or before start, first sample at or after end
    auto lo = std::upper_bound(t.begin(), t.end(), p.start);
    auto hi = std::lower_bound(t.begin(), t.end(), p.end);
    if (lo == t.begin() || hi == t.end()) {
      sink.add(ViolationCode::UncoveredPeriod, s.device_id,
               "period " + std::to_string(p.index) + " is not bracketed by samples", p.start);
      continue;
    }
    --lo;
    for (auto it = lo; it != hi; ++it) {
      if (static_cast<double>(*(it + 1) - *it) > tolerance) {
        sink.add(ViolationCode::UncoveredPeriod, s.device_id,
                 "gap longer than tolerance in period " + std::to_string(p.index), *it);
        break;
      }
    }
  }
}

}  // namespace

std::vector<Violation> validate_dataset(const Dataset& d, const ValidationOptions& o) {
  ViolationSink sink;

  std::set<std::string> ids;
  for (const auto& r : d.radiators) {
    if (!ids.insert(r.id).second) {
      sink.add(ViolationCode::DuplicateRadiator, r.id, "duplicate radiator id");
    }
    if (!(r.q_n50 > 0.0)) sink.add(ViolationCode::InvalidRadiator, r.id, "q_n50 must be > 0");
    if (!(r.exponent_n >= 1.0 && r.exponent_n <= 2.0)) {
      sink.add(ViolationCode::InvalidRadiator, r.id, "exponent_n must lie in [1, 2]");
    }
    if (!(r.rating_kq > 0.0 && r.rating_kc > 0.0 && r.rating_kt > 0.0)) {
      sink.add(ViolationCode::InvalidRadiator, r.id, "rating factors must be > 0");
    }
    if (!(r.theta_prior > 0.0)) {
      sink.add(ViolationCode::InvalidRadiator, r.id, "theta_prior must be > 0");
    }
  }

  std::set<std::pair<std::string, int>> seen;
  for (const auto& s : d.series) {
    if (s.radiator_id) {
      if (!ids.contains(*s.radiator_id)) {
        sink.add(ViolationCode::DanglingReference, s.device_id,
                 "references unknown radiator '" + *s.radiator_id + "'");
      }
      if (!seen.insert({*s.radiator_id, static_cast<int>(s.kind())}).second) {
        sink.add(ViolationCode::DuplicateSeries, s.device_id,
                 "second " + std::string(to_string(s.kind())) + " series for radiator '" +
                     *s.radiator_id + "'");
      }
    }
    check_samples(s, sink);
  }

  for (std::size_t i = 0; i < d.periods.size(); ++i) {
    const auto& p = d.periods[i];
    if (p.end <= p.start) {
      sink.add(ViolationCode::InvalidPeriod, "period " + std::to_string(i), "end <= start",
               p.start);
    }
    if (p.index != i) {
      sink.add(ViolationCode::InvalidPeriod, "period " + std::to_string(i), "index mismatch");
    }
    if (i > 0 && p.start != d.periods[i - 1].end) {
      sink.add(ViolationCode::InvalidPeriod, "period " + std::to_string(i),
               "periods are not contiguous", p.start);
    }
  }
  if (d.total_energy_kwh.size() != d.periods.size()) {
    sink.add(ViolationCode::TotalsMismatch, "totals",
             "expected " + std::to_string(d.periods.size()) + " period totals, got " +
                 std::to_string(d.total_energy_kwh.size()));
  }
  for (std::size_t i = 0; i < d.total_energy_kwh.size(); ++i) {
    if (!(d.total_energy_kwh[i] >= 0.0) || !std::isfinite(d.total_energy_kwh[i])) {
      sink.add(ViolationCode::TotalsMismatch, "totals",
               "period " + std::to_string(i) + " total is negative or non-finite");
    }
  }

  std::vector<DeviceKind> required;
  if (o.method) required.push_back(*o.method == Method::Hca ? DeviceKind::Hca : DeviceKind::Stv);
  for (const auto kind : required) {
    for (const auto& r : d.radiators) {
      if (!d.find_series(r.id, kind)) {
        sink.add(ViolationCode::MissingSeries, r.id,
                 "no " + std::string(to_string(kind)) + " series for radiator");
      }
    }
  }

  for (const auto& s : d.series) {
    if (!s.radiator_id) continue;
    const bool needed =
        required.empty() || std::find(required.begin(), required.end(), s.kind()) != required.end();
    if (!needed) continue;
    if (s.size() == 0) {
      sink.add(ViolationCode::UncoveredPeriod, s.device_id, "series has no samples");
      continue;
    }
    check_coverage(s, d.periods, o, sink);
  }

  return sink.take();
}

void require_valid(const Dataset& dataset, const ValidationOptions& options) {
  const auto violations = validate_dataset(dataset, options);
  if (violations.empty()) return;
  std::ostringstream os;
  os << violations.size() << " dataset violation(s):";
  for (const auto& v : violations) {
    os << "\n  " << v.subject << ": " << v.message;
    if (v.timestamp) os << " at " << format_iso8601(*v.timestamp);
  }
  throw DataError(os.str());
}

std::vector<IntegrationPeriod> partition_periods(Timestamp start, Timestamp end,
                                                 double frequency_per_hour) {
  if (!(frequency_per_hour > 0.0) || !std::isfinite(frequency_per_hour)) {
    throw ConfigError("sampling frequency must be positive");
  }
  if (end <= start) throw ConfigError("partition span must be non-empty");

  const double span_h = static_cast<double>(end - start) / kSecondsPerHour;
  const double raw = span_h * frequency_per_hour;
  double count = std::ceil(raw);
  if (std::abs(raw - std::round(raw)) < 1e-9) count = std::max(1.0, std::round(raw));
  const auto m = static_cast<std::size_t>(count);
  const double period_s = kSecondsPerHour / frequency_per_hour;

  std::vector<IntegrationPeriod> periods;
  periods.reserve(m);
  Timestamp prev = start;
  for (std::size_t i = 0; i < m; ++i) {
    Timestamp next =
        i + 1 == m ? end
                   : start + static_cast<Timestamp>(std::llround(period_s * static_cast<double>(i + 1)));
    next = std::min(next, end);
    if (next <= prev) break;
    periods.push_back(IntegrationPeriod{periods.size(), prev, next});
    prev = next;
  }
  return periods;
}

// ---------------------------------------------------------------------------

namespace {

double weight(Timestamp a, Timestamp b, Timestamp t) {
  return b == a ? 0.0 : static_cast<double>(t - a) / static_cast<double>(b - a);
}

double mix(double x, double y, double w) { return x + (y - x) * w; }

}  // namespace

StvSample lerp(const StvSample& a, const StvSample& b, Timestamp t) {
  const double w = weight(a.t, b.t, t);
  return StvSample{t, mix(a.inlet_c, b.inlet_c, w), mix(a.room_c, b.room_c, w),
                   mix(a.valve_pct, b.valve_pct, w)};
}

DhmSample lerp(const DhmSample& a, const DhmSample& b, Timestamp t) {
  const double w = weight(a.t, b.t, t);
  return DhmSample{t, mix(a.flow_lph, b.flow_lph, w), mix(a.inlet_c, b.inlet_c, w),
                   mix(a.outlet_c, b.outlet_c, w), mix(a.energy_kwh, b.energy_kwh, w)};
}

HcaSample lerp(const HcaSample& a, const HcaSample& b, Timestamp t) {
  return HcaSample{t, mix(a.count, b.count, weight(a.t, b.t, t))};
}

ScalarSample lerp(const ScalarSample& a, const ScalarSample& b, Timestamp t) {
  return ScalarSample{t, mix(a.value, b.value, weight(a.t, b.t, t))};
}

template <class S>
S sample_at(std::span<const S> samples, Timestamp t) {
  if (samples.empty() || t < samples.front().t || t > samples.back().t) {
    throw DataError("time " + format_iso8601(t) + " is outside the sampled range");
  }
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const S& s, Timestamp x) { return s.t < x; });
  if (it->t == t) return *it;
  return lerp(*(it - 1), *it, t);
}

template <class S>
std::vector<S> clip(std::span<const S> samples, Timestamp start, Timestamp end) {
  if (end < start) throw DataError("clip interval is reversed");
  std::vector<S> out;
  out.push_back(sample_at(samples, start));
  auto it = std::upper_bound(samples.begin(), samples.end(), start,
                             [](Timestamp x, const S& s) { return x < s.t; });
  for (; it != samples.end() && it->t < end; ++it) out.push_back(*it);
  if (end > start) out.push_back(sample_at(samples, end));
  return out;
}

template HcaSample sample_at(std::span<const HcaSample>, Timestamp);
template StvSample sample_at(std::span<const StvSample>, Timestamp);
template DhmSample sample_at(std::span<const DhmSample>, Timestamp);
template ScalarSample sample_at(std::span<const ScalarSample>, Timestamp);
template std::vector<HcaSample> clip(std::span<const HcaSample>, Timestamp, Timestamp);
template std::vector<StvSample> clip(std::span<const StvSample>, Timestamp, Timestamp);
template std::vector<DhmSample> clip(std::span<const DhmSample>, Timestamp, Timestamp);
template std::vector<ScalarSample> clip(std::span<const ScalarSample>, Timestamp, Timestamp);

}  // namespace heatalloc
