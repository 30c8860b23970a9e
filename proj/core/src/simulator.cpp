#include "heatalloc/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "heatalloc/errors.hpp"
#include "heatalloc/thermal_models.hpp"

namespace heatalloc {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr double kSecondsPerDay = 86400.0;

enum Stream : std::uint32_t {
  kLayout = 1,
  kOutdoor,
  kRoom,
  kValve,
  kSetpoint,
  kStvNoise,
  kHcaGain,
  kFlowNoise,
  kExponent,
};

// Independent generator per (purpose, index) so that changing one noise level
// never shifts the draws of another process.
std::mt19937_64 make_rng(std::uint64_t seed, Stream purpose, std::uint32_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose), index};
  return std::mt19937_64(seq);
}

double hour_of_day(Timestamp t) {
  const auto s = ((t % 86400) + 86400) % 86400;
  return static_cast<double>(s) / kSecondsPerHour;
}

// AR(1) noise on an hourly lattice, linearly interpolated.
class HourlyNoise {
 public:
  HourlyNoise(std::mt19937_64 rng, double sd, double phi, Timestamp start, Timestamp end)
      : start_(start) {
    const auto hours = static_cast<std::size_t>((end - start) / 3600 + 2);
    values_.resize(hours, 0.0);
    if (sd <= 0.0) return;
    std::normal_distribution<double> n01(0.0, 1.0);
    values_[0] = sd * n01(rng);
    const double innov = sd * std::sqrt(1.0 - phi * phi);
    for (std::size_t h = 1; h < hours; ++h) values_[h] = phi * values_[h - 1] + innov * n01(rng);
  }

  double at(Timestamp t) const {
    const double x = static_cast<double>(t - start_) / kSecondsPerHour;
    const auto h = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(x))),
                            values_.size() - 2);
    const double w = x - static_cast<double>(h);
    return values_[h] + w * (values_[h + 1] - values_[h]);
  }

 private:
  Timestamp start_;
  std::vector<double> values_;
};

struct RadiatorSetup {
  std::string id;
  double q_n50 = 0.0;
  double n = kDefaultExponent;
  double n_true = kDefaultExponent;
  double deviation = 1.0;
  double coupling = 1.0;
  int floor = 0;
  std::string wall;
  double setpoint_offset = 0.0;
  double hca_gain = 1.0;
};

std::string padded_id(std::size_t j, std::size_t count) {
  std::string num = std::to_string(j + 1);
  const std::size_t width = std::max<std::size_t>(2, std::to_string(count).size());
  if (num.size() < width) num.insert(0, width - num.size(), '0');
  return "R" + num;
}

std::vector<RadiatorSetup> layout(const ScenarioConfig& cfg) {
  const std::size_t k = cfg.radiators.empty() ? cfg.radiator_count : cfg.radiators.size();
  const std::size_t per_floor =
      (k + static_cast<std::size_t>(cfg.floors) - 1) / static_cast<std::size_t>(cfg.floors);
  auto rng = make_rng(cfg.seed, kLayout);
  auto sp_rng = make_rng(cfg.seed, kSetpoint);
  auto gain_rng = make_rng(cfg.seed, kHcaGain);
  auto exp_rng = make_rng(cfg.seed, kExponent);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  std::vector<RadiatorSetup> out(k);
  for (std::size_t j = 0; j < k; ++j) {
    RadiatorSetup& r = out[j];
    r.id = padded_id(j, k);
    // Draw everything unconditionally so overrides do not shift the stream.
    const double q = 400.0 + 1200.0 * u01(rng);
    const double dev = cfg.deviation_low + (cfg.deviation_high - cfg.deviation_low) * u01(rng);
    const double cpl = cfg.coupling_low + (cfg.coupling_high - cfg.coupling_low) * u01(rng);
    r.q_n50 = std::round(q);
    r.deviation = dev;
    r.coupling = cpl;
    r.floor = static_cast<int>(j / per_floor);
    r.wall = (j % per_floor) * 2 < per_floor ? "N" : "S";
    r.setpoint_offset = -1.0 + 2.0 * u01(sp_rng);
    r.hca_gain = 1.0 + cfg.noise.hca_display_deviation * (2.0 * u01(gain_rng) - 1.0);
    const double n_shift = cfg.exponent_spread * (2.0 * u01(exp_rng) - 1.0);
    if (!cfg.radiators.empty()) {
      const SimRadiator& o = cfg.radiators[j];
      if (o.q_n50) r.q_n50 = *o.q_n50;
      if (o.exponent_n) r.n = *o.exponent_n;
      if (o.deviation) r.deviation = *o.deviation;
      if (o.coupling) r.coupling = *o.coupling;
      if (o.floor) r.floor = *o.floor;
      if (o.wall) r.wall = *o.wall;
    }
    r.n_true = r.n + n_shift;
  }
  return out;
}

// Fixed simulation lattice: start + k * step, plus the end instant.
std::vector<Timestamp> physics_grid(Timestamp start, Timestamp end, Timestamp step) {
  std::vector<Timestamp> g;
  g.reserve(static_cast<std::size_t>((end - start) / step + 2));
  for (Timestamp t = start; t < end; t += step) g.push_back(t);
  g.push_back(end);
  return g;
}

std::vector<Timestamp> cadence_times(Timestamp start, Timestamp end, Timestamp cadence,
                                     const std::vector<IntegrationPeriod>* periods = nullptr) {
  std::vector<Timestamp> t;
  for (Timestamp x = start; x < end; x += cadence) t.push_back(x);
  t.push_back(end);
  if (periods) {
    for (const auto& p : *periods) t.push_back(p.start);
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
  return t;
}

// Piecewise-linear trace on the physics grid with a running trapezoid
// integral in hours.
class GridTrace {
 public:
  GridTrace(const std::vector<Timestamp>& grid, std::vector<double> values)
      : grid_(&grid), v_(std::move(values)), cum_(v_.size(), 0.0) {
    for (std::size_t k = 1; k < v_.size(); ++k) {
      const double dt = static_cast<double>(grid[k] - grid[k - 1]) / kSecondsPerHour;
      cum_[k] = cum_[k - 1] + 0.5 * dt * (v_[k - 1] + v_[k]);
    }
  }

  double value_at(Timestamp t) const {
    const auto [k, w] = locate(t);
    return w == 0.0 ? v_[k] : v_[k] + w * (v_[k + 1] - v_[k]);
  }

  double integral_to(Timestamp t) const {
    const auto [k, w] = locate(t);
    if (w == 0.0) return cum_[k];
    const double dt = static_cast<double>(t - (*grid_)[k]) / kSecondsPerHour;
    return cum_[k] + 0.5 * dt * (v_[k] + value_at(t));
  }

  double integral(Timestamp a, Timestamp b) const { return integral_to(b) - integral_to(a); }

 private:
  std::pair<std::size_t, double> locate(Timestamp t) const {
    const auto& g = *grid_;
    auto it = std::upper_bound(g.begin(), g.end(), t);
    std::size_t k = it == g.begin() ? 0 : static_cast<std::size_t>(it - g.begin()) - 1;
    if (k >= g.size() - 1) return {g.size() - 1, 0.0};
    if (g[k] == t) return {k, 0.0};
    return {k, static_cast<double>(t - g[k]) / static_cast<double>(g[k + 1] - g[k])};
  }

  const std::vector<Timestamp>* grid_;
  std::vector<double> v_;
  std::vector<double> cum_;
};

// Implicit step of C dTm/dt = G (Tin - Tm) - q(Tm): solves
// a (x - prev) - G (tin - x) + q(x) = 0 with a = C / dt. f is increasing in x.
double solve_mean_temperature(double a, double g, double prev, double tin, double ta, double q50,
                              double n) {
  if (a == 0.0 && g == 0.0) return ta;
  const auto f = [&](double x) {
    return a * (x - prev) - g * (tin - x) + en442_power(q50, n, x, ta);
  };
  const auto df = [&](double x) {
    const double dq = x > ta ? n * q50 / kEn442BaseDifference *
                                   std::pow((x - ta) / kEn442BaseDifference, n - 1.0)
                             : 0.0;
    return a + g + dq;
  };
  double lo = std::min({prev, tin, ta});
  double hi = std::max({prev, tin, ta});
  if (a == 0.0) lo = std::max(lo, std::min(tin, ta));
  double x = std::clamp(prev, lo, hi);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx < 0.0) lo = x; else hi = x;
    const double d = df(x);
    double next = d > 0.0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, std::abs(x))) return next;
    x = next;
  }
  return x;
}

struct SharedTraces {
  std::vector<double> supply;
  std::vector<bool> heater_on;
};

class Scenario {
 public:
  explicit Scenario(const ScenarioConfig& cfg)
      : cfg_(cfg),
        start_(cfg.start),
        end_(cfg.start + static_cast<Timestamp>(std::llround(cfg.duration_days * kSecondsPerDay))),
        outdoor_noise_(make_rng(cfg.seed, kOutdoor), cfg.outdoor_noise_sd, 0.9, start_, end_) {}

  Timestamp start() const { return start_; }
  Timestamp end() const { return end_; }

  double outdoor(Timestamp t) const {
    return cfg_.outdoor_mean_c +
           cfg_.outdoor_amplitude_c * std::sin(kTwoPi * (hour_of_day(t) - 9.0) / 24.0) +
           outdoor_noise_.at(t);
  }

  bool heater_on(Timestamp t) const {
    const auto margin = static_cast<Timestamp>(std::llround(cfg_.heater_off_margin_h * 3600.0));
    return t - start_ >= margin && end_ - t >= margin;
  }

  double supply(Timestamp t) const {
    switch (cfg_.heater_mode) {
      case HeaterMode::Constant: return cfg_.constant_supply_c;
      case HeaterMode::Climatic: return climatic_supply_temp(outdoor(t));
      case HeaterMode::Mixed:
        return 2 * (t - start_) < end_ - start_ ? cfg_.constant_supply_c
                                                : climatic_supply_temp(outdoor(t));
    }
    return cfg_.constant_supply_c;
  }

  bool room_set_point_at(Timestamp t) const {
    switch (cfg_.valve_mode) {
      case ValveMode::RoomSetPoint: return true;
      case ValveMode::PositionSetPoint: return false;
      case ValveMode::Alternating: {
        const auto quarter = 4 * (t - start_) / (end_ - start_);
        return quarter % 2 == 0;
      }
    }
    return true;
  }

 private:
  const ScenarioConfig& cfg_;
  Timestamp start_;
  Timestamp end_;
  HourlyNoise outdoor_noise_;
};

}  // namespace

double climatic_supply_temp(double t_out_c) {
  return std::clamp(70.0 - 1.5 * t_out_c, 40.0, 70.0);
}

std::vector<double> GroundTruth::season_energy_kwh() const {
  std::vector<double> out(radiator_ids.size(), 0.0);
  for (const auto& row : radiator_energy_kwh) {
    for (std::size_t j = 0; j < row.size() && j < out.size(); ++j) out[j] += row[j];
  }
  return out;
}

void validate_config(const ScenarioConfig& c) {
  const auto bad = [](const std::string& field, const std::string& why) {
    throw ConfigError("invalid scenario field '" + field + "': " + why);
  };
  const auto finite = [](double x) { return std::isfinite(x); };
  if (!finite(c.duration_days) || c.duration_days < 1.0) bad("duration_days", "must be >= 1");
  if (!finite(c.sampling_frequency_per_hour) || c.sampling_frequency_per_hour <= 0.0) {
    bad("sampling_frequency_per_hour", "must be > 0");
  }
  if (!finite(c.constant_supply_c) || c.constant_supply_c < 20.0 || c.constant_supply_c > 110.0) {
    bad("constant_supply_c", "must lie in [20, 110]");
  }
  if (!finite(c.heater_off_margin_h) || c.heater_off_margin_h < 0.0 ||
      2.0 * c.heater_off_margin_h >= 24.0 * c.duration_days) {
    bad("heater_off_margin_h", "must be >= 0 and leave the heater on for part of the season");
  }
  if (!finite(c.outdoor_mean_c)) bad("outdoor_mean_c", "must be finite");
  if (!finite(c.outdoor_amplitude_c) || c.outdoor_amplitude_c < 0.0) {
    bad("outdoor_amplitude_c", "must be >= 0");
  }
  if (!finite(c.outdoor_noise_sd) || c.outdoor_noise_sd < 0.0) bad("outdoor_noise_sd", "must be >= 0");
  if (c.floors < 1) bad("floors", "must be >= 1");
  if (c.radiators.empty() && c.radiator_count < 1) bad("radiator_count", "must be >= 1");
  if (!(c.deviation_low > 0.0) || !(c.deviation_high >= c.deviation_low) ||
      !finite(c.deviation_high)) {
    bad("deviation_low/deviation_high", "need 0 < low <= high");
  }
  if (!(c.coupling_low > 0.0) || !(c.coupling_high >= c.coupling_low) || c.coupling_high > 1.0) {
    bad("coupling_low/coupling_high", "need 0 < low <= high <= 1");
  }
  if (!(c.exponent_spread >= 0.0 && c.exponent_spread <= 0.3)) {
    bad("exponent_spread", "must lie in [0, 0.3]");
  }
  if (!(c.hca_start_difference_k >= 0.0 && c.hca_start_difference_k < 60.0)) {
    bad("hca_start_difference_k", "must lie in [0, 60)");
  }
  for (std::size_t j = 0; j < c.radiators.size(); ++j) {
    const SimRadiator& r = c.radiators[j];
    const std::string f = "radiators[" + std::to_string(j) + "]";
    if (r.q_n50 && !(*r.q_n50 > 0.0 && finite(*r.q_n50))) bad(f + ".q_n50", "must be > 0");
    if (r.exponent_n && !(*r.exponent_n >= 1.0 && *r.exponent_n <= 2.0)) {
      bad(f + ".exponent_n", "must lie in [1, 2]");
    }
    if (r.deviation && !(*r.deviation > 0.0 && finite(*r.deviation))) {
      bad(f + ".deviation", "must be > 0");
    }
    if (r.coupling && !(*r.coupling > 0.0 && *r.coupling <= 1.0)) {
      bad(f + ".coupling", "must lie in (0, 1]");
    }
    if (r.floor && (*r.floor < 0 || *r.floor >= c.floors)) bad(f + ".floor", "out of range");
    if (r.wall && *r.wall != "N" && *r.wall != "S") bad(f + ".wall", "must be \"N\" or \"S\"");
  }
  if (!finite(c.rsp_day_c) || !finite(c.rsp_night_c) || !finite(c.rsp_floor_increment_c)) {
    bad("rsp_day_c/rsp_night_c", "must be finite");
  }
  if (!(c.rsp_gain_pct_per_k >= 0.0) || !finite(c.rsp_gain_pct_per_k)) {
    bad("rsp_gain_pct_per_k", "must be >= 0");
  }
  if (!(c.rsp_deadband_k >= 0.0) || !finite(c.rsp_deadband_k)) bad("rsp_deadband_k", "must be >= 0");
  if (!(c.loss_fraction >= 0.0 && c.loss_fraction <= 0.5)) bad("loss_fraction", "must lie in [0, 0.5]");
  if (!(c.noise.stv_temperature_sd >= 0.0) || !finite(c.noise.stv_temperature_sd)) {
    bad("noise.stv_temperature_sd", "must be >= 0");
  }
  if (!(c.noise.reference_flow_sd_rel >= 0.0) || !finite(c.noise.reference_flow_sd_rel)) {
    bad("noise.reference_flow_sd_rel", "must be >= 0");
  }
  if (!(c.noise.hca_display_deviation >= 0.0 && c.noise.hca_display_deviation < 1.0)) {
    bad("noise.hca_display_deviation", "must lie in [0, 1)");
  }
  if (!(c.hca_counts_per_unit_hour > 0.0) || !finite(c.hca_counts_per_unit_hour)) {
    bad("hca_counts_per_unit_hour", "must be > 0");
  }
  if (!(c.inertia_time_constant_min >= 0.0) || !finite(c.inertia_time_constant_min)) {
    bad("inertia_time_constant_min", "must be >= 0");
  }
  if (!(c.inlet_time_constant_min >= 0.0) || !finite(c.inlet_time_constant_min)) {
    bad("inlet_time_constant_min", "must be >= 0");
  }
  if (!(c.flow_gain > 0.0) || !finite(c.flow_gain)) bad("flow_gain", "must be > 0");
  if (!(c.step_s >= 1.0) || c.step_s != std::floor(c.step_s) || c.step_s > 3600.0) {
    bad("step_s", "must be a whole number of seconds in [1, 3600]");
  }
  if (c.stv_cadence_s < 1) bad("stv_cadence_s", "must be >= 1");
  if (c.hca_cadence_s < 1) bad("hca_cadence_s", "must be >= 1");
  if (c.dhm_cadence_s < 1) bad("dhm_cadence_s", "must be >= 1");
  if (c.emit_reference_meters && c.physics == Physics::StvMatched) {
    bad("emit_reference_meters", "reference meters need the en442 physics");
  }
  if (!(c.cutoff_flow_lph > 0.0) || !finite(c.cutoff_flow_lph)) bad("cutoff_flow_lph", "must be > 0");
  if (!(c.water.density > 0.0) || !(c.water.specific_heat > 0.0)) {
    bad("water", "density and specific heat must be > 0");
  }
}

Simulation simulate_season(const ScenarioConfig& cfg) {
  validate_config(cfg);
  const Scenario sc(cfg);
  const Timestamp start = sc.start();
  const Timestamp end = sc.end();
  const auto step = static_cast<Timestamp>(cfg.step_s);
  const double rho_cp = cfg.water.density * cfg.water.specific_heat;  // J/(m^3 K)
  const double lph_per_w_per_k = 3.6e6 / rho_cp;  // L/h of flow carrying 1 W/K

  Simulation sim;
  Dataset& ds = sim.dataset;
  GroundTruth& truth = sim.truth;
  ds.periods = partition_periods(start, end, cfg.sampling_frequency_per_hour);
  const std::size_t m = ds.periods.size();

  const std::vector<Timestamp> grid = physics_grid(start, end, step);
  const std::size_t ng = grid.size();
  SharedTraces shared;
  shared.supply.resize(ng);
  shared.heater_on.resize(ng);
  for (std::size_t k = 0; k < ng; ++k) {
    shared.supply[k] = sc.supply(grid[k]);
    shared.heater_on[k] = sc.heater_on(grid[k]);
  }

  const auto radiators = layout(cfg);
  const std::size_t kr = radiators.size();
  truth.radiator_ids.reserve(kr);
  truth.radiator_energy_kwh.assign(m, std::vector<double>(kr, 0.0));
  truth.loss_fraction = cfg.loss_fraction;

  const std::vector<Timestamp> stv_times = cadence_times(start, end, cfg.stv_cadence_s);
  const std::vector<Timestamp> hca_times = cadence_times(start, end, cfg.hca_cadence_s, &ds.periods);
  const std::vector<Timestamp> dhm_times = cadence_times(start, end, cfg.dhm_cadence_s);
  std::vector<double> central_energy(dhm_times.size(), 0.0);
  std::vector<double> central_power(dhm_times.size(), 0.0);

  const double tau_in = cfg.inlet_time_constant_min * 60.0;
  const double tau_m = cfg.inertia_time_constant_min * 60.0;

  for (std::size_t j = 0; j < kr; ++j) {
    const RadiatorSetup& r = radiators[j];
    const double q50 = r.q_n50 * r.deviation;  // true output at 50 K
    const double theta_hca = q50 * std::pow(kHcaBaseDifference / kEn442BaseDifference, r.n) /
                             std::pow(r.coupling, r.n);
    const double theta_stv = q50;

    RadiatorSpec spec;
    spec.id = r.id;
    spec.q_n50 = r.q_n50;
    spec.exponent_n = r.n;
    spec.rating_kq = kq_from_en442(r.q_n50, r.n);
    spec.rating_kc = std::pow(r.coupling, -r.n);
    spec.rating_kt = 1.0;
    spec.theta_prior = r.q_n50;
    spec.subset_id = "A" + std::to_string(r.floor) + "_" + r.wall;
    ds.radiators.push_back(spec);
    truth.radiator_ids.push_back(r.id);
    truth.theta_true_hca_w.push_back(theta_hca);
    truth.theta_true_stv_w.push_back(theta_stv);
    truth.deviation.push_back(r.deviation);

    const HourlyNoise room_noise(make_rng(cfg.seed, kRoom, static_cast<std::uint32_t>(j)), 0.3,
                                 0.9, start, end);
    const double room_base = 21.0 + 0.5 * r.floor;
    const auto room = [&](Timestamp t) {
      return std::clamp(room_base + 0.5 * std::sin(kTwoPi * (hour_of_day(t) - 15.0) / 24.0) +
                            room_noise.at(t),
                        19.0, 25.0);
    };

    // Valve positions on the control lattice, held between ticks.
    const Timestamp ctrl = cfg.stv_cadence_s;
    const auto ticks = static_cast<std::size_t>((end - start) / ctrl + 1);
    std::vector<double> valve(ticks, 0.0);
    {
      auto vrng = make_rng(cfg.seed, kValve, static_cast<std::uint32_t>(j));
      std::uniform_int_distribution<int> level(0, 5);
      // PSP: a weekly program, four 6-h steps per weekday, repeated every week.
      std::array<double, 28> program{};
      for (auto& p : program) p = 20.0 * level(vrng);
      double last_error = 0.0;
      double last_pos = 0.0;
      bool have_error = false;
      for (std::size_t k = 0; k < ticks; ++k) {
        const Timestamp t = start + static_cast<Timestamp>(k) * ctrl;
        if (sc.room_set_point_at(t)) {
          const double hod = hour_of_day(t);
          const bool day = hod >= 6.0 && hod < 22.0;
          const double sp = (day ? cfg.rsp_day_c : cfg.rsp_night_c) +
                            cfg.rsp_floor_increment_c * r.floor + r.setpoint_offset;
          const double e = sp - room(t);
          if (!have_error || std::abs(e - last_error) > cfg.rsp_deadband_k) {
            last_pos = std::clamp(cfg.rsp_gain_pct_per_k * (e + 0.5), 0.0, 100.0);
            last_error = e;
            have_error = true;
          }
          valve[k] = last_pos;
        } else {
          have_error = false;
          const auto weekday = static_cast<std::size_t>(((t / 86400) % 7 + 7) % 7);
          const auto block = static_cast<std::size_t>(hour_of_day(t) / 6.0);
          valve[k] = program[weekday * 4 + std::min<std::size_t>(block, 3)];
        }
      }
    }
    const auto valve_at = [&](Timestamp t) {
      return valve[std::min(ticks - 1, static_cast<std::size_t>((t - start) / ctrl))];
    };

    // Physics on the grid.
    const double g_full = cfg.flow_gain * q50 / kEn442BaseDifference;  // W/K
    const double cap = tau_m * q50 / kEn442BaseDifference;              // J/K
    std::vector<double> ta(ng), tin(ng), tm(ng), gk(ng), emit(ng), hca_rate(ng);
    for (std::size_t k = 0; k < ng; ++k) {
      const Timestamp t = grid[k];
      ta[k] = room(t);
      const double v = valve_at(t);
      const bool flowing = shared.heater_on[k] && v > 0.0;
      const double target = flowing ? shared.supply[k] : ta[k];
      const double dt = k == 0 ? 0.0 : static_cast<double>(t - grid[k - 1]);
      if (k == 0) {
        tin[k] = target;
      } else {
        const double alpha = tau_in > 0.0 ? 1.0 - std::exp(-dt / tau_in) : 1.0;
        tin[k] = tin[k - 1] + alpha * (target - tin[k - 1]);
      }
      double g = flowing ? g_full * v / 100.0 : 0.0;
      const double a = (k == 0 || cap == 0.0) ? 0.0 : cap / dt;
      const double prev = k == 0 ? ta[k] : tm[k - 1];
      double x = solve_mean_temperature(a, g, prev, tin[k], ta[k], q50, r.n_true);
      if (g > 0.0 && x > tin[k]) {
        // Water colder than the radiator: the check valve keeps it from cooling it.
        g = 0.0;
        x = solve_mean_temperature(a, g, prev, tin[k], ta[k], q50, r.n_true);
      }
      tm[k] = x;
      gk[k] = g;
      emit[k] = en442_power(q50, r.n_true, x, ta[k]);
      const double surface = r.coupling * (x - ta[k]);
      hca_rate[k] = surface >= cfg.hca_start_difference_k
                        ? normalized_difference_power(surface, kHcaBaseDifference, r.n)
                        : 0.0;
    }
    // Emission is the truth. Fluid power differs by what the body stores,
    // which only the per-radiator meters see.
    const GridTrace emission(grid, emit);  // W, integral in Wh
    const GridTrace units(grid, hca_rate);
    const GridTrace tin_trace(grid, tin);
    const GridTrace tm_trace(grid, tm);
    const GridTrace g_trace(grid, gk);

    // Valve readings.
    std::vector<StvSample> stv, stv_clean;
    stv.reserve(stv_times.size());
    stv_clean.reserve(stv_times.size());
    {
      auto nrng = make_rng(cfg.seed, kStvNoise, static_cast<std::uint32_t>(j));
      std::normal_distribution<double> n01(0.0, 1.0);
      const double sd = cfg.noise.stv_temperature_sd;
      for (const Timestamp t : stv_times) {
        StvSample s{t, tin_trace.value_at(t), room(t), valve_at(t)};
        stv_clean.push_back(s);
        if (sd > 0.0) {
          s.inlet_c += sd * n01(nrng);
          s.room_c += sd * n01(nrng);
        }
        stv.push_back(s);
      }
    }

    // True emitted energy per period.
    std::vector<double> cum_at_dhm(dhm_times.size());
    if (cfg.physics == Physics::En442) {
      for (std::size_t i = 0; i < m; ++i) {
        truth.radiator_energy_kwh[i][j] =
            emission.integral(ds.periods[i].start, ds.periods[i].end) / 1000.0;
      }
      for (std::size_t d = 0; d < dhm_times.size(); ++d) {
        cum_at_dhm[d] = emission.integral_to(dhm_times[d]) / 1000.0;
        central_power[d] += emission.value_at(dhm_times[d]);
      }
    } else {
      const std::span<const StvSample> clean(stv_clean);
      for (std::size_t i = 0; i < m; ++i) {
        truth.radiator_energy_kwh[i][j] =
            theta_stv * stv_normalized_integral(clean, r.n, ds.periods[i]) / 1000.0;
      }
      double acc = 0.0;
      for (std::size_t d = 0; d < dhm_times.size(); ++d) {
        if (d > 0) {
          acc += theta_stv *
                 stv_normalized_integral(clean, r.n, IntegrationPeriod{0, dhm_times[d - 1], dhm_times[d]}) /
                 1000.0;
        }
        cum_at_dhm[d] = acc;
        const StvSample s = sample_at(clean, dhm_times[d]);
        central_power[d] +=
            theta_stv * normalized_difference_power(s.inlet_c - s.room_c, kEn442BaseDifference, r.n);
      }
    }
    for (std::size_t d = 0; d < dhm_times.size(); ++d) central_energy[d] += cum_at_dhm[d];

    // Allocator readings.
    std::vector<HcaSample> hca;
    hca.reserve(hca_times.size());
    const double scale = cfg.hca_counts_per_unit_hour * r.hca_gain;
    for (const Timestamp t : hca_times) {
      double c = scale * units.integral_to(t);
      c = std::floor(c);
      if (!hca.empty()) c = std::max(c, hca.back().count);
      hca.push_back(HcaSample{t, c});
    }

    ds.series.push_back(DeviceTimeSeries{"STV_" + r.id, r.id, 1.0, std::move(stv)});
    ds.series.push_back(
        DeviceTimeSeries{"HCA_" + r.id, r.id, cfg.hca_counts_per_unit_hour, std::move(hca)});

    if (cfg.emit_reference_meters) {
      auto frng = make_rng(cfg.seed, kFlowNoise, static_cast<std::uint32_t>(j));
      std::normal_distribution<double> n01(0.0, 1.0);
      std::vector<DhmSample> meter;
      meter.reserve(dhm_times.size());
      double energy = 0.0;
      for (const Timestamp t : dhm_times) {
        const double g = g_trace.value_at(t);
        const double in = tin_trace.value_at(t);
        const double mean = tm_trace.value_at(t);
        const double flow = 0.5 * g * lph_per_w_per_k;  // m c_p = G / 2
        DhmSample s;
        s.t = t;
        s.inlet_c = in;
        s.outlet_c = g > 0.0 ? 2.0 * mean - in : mean;
        s.flow_lph = flow >= cfg.cutoff_flow_lph
                         ? std::max(0.0, flow * (1.0 + cfg.noise.reference_flow_sd_rel * n01(frng)))
                         : 0.0;
        if (!meter.empty()) {
          const DhmSample& p = meter.back();
          const double dt_h = static_cast<double>(t - p.t) / kSecondsPerHour;
          const double p0 = p.flow_lph * (p.inlet_c - p.outlet_c) / lph_per_w_per_k;
          const double p1 = s.flow_lph * (s.inlet_c - s.outlet_c) / lph_per_w_per_k;
          energy += std::max(0.0, 0.5 * dt_h * (p0 + p1) / 1000.0);
        }
        s.energy_kwh = energy;
        meter.push_back(s);
      }
      ds.series.push_back(DeviceTimeSeries{"DHM_" + r.id, r.id, 1.0, std::move(meter)});
    }
  }

  // Building meter and per-period totals, heat losses included.
  const double gross = 1.0 + cfg.loss_fraction;
  truth.total_kwh.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (const double e : truth.radiator_energy_kwh[i]) s += e;
    truth.total_kwh[i] = gross * s;
  }
  ds.total_energy_kwh = truth.total_kwh;

  std::vector<DhmSample> central;
  central.reserve(dhm_times.size());
  constexpr double kCentralDeltaT = 10.0;
  for (std::size_t d = 0; d < dhm_times.size(); ++d) {
    const Timestamp t = dhm_times[d];
    const double p = gross * central_power[d];
    DhmSample s;
    s.t = t;
    s.inlet_c = sc.heater_on(t) ? sc.supply(t) : 20.0;
    s.outlet_c = p > 0.0 ? s.inlet_c - kCentralDeltaT : s.inlet_c;
    s.flow_lph = p > 0.0 ? p / kCentralDeltaT * lph_per_w_per_k : 0.0;
    s.energy_kwh = gross * central_energy[d];
    if (!central.empty()) s.energy_kwh = std::max(s.energy_kwh, central.back().energy_kwh);
    central.push_back(s);
  }
  ds.series.push_back(DeviceTimeSeries{"DHM_central", std::nullopt, 1.0, std::move(central)});
  return sim;
}

}  // namespace heatalloc
