#include "heatalloc/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "heatalloc/errors.hpp"

namespace heatalloc::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// files

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + file.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) fs::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open '" + file.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw ConfigError("failed writing '" + file.string() + "'");
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(what + ": malformed JSON (" + e.what() + ")");
  }
}

Json read_json(const fs::path& file) { return parse_json(read_text(file), file.string()); }

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// JSON numbers: NaN and infinities become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (const double x : v) a.push_back(number(x));
  return a;
}

template <class F>
auto with_context(const std::string& ctx, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DataError(ctx + ": " + e.what());
  }
}

double as_number(const Json& j, const std::string& ctx) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw DataError(ctx + ": expected a number");
  return j.get<double>();
}

const Json& member(const Json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object()) throw DataError(ctx + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw DataError(ctx + ": missing field '" + key + "'");
  return *it;
}

double number_field(const Json& obj, const char* key, const std::string& ctx) {
  return as_number(member(obj, key, ctx), ctx + "." + key);
}

std::string string_field(const Json& obj, const char* key, const std::string& ctx) {
  const Json& v = member(obj, key, ctx);
  if (!v.is_string()) throw DataError(ctx + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> number_list(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw DataError(ctx + ": expected an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_number(j[i], ctx + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<std::string> string_list(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw DataError(ctx + ": expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw DataError(ctx + "[" + std::to_string(i) + "]: expected a string");
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

void check_schema(const Json& j, const std::string& ctx) {
  const Json& v = member(j, "schema_version", ctx);
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw DataError(ctx + ": unsupported schema_version (expected " +
                    std::to_string(kSchemaVersion) + ")");
  }
}

// ---------------------------------------------------------------------------
// CSV

std::string format_count(double c) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0f", c);
  return buf;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    out.emplace_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, const std::string& ctx) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty()) {
    throw DataError(ctx + ": cannot parse number '" + s + "'");
  }
  return v;
}

struct CsvTable {
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const fs::path& file, const std::vector<std::string>& header) {
  std::istringstream in(read_text(file));
  std::string line;
  CsvTable t;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (!have_header) {
      if (cells != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw DataError(file.string() + ": expected header '" + expected + "'");
      }
      have_header = true;
      continue;
    }
    if (cells.size() != header.size()) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(header.size()) + " columns");
    }
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) throw DataError(file.string() + ": empty file");
  return t;
}

const std::vector<std::string>& header_for(DeviceKind kind) {
  static const std::vector<std::string> hca{"timestamp", "count"};
  static const std::vector<std::string> stv{"timestamp", "inlet_c", "room_c", "valve_pct"};
  static const std::vector<std::string> dhm{"timestamp", "flow_lph", "inlet_c", "outlet_c",
                                            "energy_kwh"};
  switch (kind) {
    case DeviceKind::Hca: return hca;
    case DeviceKind::Stv: return stv;
    case DeviceKind::Dhm: return dhm;
  }
  return hca;
}

std::string join_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  out += '\n';
  return out;
}

std::string device_csv(const DeviceTimeSeries& s) {
  std::string out;
  const auto& h = header_for(s.kind());
  for (std::size_t i = 0; i < h.size(); ++i) out += (i ? "," : "") + h[i];
  out += '\n';
  std::visit(
      [&](const auto& v) {
        using S = typename std::decay_t<decltype(v)>::value_type;
        for (const S& x : v) {
          if constexpr (std::is_same_v<S, HcaSample>) {
            out += join_row({format_iso8601(x.t), format_count(x.count)});
          } else if constexpr (std::is_same_v<S, StvSample>) {
            out += join_row({format_iso8601(x.t), format_number(x.inlet_c), format_number(x.room_c),
                             format_number(x.valve_pct)});
          } else {
            out += join_row({format_iso8601(x.t), format_number(x.flow_lph),
                             format_number(x.inlet_c), format_number(x.outlet_c),
                             format_number(x.energy_kwh)});
          }
        }
      },
      s.samples);
  return out;
}

SampleList read_device(const fs::path& file, DeviceKind kind) {
  const CsvTable t = read_csv(file, header_for(kind));
  const std::string ctx = file.string();
  const auto ts = [&](const std::string& s, std::size_t r) {
    try {
      return parse_iso8601(s);
    } catch (const DataError& e) {
      throw DataError(ctx + " row " + std::to_string(r + 1) + ": " + e.what());
    }
  };
  switch (kind) {
    case DeviceKind::Hca: {
      std::vector<HcaSample> v;
      v.reserve(t.rows.size());
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        v.push_back({ts(t.rows[r][0], r), parse_double(t.rows[r][1], ctx)});
      }
      return v;
    }
    case DeviceKind::Stv: {
      std::vector<StvSample> v;
      v.reserve(t.rows.size());
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& c = t.rows[r];
        v.push_back({ts(c[0], r), parse_double(c[1], ctx), parse_double(c[2], ctx),
                     parse_double(c[3], ctx)});
      }
      return v;
    }
    case DeviceKind::Dhm: {
      std::vector<DhmSample> v;
      v.reserve(t.rows.size());
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& c = t.rows[r];
        v.push_back({ts(c[0], r), parse_double(c[1], ctx), parse_double(c[2], ctx),
                     parse_double(c[3], ctx), parse_double(c[4], ctx)});
      }
      return v;
    }
  }
  return std::vector<HcaSample>{};
}

std::string safe_file_name(const std::string& id) {
  std::string out;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

// ---------------------------------------------------------------------------
// scenario fields

std::string_view heater_name(HeaterMode m) {
  switch (m) {
    case HeaterMode::Constant: return "constant";
    case HeaterMode::Climatic: return "climatic";
    case HeaterMode::Mixed: return "mixed";
  }
  return "mixed";
}

std::string_view valve_name(ValveMode m) {
  switch (m) {
    case ValveMode::RoomSetPoint: return "rsp";
    case ValveMode::PositionSetPoint: return "psp";
    case ValveMode::Alternating: return "alternating";
  }
  return "alternating";
}

std::string_view physics_name(Physics p) { return p == Physics::En442 ? "en442" : "stv_matched"; }

class FieldReader {
 public:
  explicit FieldReader(std::string prefix) : prefix_(std::move(prefix)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError("invalid scenario field '" + prefix_ + key + "': " + why);
  }
  double num(const std::string& key, const Json& v) const {
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }
  bool boolean(const std::string& key, const Json& v) const {
    if (!v.is_boolean()) fail(key, "expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& key, const Json& v) const {
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  long long integer(const std::string& key, const Json& v) const {
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<long long>();
  }
  std::size_t count(const std::string& key, const Json& v) const {
    const long long x = integer(key, v);
    if (x < 0) fail(key, "must be non-negative");
    return static_cast<std::size_t>(x);
  }
  const std::string& prefix() const { return prefix_; }

 private:
  std::string prefix_;
};

void read_noise(const Json& j, NoiseConfig& n) {
  const FieldReader f("noise.");
  if (!j.is_object()) f.fail("", "expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "stv_temperature_sd") n.stv_temperature_sd = f.num(key, v);
    else if (key == "reference_flow_sd_rel") n.reference_flow_sd_rel = f.num(key, v);
    else if (key == "hca_display_deviation") n.hca_display_deviation = f.num(key, v);
    else f.fail(key, "unknown field");
  }
}

void read_water(const Json& j, WaterProperties& w) {
  const FieldReader f("water.");
  if (!j.is_object()) f.fail("", "expected an object");
  for (const auto& [key, v] : j.items()) {
    if (key == "density") w.density = f.num(key, v);
    else if (key == "specific_heat") w.specific_heat = f.num(key, v);
    else if (key == "u_density_rel") w.u_density_rel = f.num(key, v);
    else if (key == "u_specific_heat_rel") w.u_specific_heat_rel = f.num(key, v);
    else f.fail(key, "unknown field");
  }
}

SimRadiator read_sim_radiator(const Json& j, std::size_t index) {
  const FieldReader f("radiators[" + std::to_string(index) + "].");
  if (!j.is_object()) f.fail("", "expected an object");
  SimRadiator r;
  for (const auto& [key, v] : j.items()) {
    if (key == "q_n50") r.q_n50 = f.num(key, v);
    else if (key == "exponent_n") r.exponent_n = f.num(key, v);
    else if (key == "deviation") r.deviation = f.num(key, v);
    else if (key == "coupling") r.coupling = f.num(key, v);
    else if (key == "floor") r.floor = static_cast<int>(f.integer(key, v));
    else if (key == "wall") r.wall = f.str(key, v);
    else f.fail(key, "unknown field");
  }
  return r;
}

}  // namespace

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// dataset

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "devices", ec);
  if (ec) throw ConfigError("cannot create '" + (dir / "devices").string() + "': " + ec.message());

  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  Json periods = Json::array();
  for (const auto& p : dataset.periods) {
    periods.push_back(
        {{"index", p.index}, {"start", format_iso8601(p.start)}, {"end", format_iso8601(p.end)}});
  }
  manifest["periods"] = periods;
  manifest["total_energy_kwh"] = numbers(dataset.total_energy_kwh);
  Json devices = Json::array();
  std::set<std::string> files;
  for (const auto& s : dataset.series) {
    std::string file = "devices/" + safe_file_name(s.device_id) + ".csv";
    if (!files.insert(file).second) {
      throw DataError("two devices map to the same file name '" + file + "'");
    }
    Json d;
    d["device_id"] = s.device_id;
    if (s.radiator_id) d["radiator_id"] = *s.radiator_id;
    d["kind"] = std::string(to_string(s.kind()));
    d["file"] = file;
    if (s.kind() == DeviceKind::Hca) d["counts_per_unit_hour"] = s.counts_per_unit_hour;
    devices.push_back(d);
    write_text(dir / file, device_csv(s));
  }
  manifest["devices"] = devices;
  write_text(dir / "dataset.json", dump(manifest));

  Json registry = Json::object();
  for (const auto& r : dataset.radiators) {
    registry[r.id] = {{"q_n50", r.q_n50},         {"exponent_n", r.exponent_n},
                      {"rating_kq", r.rating_kq}, {"rating_kc", r.rating_kc},
                      {"rating_kt", r.rating_kt}, {"theta_prior", r.theta_prior},
                      {"subset_id", r.subset_id}};
  }
  write_text(dir / "radiators.json", dump(registry));
}

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory '" + dir.string() + "' not found");
  Dataset ds;
  const std::string mctx = (dir / "dataset.json").string();
  const Json manifest = read_json(dir / "dataset.json");
  check_schema(manifest, mctx);

  const Json& periods = member(manifest, "periods", mctx);
  if (!periods.is_array()) throw DataError(mctx + ": periods must be an array");
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const std::string ctx = mctx + ".periods[" + std::to_string(i) + "]";
    IntegrationPeriod p;
    const Json& idx = member(periods[i], "index", ctx);
    if (!idx.is_number_unsigned()) throw DataError(ctx + ".index: expected a non-negative integer");
    p.index = idx.get<std::size_t>();
    p.start = parse_iso8601(string_field(periods[i], "start", ctx));
    p.end = parse_iso8601(string_field(periods[i], "end", ctx));
    ds.periods.push_back(p);
  }
  ds.total_energy_kwh = number_list(member(manifest, "total_energy_kwh", mctx), mctx + ".total_energy_kwh");

  const Json& devices = member(manifest, "devices", mctx);
  if (!devices.is_array()) throw DataError(mctx + ": devices must be an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string ctx = mctx + ".devices[" + std::to_string(i) + "]";
    const Json& d = devices[i];
    DeviceTimeSeries s;
    s.device_id = string_field(d, "device_id", ctx);
    if (d.contains("radiator_id")) s.radiator_id = string_field(d, "radiator_id", ctx);
    DeviceKind kind;
    try {
      kind = parse_device_kind(string_field(d, "kind", ctx));
    } catch (const ConfigError& e) {
      throw DataError(ctx + ": " + e.what());
    }
    if (d.contains("counts_per_unit_hour")) {
      s.counts_per_unit_hour = number_field(d, "counts_per_unit_hour", ctx);
    }
    const std::string file = string_field(d, "file", ctx);
    if (!fs::exists(dir / file)) throw DataError(ctx + ": device file '" + file + "' not found");
    s.samples = read_device(dir / file, kind);
    ds.series.push_back(std::move(s));
  }

  const std::string rctx = (dir / "radiators.json").string();
  const Json registry = read_json(dir / "radiators.json");
  if (!registry.is_object()) throw DataError(rctx + ": expected an object keyed by radiator id");
  for (const auto& [id, r] : registry.items()) {
    const std::string ctx = rctx + "." + id;
    RadiatorSpec spec;
    spec.id = id;
    spec.q_n50 = number_field(r, "q_n50", ctx);
    if (r.contains("exponent_n")) spec.exponent_n = number_field(r, "exponent_n", ctx);
    if (r.contains("rating_kq")) spec.rating_kq = number_field(r, "rating_kq", ctx);
    if (r.contains("rating_kc")) spec.rating_kc = number_field(r, "rating_kc", ctx);
    if (r.contains("rating_kt")) spec.rating_kt = number_field(r, "rating_kt", ctx);
    spec.theta_prior = number_field(r, "theta_prior", ctx);
    if (r.contains("subset_id")) spec.subset_id = string_field(r, "subset_id", ctx);
    ds.radiators.push_back(std::move(spec));
  }
  return ds;
}

// ---------------------------------------------------------------------------
// ground truth

void write_ground_truth(const GroundTruth& truth, const fs::path& file) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["radiator_ids"] = truth.radiator_ids;
  j["theta_true_hca_w"] = numbers(truth.theta_true_hca_w);
  j["theta_true_stv_w"] = numbers(truth.theta_true_stv_w);
  j["deviation"] = numbers(truth.deviation);
  j["loss_fraction"] = truth.loss_fraction;
  j["total_kwh"] = numbers(truth.total_kwh);
  Json rows = Json::array();
  for (const auto& row : truth.radiator_energy_kwh) rows.push_back(numbers(row));
  j["radiator_energy_kwh"] = rows;
  write_text(file, dump(j));
}

GroundTruth read_ground_truth(const fs::path& file) {
  const std::string ctx = file.string();
  const Json j = read_json(file);
  check_schema(j, ctx);
  GroundTruth t;
  t.radiator_ids = string_list(member(j, "radiator_ids", ctx), ctx + ".radiator_ids");
  t.theta_true_hca_w = number_list(member(j, "theta_true_hca_w", ctx), ctx);
  t.theta_true_stv_w = number_list(member(j, "theta_true_stv_w", ctx), ctx);
  t.deviation = number_list(member(j, "deviation", ctx), ctx);
  t.loss_fraction = number_field(j, "loss_fraction", ctx);
  t.total_kwh = number_list(member(j, "total_kwh", ctx), ctx);
  const Json& rows = member(j, "radiator_energy_kwh", ctx);
  if (!rows.is_array()) throw DataError(ctx + ".radiator_energy_kwh: expected an array");
  for (const auto& row : rows) {
    t.radiator_energy_kwh.push_back(number_list(row, ctx + ".radiator_energy_kwh"));
    if (t.radiator_energy_kwh.back().size() != t.radiator_ids.size()) {
      throw DataError(ctx + ": energy row length differs from the radiator count");
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// scenario

ScenarioConfig scenario_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("scenario: malformed JSON (") + e.what() + ")");
  }
  const FieldReader f("");
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  ScenarioConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "duration_days") c.duration_days = f.num(key, v);
    else if (key == "start") {
      if (v.is_string()) {
        try {
          c.start = parse_iso8601(v.get<std::string>());
        } catch (const DataError& e) {
          f.fail(key, e.what());
        }
      } else {
        c.start = f.integer(key, v);
      }
    } else if (key == "sampling_frequency_per_hour") c.sampling_frequency_per_hour = f.num(key, v);
    else if (key == "heater_mode") {
      const std::string s = f.str(key, v);
      if (s == "constant") c.heater_mode = HeaterMode::Constant;
      else if (s == "climatic") c.heater_mode = HeaterMode::Climatic;
      else if (s == "mixed") c.heater_mode = HeaterMode::Mixed;
      else f.fail(key, "expected constant, climatic or mixed");
    } else if (key == "constant_supply_c") c.constant_supply_c = f.num(key, v);
    else if (key == "heater_off_margin_h") c.heater_off_margin_h = f.num(key, v);
    else if (key == "outdoor_mean_c") c.outdoor_mean_c = f.num(key, v);
    else if (key == "outdoor_amplitude_c") c.outdoor_amplitude_c = f.num(key, v);
    else if (key == "outdoor_noise_sd") c.outdoor_noise_sd = f.num(key, v);
    else if (key == "radiator_count") c.radiator_count = f.count(key, v);
    else if (key == "radiators") {
      if (!v.is_array()) f.fail(key, "expected an array");
      for (std::size_t i = 0; i < v.size(); ++i) c.radiators.push_back(read_sim_radiator(v[i], i));
    } else if (key == "deviation_low") c.deviation_low = f.num(key, v);
    else if (key == "deviation_high") c.deviation_high = f.num(key, v);
    else if (key == "coupling_low") c.coupling_low = f.num(key, v);
    else if (key == "coupling_high") c.coupling_high = f.num(key, v);
    else if (key == "exponent_spread") c.exponent_spread = f.num(key, v);
    else if (key == "floors") c.floors = static_cast<int>(f.integer(key, v));
    else if (key == "valve_mode") {
      const std::string s = f.str(key, v);
      if (s == "rsp") c.valve_mode = ValveMode::RoomSetPoint;
      else if (s == "psp") c.valve_mode = ValveMode::PositionSetPoint;
      else if (s == "alternating") c.valve_mode = ValveMode::Alternating;
      else f.fail(key, "expected rsp, psp or alternating");
    } else if (key == "rsp_day_c") c.rsp_day_c = f.num(key, v);
    else if (key == "rsp_night_c") c.rsp_night_c = f.num(key, v);
    else if (key == "rsp_floor_increment_c") c.rsp_floor_increment_c = f.num(key, v);
    else if (key == "rsp_gain_pct_per_k") c.rsp_gain_pct_per_k = f.num(key, v);
    else if (key == "rsp_deadband_k") c.rsp_deadband_k = f.num(key, v);
    else if (key == "loss_fraction") c.loss_fraction = f.num(key, v);
    else if (key == "noise") read_noise(v, c.noise);
    else if (key == "hca_counts_per_unit_hour") c.hca_counts_per_unit_hour = f.num(key, v);
    else if (key == "hca_start_difference_k") c.hca_start_difference_k = f.num(key, v);
    else if (key == "physics") {
      const std::string s = f.str(key, v);
      if (s == "en442") c.physics = Physics::En442;
      else if (s == "stv_matched") c.physics = Physics::StvMatched;
      else f.fail(key, "expected en442 or stv_matched");
    } else if (key == "inertia_time_constant_min") c.inertia_time_constant_min = f.num(key, v);
    else if (key == "inlet_time_constant_min") c.inlet_time_constant_min = f.num(key, v);
    else if (key == "flow_gain") c.flow_gain = f.num(key, v);
    else if (key == "step_s") c.step_s = f.num(key, v);
    else if (key == "stv_cadence_s") c.stv_cadence_s = f.integer(key, v);
    else if (key == "hca_cadence_s") c.hca_cadence_s = f.integer(key, v);
    else if (key == "dhm_cadence_s") c.dhm_cadence_s = f.integer(key, v);
    else if (key == "emit_reference_meters") c.emit_reference_meters = f.boolean(key, v);
    else if (key == "water") read_water(v, c.water);
    else if (key == "cutoff_flow_lph") c.cutoff_flow_lph = f.num(key, v);
    else if (key == "seed") {
      if (!v.is_number_unsigned()) f.fail(key, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else f.fail(key, "unknown field");
  }
  validate_config(c);
  return c;
}

ScenarioConfig read_scenario(const fs::path& file) { return scenario_from_json(read_text(file)); }

std::string scenario_to_json(const ScenarioConfig& c) {
  Json j;
  j["duration_days"] = c.duration_days;
  j["start"] = format_iso8601(c.start);
  j["sampling_frequency_per_hour"] = c.sampling_frequency_per_hour;
  j["heater_mode"] = std::string(heater_name(c.heater_mode));
  j["constant_supply_c"] = c.constant_supply_c;
  j["heater_off_margin_h"] = c.heater_off_margin_h;
  j["outdoor_mean_c"] = c.outdoor_mean_c;
  j["outdoor_amplitude_c"] = c.outdoor_amplitude_c;
  j["outdoor_noise_sd"] = c.outdoor_noise_sd;
  j["radiator_count"] = c.radiator_count;
  if (!c.radiators.empty()) {
    Json rs = Json::array();
    for (const auto& r : c.radiators) {
      Json o = Json::object();
      if (r.q_n50) o["q_n50"] = *r.q_n50;
      if (r.exponent_n) o["exponent_n"] = *r.exponent_n;
      if (r.deviation) o["deviation"] = *r.deviation;
      if (r.coupling) o["coupling"] = *r.coupling;
      if (r.floor) o["floor"] = *r.floor;
      if (r.wall) o["wall"] = *r.wall;
      rs.push_back(o);
    }
    j["radiators"] = rs;
  }
  j["deviation_low"] = c.deviation_low;
  j["deviation_high"] = c.deviation_high;
  j["coupling_low"] = c.coupling_low;
  j["coupling_high"] = c.coupling_high;
  j["exponent_spread"] = c.exponent_spread;
  j["floors"] = c.floors;
  j["valve_mode"] = std::string(valve_name(c.valve_mode));
  j["rsp_day_c"] = c.rsp_day_c;
  j["rsp_night_c"] = c.rsp_night_c;
  j["rsp_floor_increment_c"] = c.rsp_floor_increment_c;
  j["rsp_gain_pct_per_k"] = c.rsp_gain_pct_per_k;
  j["rsp_deadband_k"] = c.rsp_deadband_k;
  j["loss_fraction"] = c.loss_fraction;
  j["noise"] = {{"stv_temperature_sd", c.noise.stv_temperature_sd},
                {"reference_flow_sd_rel", c.noise.reference_flow_sd_rel},
                {"hca_display_deviation", c.noise.hca_display_deviation}};
  j["hca_counts_per_unit_hour"] = c.hca_counts_per_unit_hour;
  j["hca_start_difference_k"] = c.hca_start_difference_k;
  j["physics"] = std::string(physics_name(c.physics));
  j["inertia_time_constant_min"] = c.inertia_time_constant_min;
  j["inlet_time_constant_min"] = c.inlet_time_constant_min;
  j["flow_gain"] = c.flow_gain;
  j["step_s"] = c.step_s;
  j["stv_cadence_s"] = c.stv_cadence_s;
  j["hca_cadence_s"] = c.hca_cadence_s;
  j["dhm_cadence_s"] = c.dhm_cadence_s;
  j["emit_reference_meters"] = c.emit_reference_meters;
  j["water"] = {{"density", c.water.density},
                {"specific_heat", c.water.specific_heat},
                {"u_density_rel", c.water.u_density_rel},
                {"u_specific_heat_rel", c.water.u_specific_heat_rel}};
  j["cutoff_flow_lph"] = c.cutoff_flow_lph;
  j["seed"] = c.seed;
  return dump(j);
}

// ---------------------------------------------------------------------------
// estimation

void write_estimation(const EstimationRun& run, const Eigen::VectorXd& prior_w,
                      const fs::path& file) {
  const EstimationResult& r = run.result;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = std::string(to_string(run.method));
  j["lambda"] = r.lambda;
  j["lambda_policy"] = run.lcurve ? "lcurve" : "fixed";
  j["samplings"] = r.samplings;
  j["radiator_ids"] = r.radiator_ids;
  j["theta_hat_w"] = numbers(r.theta_hat_w);
  j["theta_prior_w"] = numbers(prior_w);
  j["covariance_diagonal"] = numbers(Eigen::VectorXd(r.covariance.diagonal()));
  Json upar = Json::array();
  for (std::size_t k = 0; k < r.radiator_ids.size(); ++k) {
    upar.push_back(number(r.relative_parameter_uncertainty(k)));
  }
  j["relative_parameter_uncertainty"] = upar;
  j["residual_norm_kwh"] = number(r.residual_norm_kwh);
  j["prior_deviation_norm_w"] = number(r.prior_deviation_norm_w);
  j["residual_variance"] = number(r.residual_variance);
  Json neg = Json::array();
  for (const std::size_t k : r.negative_components) neg.push_back(r.radiator_ids.at(k));
  j["negative_estimates"] = neg;
  Json cov = Json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    cov.push_back(numbers(Eigen::VectorXd(r.covariance.row(a).transpose())));
  }
  j["covariance"] = cov;
  if (run.lcurve) {
    j["lcurve"] = {{"lambda_star", run.lcurve->lambda_star}, {"index", run.lcurve->index}};
  }
  write_text(file, dump(j));
}

EstimationFile read_estimation(const fs::path& file) {
  const std::string ctx = file.string();
  const Json j = read_json(file);
  check_schema(j, ctx);
  EstimationFile out;
  try {
    out.method = parse_method(string_field(j, "method", ctx));
  } catch (const ConfigError& e) {
    throw DataError(ctx + ": " + e.what());
  }
  EstimationResult& r = out.result;
  r.lambda = number_field(j, "lambda", ctx);
  r.samplings = with_context(ctx, [&] { return member(j, "samplings", ctx).get<std::size_t>(); });
  r.radiator_ids = string_list(member(j, "radiator_ids", ctx), ctx + ".radiator_ids");
  const auto theta = number_list(member(j, "theta_hat_w", ctx), ctx + ".theta_hat_w");
  const auto prior = number_list(member(j, "theta_prior_w", ctx), ctx + ".theta_prior_w");
  const std::size_t k = r.radiator_ids.size();
  if (theta.size() != k || prior.size() != k) {
    throw DataError(ctx + ": parameter vectors differ from the radiator count");
  }
  r.theta_hat_w = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(k));
  out.theta_prior_w = Eigen::Map<const Eigen::VectorXd>(prior.data(), static_cast<Eigen::Index>(k));
  r.covariance = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  if (j.contains("covariance")) {
    const Json& cov = j["covariance"];
    if (!cov.is_array() || cov.size() != k) throw DataError(ctx + ": covariance must be K x K");
    for (std::size_t a = 0; a < k; ++a) {
      const auto row = number_list(cov[a], ctx + ".covariance");
      if (row.size() != k) throw DataError(ctx + ": covariance must be K x K");
      for (std::size_t b = 0; b < k; ++b) {
        r.covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = row[b];
      }
    }
  } else {
    const auto diag = number_list(member(j, "covariance_diagonal", ctx), ctx);
    if (diag.size() != k) throw DataError(ctx + ": covariance diagonal length mismatch");
    for (std::size_t a = 0; a < k; ++a) {
      r.covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = diag[a];
    }
  }
  r.residual_norm_kwh = number_field(j, "residual_norm_kwh", ctx);
  r.prior_deviation_norm_w = number_field(j, "prior_deviation_norm_w", ctx);
  r.residual_variance = j.contains("residual_variance")
                            ? as_number(j["residual_variance"], ctx)
                            : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t a = 0; a < k; ++a) {
    if (r.theta_hat_w(static_cast<Eigen::Index>(a)) < 0.0) r.negative_components.push_back(a);
  }
  return out;
}

void write_lcurve_csv(const LCurveSelection& sel, const fs::path& file) {
  std::string out = "lambda,residual_norm_kwh,prior_deviation_norm_w,curvature,selected\n";
  for (std::size_t i = 0; i < sel.points.size(); ++i) {
    const auto& p = sel.points[i];
    out += join_row({format_number(p.lambda), format_number(p.residual_norm),
                     format_number(p.prior_deviation_norm),
                     std::isfinite(p.curvature) ? format_number(p.curvature) : std::string("nan"),
                     i == sel.index ? "1" : "0"});
  }
  write_text(file, out);
}

SubsetMap read_subsets(const fs::path& file) {
  const std::string ctx = file.string();
  Json j;
  try {
    j = read_json(file);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object of subset id -> radiator ids");
  SubsetMap out;
  for (const auto& [sid, members] : j.items()) {
    if (!members.is_array()) throw ConfigError(ctx + "." + sid + ": expected an array");
    auto& list = out[sid];
    for (const auto& m : members) {
      if (!m.is_string()) throw ConfigError(ctx + "." + sid + ": radiator ids must be strings");
      list.push_back(m.get<std::string>());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// reports

namespace {

Json indicators_json(const GlobalIndicators& g) {
  Json j;
  j["sigma"] = number(g.sigma);
  j["max"] = number(g.max);
  j["min"] = number(g.min);
  j["mape"] = number(g.mape);
  j["delta_e_hca"] = g.delta_e_hca ? number(*g.delta_e_hca) : Json(nullptr);
  j["p_l"] = g.p_l ? number(*g.p_l) : Json(nullptr);
  return j;
}

std::optional<double> optional_number(const Json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return as_number(j[key], ctx + "." + key);
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

}  // namespace

void write_report_json(const std::vector<AllocationReport>& reports, const fs::path& file) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  Json list = Json::array();
  for (const auto& r : reports) {
    Json o;
    o["method"] = r.method;
    Json rows = Json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"subset_id", row.subset_id},
                      {"fraction", number(row.fraction)},
                      {"reference_fraction", number(row.reference_fraction)},
                      {"error", number(row.error)},
                      {"u_fraction", number(row.u_fraction)},
                      {"u_reference_fraction", number(row.u_reference_fraction)},
                      {"u_error", number(row.u_error)}});
    }
    o["subsets"] = rows;
    o["indicators"] = indicators_json(r.indicators);
    o["mean_u_error"] = number(r.mean_u_error);
    o["u_global"] = number(r.u_global);
    o["u_delta_e_hca"] = r.u_delta_e_hca ? number(*r.u_delta_e_hca) : Json(nullptr);
    list.push_back(o);
  }
  j["reports"] = list;
  write_text(file, dump(j));
}

std::vector<AllocationReport> read_report_json(const fs::path& file) {
  const std::string ctx = file.string();
  const Json j = read_json(file);
  check_schema(j, ctx);
  const Json& list = member(j, "reports", ctx);
  if (!list.is_array()) throw DataError(ctx + ".reports: expected an array");
  std::vector<AllocationReport> out;
  for (const auto& o : list) {
    AllocationReport r;
    r.method = string_field(o, "method", ctx);
    const Json& rows = member(o, "subsets", ctx);
    if (!rows.is_array()) throw DataError(ctx + ".subsets: expected an array");
    for (const auto& row : rows) {
      SubsetRow s;
      s.subset_id = string_field(row, "subset_id", ctx);
      s.fraction = number_field(row, "fraction", ctx);
      s.reference_fraction = number_field(row, "reference_fraction", ctx);
      s.error = number_field(row, "error", ctx);
      s.u_fraction = number_field(row, "u_fraction", ctx);
      s.u_reference_fraction = number_field(row, "u_reference_fraction", ctx);
      s.u_error = number_field(row, "u_error", ctx);
      r.rows.push_back(std::move(s));
    }
    const Json& g = member(o, "indicators", ctx);
    r.indicators.sigma = number_field(g, "sigma", ctx);
    r.indicators.max = number_field(g, "max", ctx);
    r.indicators.min = number_field(g, "min", ctx);
    r.indicators.mape = number_field(g, "mape", ctx);
    r.indicators.delta_e_hca = optional_number(g, "delta_e_hca", ctx);
    r.indicators.p_l = optional_number(g, "p_l", ctx);
    r.mean_u_error = number_field(o, "mean_u_error", ctx);
    r.u_global = number_field(o, "u_global", ctx);
    r.u_delta_e_hca = optional_number(o, "u_delta_e_hca", ctx);
    out.push_back(std::move(r));
  }
  return out;
}

void write_report_csv(const AllocationReport& r, const fs::path& file) {
  std::string out =
      "subset_id,fraction_pct,reference_fraction_pct,error_pp,u_fraction_pp,"
      "u_reference_fraction_pp,u_error_pp,sigma_pp,max_pp,min_pp,mape_pct,delta_e_hca_pp,"
      "p_l_pct,mean_u_error_pp,u_global_pp\n";
  for (const auto& row : r.rows) {
    out += join_row({row.subset_id, format_number(row.fraction),
                     format_number(row.reference_fraction), format_number(row.error),
                     format_number(row.u_fraction), format_number(row.u_reference_fraction),
                     format_number(row.u_error), "", "", "", "", "", "", "", ""});
  }
  const auto& g = r.indicators;
  out += join_row({"__global__", "", "", "", "", "", "", format_number(g.sigma),
                   format_number(g.max), format_number(g.min), format_number(g.mape),
                   opt_cell(g.delta_e_hca), opt_cell(g.p_l), format_number(r.mean_u_error),
                   format_number(r.u_global)});
  write_text(file, out);
}

std::string comparison_table(const std::vector<AllocationReport>& reports) {
  std::string out = "indicator";
  for (const auto& r : reports) out += "," + r.method;
  out += '\n';
  const auto line = [&](const char* name, auto get) {
    out += name;
    for (const auto& r : reports) out += "," + opt_cell(get(r));
    out += '\n';
  };
  using O = std::optional<double>;
  line("sigma_pp", [](const AllocationReport& r) { return O(r.indicators.sigma); });
  line("max_pp", [](const AllocationReport& r) { return O(r.indicators.max); });
  line("min_pp", [](const AllocationReport& r) { return O(r.indicators.min); });
  line("mape_pct", [](const AllocationReport& r) { return O(r.indicators.mape); });
  line("delta_e_hca_pp", [](const AllocationReport& r) { return r.indicators.delta_e_hca; });
  line("p_l_pct", [](const AllocationReport& r) { return r.indicators.p_l; });
  line("mean_u_error_pp", [](const AllocationReport& r) { return O(r.mean_u_error); });
  line("u_global_pp", [](const AllocationReport& r) { return O(r.u_global); });
  line("u_delta_e_hca_pp", [](const AllocationReport& r) { return r.u_delta_e_hca; });
  return out;
}

void write_comparison_csv(const std::vector<AllocationReport>& reports, const fs::path& file) {
  write_text(file, comparison_table(reports));
}

void write_budget_json(const std::vector<RadiatorAllocation>& allocations,
                       const UncertaintyConfig& cfg, const fs::path& file) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["constants"] = {
      {"u_h", cfg.u_h},
      {"u_k", cfg.u_k},
      {"meter",
       {{"flow", cfg.meter.flow},
        {"delta_t", cfg.meter.delta_t},
        {"density", cfg.meter.density},
        {"specific_heat", cfg.meter.specific_heat}}},
      {"display_deviation",
       {{"band_low_k", cfg.bands.band_low_k},
        {"band_high_k", cfg.bands.band_high_k},
        {"in_band_bound", cfg.bands.in_band_bound},
        {"outside_band_bound", cfg.bands.outside_band_bound}}}};
  Json list = Json::array();
  for (const auto& a : allocations) {
    Json o;
    o["method"] = a.method;
    Json rs = Json::array();
    for (std::size_t k = 0; k < a.radiator_ids.size(); ++k) {
      rs.push_back({{"radiator_id", a.radiator_ids[k]},
                    {"amount", number(a.amount.at(k))},
                    {"u_amount", number(a.u_amount.at(k))}});
    }
    o["radiators"] = rs;
    o["warnings"] = a.warnings;
    list.push_back(o);
  }
  j["allocations"] = list;
  write_text(file, dump(j));
}

void write_sensitivity_csv(const std::vector<SensitivityRow>& rows, SensitivityAxis axis,
                           const fs::path& file) {
  std::string out = std::string(to_string(axis)) +
                    ",lambda,improved_sigma_pp,improved_max_pp,improved_min_pp,improved_mape_pct,"
                    "delta_e_hca_pp,p_l_pct,nominal_sigma_pp,nominal_max_pp,nominal_min_pp,"
                    "nominal_mape_pct,mean_u_error_pp,u_global_pp\n";
  for (const auto& r : rows) {
    out += join_row({format_number(r.level), format_number(r.lambda),
                     format_number(r.improved.sigma), format_number(r.improved.max),
                     format_number(r.improved.min), format_number(r.improved.mape),
                     opt_cell(r.improved.delta_e_hca), opt_cell(r.improved.p_l),
                     format_number(r.nominal.sigma), format_number(r.nominal.max),
                     format_number(r.nominal.min), format_number(r.nominal.mape),
                     format_number(r.mean_u_error), format_number(r.u_global)});
  }
  write_text(file, out);
}

void write_monte_carlo_csv(const std::vector<MonteCarloRecord>& records, const fs::path& file) {
  std::string out = "case,analytic,empirical,z_score,draws\n";
  for (const auto& rec : records) {
    out += join_row({rec.name, format_number(rec.result.analytic),
                     format_number(rec.result.empirical), format_number(rec.result.z_score),
                     std::to_string(rec.result.draws)});
  }
  write_text(file, out);
}

}  // namespace heatalloc::io
