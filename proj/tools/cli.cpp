#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "heatalloc/errors.hpp"
#include "heatalloc/evaluation.hpp"
#include "heatalloc/io.hpp"
#include "heatalloc/sensitivity.hpp"
#include "heatalloc/simulator.hpp"
#include "heatalloc/uncertainty.hpp"

namespace heatalloc::cli {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("heatalloc", sink);
  log->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("HEATALLOC_LOG"); env && *env) {
    level = spdlog::level::from_str(env);
  }
  log->set_level(level);
  return log;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string("cannot parse ") + what + " value '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
  return out;
}

LambdaPolicy parse_lambda(const std::string& text, const std::string& grid) {
  LambdaPolicy p;
  if (!grid.empty()) {
    const auto g = parse_list(grid, "--lambda-grid");
    if (g.size() != 3 || g[2] < 2.0 || g[2] != static_cast<double>(static_cast<std::size_t>(g[2]))) {
      throw ConfigError("--lambda-grid expects lo,hi,count");
    }
    p.grid = log_grid(g[0], g[1], static_cast<std::size_t>(g[2]));
  }
  if (text == "auto") return p;
  const auto v = parse_list(text, "--lambda");
  if (v.size() != 1 || !(v[0] >= 0.0)) {
    throw ConfigError("--lambda expects a non-negative number or 'auto'");
  }
  p.fixed = v[0];
  return p;
}

SubsetMap resolve_subsets(const std::string& spec, const Dataset& ds) {
  if (spec == "registry") return subsets_from_registry(ds);
  if (spec == "radiators") {
    std::vector<std::string> ids;
    for (const auto& r : ds.radiators) ids.push_back(r.id);
    return per_radiator_subsets(ids);
  }
  if (!fs::exists(spec)) throw ConfigError("subset file '" + spec + "' not found");
  return io::read_subsets(spec);
}

void report_warnings(spdlog::logger& log, const RadiatorAllocation& a) {
  if (a.warnings.empty()) return;
  if (a.warnings.size() > 3) {
    log.warn("{}: {} diagnostic warnings (set HEATALLOC_LOG=debug to list them)", a.method,
             a.warnings.size());
    for (const auto& w : a.warnings) log.debug("{}: {}", a.method, w);
  } else {
    for (const auto& w : a.warnings) log.warn("{}: {}", a.method, w);
  }
}

void require_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("data directory '" + dir + "' not found");
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, spdlog::logger& log) {
  ScenarioConfig cfg;
  if (!a.config.empty()) {
    if (!fs::exists(a.config)) throw ConfigError("config file '" + a.config + "' not found");
    cfg = io::read_scenario(a.config);
  }
  if (a.seed) cfg.seed = *a.seed;
  validate_config(cfg);
  log.info("simulating {} days, seed {}", cfg.duration_days, cfg.seed);
  const Simulation sim = simulate_season(cfg);
  io::write_dataset(sim.dataset, a.out);
  io::write_ground_truth(sim.truth, fs::path(a.out) / "ground_truth.json");
  std::ofstream(fs::path(a.out) / "scenario.json", std::ios::binary) << io::scenario_to_json(cfg);
  double total = 0.0;
  for (const double q : sim.truth.total_kwh) total += q;
  out << "simulated " << sim.dataset.periods.size() << " periods, "
      << sim.dataset.radiators.size() << " radiators, total " << io::format_number(total)
      << " kWh -> " << a.out << "\n";
  return kExitOk;
}

struct EstimateArgs {
  std::string data;
  std::string method = "hca";
  std::string lambda = "auto";
  std::string grid;
  bool lcurve = false;
  std::string out;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, spdlog::logger& log) {
  require_dir(a.data);
  const Method method = parse_method(a.method);
  const LambdaPolicy policy = parse_lambda(a.lambda, a.grid);
  const Dataset ds = io::read_dataset(a.data);
  const Eigen::VectorXd prior = prior_vector(ds, method);
  EstimationRun run = run_estimation(ds, method, policy, prior);
  if (a.lcurve && !run.lcurve) run.lcurve = lcurve_select(run.sampling, prior, policy.grid);

  const std::string m(to_string(method));
  io::write_estimation(run, prior, fs::path(a.out) / ("estimate_" + m + ".json"));
  if (run.lcurve) io::write_lcurve_csv(*run.lcurve, fs::path(a.out) / ("lcurve_" + m + ".csv"));
  for (const std::size_t k : run.result.negative_components) {
    log.warn("negative parameter estimate for radiator {}", run.result.radiator_ids[k]);
  }
  out << "estimated " << run.result.radiator_ids.size() << " parameters (" << m << ") from "
      << run.result.samplings << " samplings, lambda " << io::format_number(run.result.lambda)
      << ", residual " << io::format_number(run.result.residual_norm_kwh) << " kWh\n";
  return kExitOk;
}

struct LcurveArgs {
  std::string data;
  std::string method = "hca";
  std::string grid;
  std::string out;
};

int cmd_lcurve(const LcurveArgs& a, std::ostream& out, spdlog::logger&) {
  require_dir(a.data);
  const Method method = parse_method(a.method);
  const LambdaPolicy policy = parse_lambda("auto", a.grid);
  const Dataset ds = io::read_dataset(a.data);
  const SamplingMatrix sm = assemble(ds, method);
  const LCurveSelection sel = lcurve_select(sm, prior_vector(ds, method), policy.grid);
  io::write_lcurve_csv(sel, fs::path(a.out) / ("lcurve_" + std::string(to_string(method)) + ".csv"));
  out << "lambda* = " << io::format_number(sel.lambda_star) << " (grid index " << sel.index
      << " of " << sel.points.size() << ")\n";
  return kExitOk;
}

struct EvaluateArgs {
  std::string data;
  std::vector<std::string> estimates;
  std::string truth;
  std::string reference = "auto";
  std::string subsets = "registry";
  std::string baseline = "hca_nominal";
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, spdlog::logger& log) {
  require_dir(a.data);
  const Dataset ds = io::read_dataset(a.data);
  const SubsetMap subsets = resolve_subsets(a.subsets, ds);
  const UncertaintyConfig ucfg;

  fs::path truth_file = a.truth.empty() ? fs::path(a.data) / "ground_truth.json" : fs::path(a.truth);
  RadiatorAllocation reference;
  const bool use_truth =
      a.reference == "truth" || (a.reference == "auto" && fs::exists(truth_file));
  if (a.reference != "auto" && a.reference != "truth" && a.reference != "meters") {
    throw ConfigError("--reference expects auto, truth or meters");
  }
  if (use_truth) {
    if (!fs::exists(truth_file)) throw ConfigError("ground truth '" + truth_file.string() + "' not found");
    reference = reference_from_truth(io::read_ground_truth(truth_file), ucfg);
  } else {
    reference = reference_from_meters(ds, WaterProperties{}, ucfg);
  }
  report_warnings(log, reference);

  std::vector<RadiatorAllocation> allocations;
  bool have_hca = true;
  for (const auto& r : ds.radiators) have_hca = have_hca && ds.find_series(r.id, DeviceKind::Hca);
  if (have_hca) allocations.push_back(nominal_hca_allocation(ds, ucfg));
  for (const auto& file : a.estimates) {
    if (!fs::exists(file)) throw ConfigError("estimate file '" + file + "' not found");
    const io::EstimationFile ef = io::read_estimation(file);
    allocations.push_back(improved_allocation(ds, ef.method, ef.result, ucfg));
  }
  if (allocations.empty()) throw ConfigError("nothing to evaluate: no allocator data and no estimates");
  for (const auto& al : allocations) report_warnings(log, al);

  std::vector<AllocationReport> reports;
  for (const auto& al : allocations) reports.push_back(evaluate_allocation(al, reference, subsets));
  if (a.baseline != "none") {
    const AllocationReport* base = nullptr;
    for (const auto& r : reports) {
      if (r.method == a.baseline) base = &r;
    }
    if (!base) throw ConfigError("baseline '" + a.baseline + "' is not among the evaluated methods");
    const AllocationReport base_copy = *base;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      reports[i] = evaluate_allocation(allocations[i], reference, subsets, &base_copy);
    }
  }

  const fs::path dir(a.out);
  io::write_report_json(reports, dir / "report.json");
  for (const auto& r : reports) io::write_report_csv(r, dir / ("report_" + r.method + ".csv"));
  io::write_comparison_csv(reports, dir / "comparison.csv");
  std::vector<RadiatorAllocation> budget = allocations;
  budget.push_back(reference);
  io::write_budget_json(budget, ucfg, dir / "budget.json");
  out << io::comparison_table(reports);
  return kExitOk;
}

struct SensitivityArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string axis;
  std::string levels;
  std::string lambda = "auto";
  std::string grid;
  std::string subsets = "radiators";
  std::size_t draws = 5;
  std::string out;
};

int cmd_sensitivity(const SensitivityArgs& a, std::ostream& out, spdlog::logger& log) {
  ScenarioConfig cfg;
  if (!a.config.empty()) {
    if (!fs::exists(a.config)) throw ConfigError("config file '" + a.config + "' not found");
    cfg = io::read_scenario(a.config);
  }
  if (a.seed) cfg.seed = *a.seed;
  validate_config(cfg);
  const SensitivityAxis axis = parse_sensitivity_axis(a.axis);
  const auto levels = parse_list(a.levels, "--levels");
  SensitivityOptions opt;
  opt.lambda = parse_lambda(a.lambda, a.grid);
  if (a.subsets != "radiators" && a.subsets != "registry") {
    throw ConfigError("--subsets for sensitivity expects radiators or registry");
  }
  opt.per_radiator = a.subsets == "radiators";
  opt.uniform_draws = a.draws;
  log.info("sensitivity over {} with {} levels", a.axis, levels.size());
  const auto rows = sensitivity_suite(cfg, axis, levels, opt);
  const fs::path file = fs::path(a.out) / ("sensitivity_" + std::string(to_string(axis)) + ".csv");
  io::write_sensitivity_csv(rows, axis, file);
  out << std::string(to_string(axis)) << ",lambda,improved_mape_pct,nominal_mape_pct,delta_e_hca_pp\n";
  for (const auto& r : rows) {
    out << io::format_number(r.level) << "," << io::format_number(r.lambda) << ","
        << io::format_number(r.improved.mape) << "," << io::format_number(r.nominal.mape) << ","
        << (r.improved.delta_e_hca ? io::format_number(*r.improved.delta_e_hca) : "") << "\n";
  }
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> reports;
  std::size_t mc_draws = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out, spdlog::logger&) {
  std::vector<AllocationReport> all;
  for (const auto& f : a.reports) {
    if (!fs::exists(f)) throw ConfigError("report file '" + f + "' not found");
    auto rs = io::read_report_json(f);
    all.insert(all.end(), rs.begin(), rs.end());
  }
  const std::string table = io::comparison_table(all);
  out << table;
  if (!a.out.empty()) io::write_comparison_csv(all, fs::path(a.out) / "comparison.csv");
  if (a.mc_draws > 0) {
    if (a.out.empty()) throw ConfigError("--monte-carlo needs --out");
    const UncertaintyConfig u;
    std::vector<io::MonteCarloRecord> recs;
    recs.push_back({"reference_energy", monte_carlo_check(ReferenceEnergyCase{100.0, u.meter, 3.0},
                                                          a.mc_draws, a.seed)});
    recs.push_back({"hca_units", monte_carlo_check(HcaUnitsCase{100.0, 0.05 / std::sqrt(3.0)},
                                                   a.mc_draws, a.seed)});
    recs.push_back({"estimated_energy",
                    monte_carlo_check(EstimatedEnergyCase{100.0, u.u_h, u.u_k, 0.005}, a.mc_draws,
                                      a.seed)});
    recs.push_back({"fraction", monte_carlo_check(FractionCase{{50.0, 50.0}, {1.0, 1.0}, 0},
                                                  a.mc_draws, a.seed)});
    recs.push_back({"allocation_error",
                    monte_carlo_check(AllocationErrorCase{0.3, 0.4}, a.mc_draws, a.seed)});
    io::write_monte_carlo_csv(recs, fs::path(a.out) / "monte_carlo.csv");
    for (const auto& r : recs) {
      out << "monte-carlo " << r.name << ": analytic " << io::format_number(r.result.analytic)
          << ", empirical " << io::format_number(r.result.empirical) << ", z "
          << io::format_number(r.result.z_score) << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data-driven heat cost allocation: simulate, estimate, evaluate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic heating season");
  c_sim->add_option("--config", sim.config, "Scenario JSON (defaults when omitted)");
  c_sim->add_option("--seed", sim.seed, "Override the scenario seed");
  c_sim->add_option("--out", sim.out, "Output dataset directory")->required();

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "Estimate radiator parameters");
  c_est->add_option("--data", est.data, "Dataset directory")->required();
  c_est->add_option("--method", est.method, "hca or stv")->capture_default_str();
  c_est->add_option("--lambda", est.lambda, "Regularization value or 'auto' (L-curve)")
      ->capture_default_str();
  c_est->add_option("--lambda-grid", est.grid, "L-curve grid as lo,hi,count");
  c_est->add_flag("--lcurve", est.lcurve, "Also write the L-curve table");
  c_est->add_option("--out", est.out, "Output directory")->required();

  LcurveArgs lc;
  auto* c_lc = app.add_subcommand("lcurve", "Trace the L-curve and report the corner");
  c_lc->add_option("--data", lc.data, "Dataset directory")->required();
  c_lc->add_option("--method", lc.method, "hca or stv")->capture_default_str();
  c_lc->add_option("--lambda-grid", lc.grid, "Grid as lo,hi,count");
  c_lc->add_option("--out", lc.out, "Output directory")->required();

  EvaluateArgs ev;
  auto* c_ev = app.add_subcommand("evaluate", "Allocation errors and uncertainty budget");
  c_ev->add_option("--data", ev.data, "Dataset directory")->required();
  c_ev->add_option("--estimates", ev.estimates, "Estimate JSON files")->expected(0, -1);
  c_ev->add_option("--truth", ev.truth, "Ground-truth JSON (default: <data>/ground_truth.json)");
  c_ev->add_option("--reference", ev.reference, "auto, truth or meters")->capture_default_str();
  c_ev->add_option("--subsets", ev.subsets, "Subset JSON file, 'registry' or 'radiators'")
      ->capture_default_str();
  c_ev->add_option("--baseline", ev.baseline, "Baseline method label or 'none'")
      ->capture_default_str();
  c_ev->add_option("--out", ev.out, "Output directory")->required();

  SensitivityArgs se;
  auto* c_se = app.add_subcommand("sensitivity", "Run a sensitivity protocol");
  c_se->add_option("--config", se.config, "Scenario JSON (defaults when omitted)");
  c_se->add_option("--seed", se.seed, "Override the scenario seed");
  c_se->add_option("--axis", se.axis, "frequency, heat_loss, prior_offset or prior_uniform")
      ->required();
  c_se->add_option("--levels", se.levels, "Comma-separated levels")->required();
  c_se->add_option("--lambda", se.lambda, "Regularization value or 'auto'")->capture_default_str();
  c_se->add_option("--lambda-grid", se.grid, "L-curve grid as lo,hi,count");
  c_se->add_option("--subsets", se.subsets, "radiators or registry")->capture_default_str();
  c_se->add_option("--draws", se.draws, "Draws per level for prior_uniform")->capture_default_str();
  c_se->add_option("--out", se.out, "Output directory")->required();

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "Print the method comparison table");
  c_rp->add_option("--reports", rp.reports, "report.json files")->required()->expected(1, -1);
  c_rp->add_option("--monte-carlo", rp.mc_draws, "Also run the Monte-Carlo uncertainty checks");
  c_rp->add_option("--seed", rp.seed, "Seed for the Monte-Carlo checks")->capture_default_str();
  c_rp->add_option("--out", rp.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto log = make_logger(err);
  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out, *log);
    if (c_est->parsed()) return cmd_estimate(est, out, *log);
    if (c_lc->parsed()) return cmd_lcurve(lc, out, *log);
    if (c_ev->parsed()) return cmd_evaluate(ev, out, *log);
    if (c_se->parsed()) return cmd_sensitivity(se, out, *log);
    if (c_rp->parsed()) return cmd_report(rp, out, *log);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitComputation;
  }
  return kExitUsage;
}

}  // namespace heatalloc::cli
