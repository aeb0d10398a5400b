// pedas command-line tool: fit, plan, run, compare.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pedas/config.hpp"
#include "pedas/error.hpp"
#include "pedas/log.hpp"
#include "pedas/planner.hpp"
#include "pedas/scenario.hpp"
#include "pedas/sim.hpp"
#include "pedas/vehicle.hpp"

namespace fs = std::filesystem;
using namespace pedas;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kRuntime = 3 };

struct Options {
  std::string scenario;
  std::string baseline_scenario;
  std::string params;
  std::string config;
  std::string driver;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string mode = "assisted";
  std::string compare_mode = "both";
};

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

RunSettings settings(const Options& o) {
  RunSettings rs = o.config.empty() ? RunSettings{} : load_run_settings(o.config);
  if (!o.driver.empty()) {
    const DriverModel preset = driver_for_style(parse_driver_style(o.driver));
    rs.driver = preset;
  }
  return rs;
}

double route_top_speed(const Scenario& sc) {
  double v = 0.0;
  for (const auto& seg : sc.route.limits) v = std::max(v, seg.v_max);
  return v;
}

VehicleModel vehicle_for(const Options& o, const Scenario* sc) {
  if (o.params.empty()) throw ValidationError("--params is required");
  const VehicleSpec spec = load_vehicle_spec(o.params);
  double v_hi = 30.0;
  if (sc) v_hi = route_top_speed(*sc) * 1.15;
  else if (spec.physical_map) v_hi = spec.grid_v.stop;
  return prepare_vehicle(spec, 0.0, v_hi);
}

Scenario scenario_for(const std::string& path) {
  if (path.empty()) throw ValidationError("--scenario is required");
  return load_scenario(path);
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

int cmd_fit(const Options& o) {
  const VehicleSpec spec = load_vehicle_spec(o.params);
  const double v_hi = spec.physical_map ? spec.grid_v.stop : 30.0;
  const VehicleModel m = prepare_vehicle(spec, 0.0, v_hi);
  const fs::path out = fs::path(o.out) / "params_fitted.json";
  write_atomic(out, dump_vehicle_model(spec, m) + "\n");
  const auto& c = m.coeffs;
  std::cout << "power map: a00=" << c.a00 << " a10=" << c.a10 << " a01=" << c.a01 << " a11=" << c.a11
            << " a20=" << c.a20 << " a02=" << c.a02 << "\n";
  if (m.fit.max_abs_power > 0.0) {
    std::cout << "residual: rms " << fmt("%.2f", m.fit.rms_residual) << " W ("
              << fmt("%.3f", 100.0 * m.fit.rms_residual / m.fit.max_abs_power) << "% of max), max "
              << fmt("%.2f", m.fit.max_residual) << " W\n";
  }
  std::cout << "aero line: p1=" << m.params.p1 << " p2=" << m.params.p2 << "; traction line: p3=" << m.params.p3
            << " p4=" << m.params.p4 << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return kOk;
}

int cmd_plan(const Options& o) {
  const Scenario sc = scenario_for(o.scenario);
  const VehicleModel vm = vehicle_for(o, &sc);
  const RunSettings rs = settings(o);
  const AllowedProfile allowed = allowed_speed_profile(sc, rs.sim.planner.a_lat_max);
  const SpeedProfile prof = plan_dp_profile(sc, allowed, vm.params, vm.coeffs, rs.sim);
  std::ostringstream csv;
  csv << "position_m,v_min,v_max,v_dp\n";
  for (std::size_t i = 0; i < prof.positions.size(); ++i) {
    const auto lim = allowed.at(prof.positions[i]);
    csv << fmt("%.3f", prof.positions[i]) << ',' << fmt("%.4f", lim.v_min) << ',' << fmt("%.4f", lim.v_max) << ','
        << fmt("%.4f", prof.speeds[i]) << '\n';
  }
  const fs::path out = fs::path(o.out) / "profile.csv";
  write_atomic(out, csv.str());
  std::cout << "stages: " << prof.positions.size() << "\n"
            << "cost: " << fmt("%.6f", prof.cost) << "\n"
            << "energy: " << fmt("%.3f", prof.energy_wh) << " Wh\n"
            << "time: " << fmt("%.2f", prof.time_s) << " s\n"
            << "wrote " << out.string() << "\n";
  return kOk;
}

struct RunOutput {
  TripLog log;
  TripMetrics metrics;
};

void write_run(const Options& o, const RunOutput& r) {
  const std::string tag(to_string(r.log.mode));
  const fs::path dir(o.out);
  write_atomic(dir / ("trace_" + tag + ".csv"), trip_csv(r.log));
  write_atomic(dir / ("metrics_" + tag + ".json"), metrics_json(r.metrics));
}

std::vector<RunOutput> simulate(const Options& o, const std::vector<RunMode>& modes) {
  const Scenario sc = scenario_for(o.scenario);
  std::optional<Scenario> base_sc;
  if (!o.baseline_scenario.empty()) base_sc = scenario_for(o.baseline_scenario);
  const VehicleModel vm = vehicle_for(o, &sc);
  const RunSettings rs = settings(o);

  std::optional<SpeedProfile> dp;
  if (std::find(modes.begin(), modes.end(), RunMode::Assisted) != modes.end()) {
    const AllowedProfile allowed = allowed_speed_profile(sc, rs.sim.planner.a_lat_max);
    dp = plan_dp_profile(sc, allowed, vm.params, vm.coeffs, rs.sim);
  }
  std::vector<BatchJob> jobs;
  for (RunMode m : modes) {
    BatchJob j;
    j.mode = m;
    j.scenario = (m == RunMode::Baseline && base_sc) ? &*base_sc : &sc;
    j.driver = m == RunMode::Baseline ? rs.driver : rs.assisted_driver;
    j.dp_profile = dp ? &*dp : nullptr;
    j.seed = o.seed;
    jobs.push_back(j);
  }
  auto logs = run_batch(jobs, vm.params, vm.coeffs, rs.sim);
  std::vector<RunOutput> out;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    TripMetrics m = compute_metrics(logs[i], *jobs[i].scenario, vm.coeffs, rs.sim.violation_tol);
    out.push_back({std::move(logs[i]), std::move(m)});
  }
  return out;
}

std::vector<RunMode> parse_modes(const std::string& mode) {
  if (mode == "baseline") return {RunMode::Baseline};
  if (mode == "assisted") return {RunMode::Assisted};
  if (mode == "both") return {RunMode::Baseline, RunMode::Assisted};
  throw ValidationError("--mode: expected baseline, assisted or both");
}

int cmd_run(const Options& o) {
  for (const auto& r : simulate(o, parse_modes(o.mode))) {
    write_run(o, r);
    const auto& m = r.metrics;
    std::cout << to_string(r.log.mode) << ": energy " << fmt("%.4f", m.energy_kwh) << " kWh, time "
              << fmt("%.1f", m.trip_time_s) << " s, violation time " << fmt("%.1f", m.speed_violation_time_s)
              << " s, green crossings " << m.signals_crossed_green << "/" << m.signals_encountered << "\n";
  }
  std::cout << "wrote traces to " << o.out << "\n";
  return kOk;
}

int cmd_compare(const Options& o) {
  // A single mode compares that mode against itself (sanity check, 0% deltas).
  auto modes = parse_modes(o.compare_mode);
  if (modes.size() == 1) modes.push_back(modes.front());
  const auto runs = simulate(o, modes);
  for (const auto& r : runs) write_run(o, r);
  const ComparisonReport rep = compare_runs(runs[0].metrics, runs[1].metrics);
  write_atomic(fs::path(o.out) / "report.json", report_json(rep));
  std::cout << report_table(rep);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive eco-driving assistance: planning, control and simulation"};
  app.require_subcommand(1);
  Options o;
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "debug, info, warn, error or off")->capture_default_str();

  auto common = [&](CLI::App* sub, bool scenario) {
    if (scenario) sub->add_option("--scenario", o.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--params", o.params, "Vehicle parameter JSON file")->required()->check(CLI::ExistingFile);
    sub->add_option("--mpc-config", o.config, "Run configuration JSON file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
  };

  auto* fit = app.add_subcommand("fit", "Fit power map and force lines from a parameter file");
  common(fit, false);
  auto* plan = app.add_subcommand("plan", "Compute the DP speed profile");
  common(plan, true);
  auto* run = app.add_subcommand("run", "Simulate a trip");
  common(run, true);
  run->add_option("--driver", o.driver, "Baseline driver style")
      ->check(CLI::IsMember({"cautious", "normal", "sporty"}));
  run->add_option("--mode", o.mode, "baseline, assisted or both")
      ->check(CLI::IsMember({"baseline", "assisted", "both"}))
      ->capture_default_str();
  auto* compare = app.add_subcommand("compare", "Run baseline and assisted trips and compare KPIs");
  common(compare, true);
  compare->add_option("--driver", o.driver, "Baseline driver style")
      ->check(CLI::IsMember({"cautious", "normal", "sporty"}));
  compare->add_option("--mode", o.compare_mode, "both, or one mode compared against itself")
      ->check(CLI::IsMember({"baseline", "assisted", "both"}))
      ->capture_default_str();
  compare->add_option("--baseline-scenario", o.baseline_scenario, "Scenario for the baseline run")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (log_level == "debug") log::set_level(log::Level::Debug);
    else if (log_level == "info") log::set_level(log::Level::Info);
    else if (log_level == "warn") log::set_level(log::Level::Warn);
    else if (log_level == "error") log::set_level(log::Level::Error);
    else if (log_level == "off") log::set_level(log::Level::Off);
    else {
      std::cerr << "error: unknown --log-level " << log_level << "\n";
      return kUsage;
    }
    if (fit->parsed()) return cmd_fit(o);
    if (plan->parsed()) return cmd_plan(o);
    if (run->parsed()) return cmd_run(o);
    if (compare->parsed()) return cmd_compare(o);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
