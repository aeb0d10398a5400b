#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "pedas/error.hpp"
#include "pedas/sim.hpp"
#include "support.hpp"

using namespace pedas;

namespace {

const VehicleModel& vm() {
  static const VehicleModel m = testutil::leaf();
  return m;
}

struct Run {
  TripLog log;
  TripMetrics metrics;
};

Run simulate(const Scenario& sc, RunMode mode, const DriverModel& driver, std::uint64_t seed = 0,
             SimConfig cfg = {}) {
  const VehicleModel m = testutil::vehicle_for(sc);
  const AllowedProfile allowed(sc, cfg.planner.a_lat_max);
  const SpeedProfile dp = plan_dp_profile(sc, allowed, m.params, m.coeffs, cfg);
  TripLog log = run_simulation(sc, mode, driver, m.params, m.coeffs, cfg, &dp, seed);
  TripMetrics met = compute_metrics(log, sc, m.coeffs, cfg.violation_tol);
  return {std::move(log), std::move(met)};
}

Scenario load(const std::string& name) { return load_scenario(testutil::data_path("scenarios/" + name + ".json")); }

TripRecord record(double t, double s, double v) {
  TripRecord r;
  r.t = t;
  r.s = s;
  r.v_h = v;
  return r;
}

TripLog crafted(const std::vector<TripRecord>& records, double dt = 1.0) {
  TripLog log;
  log.label = "flat";
  log.dt = dt;
  log.records = records;
  return log;
}

Scenario with_signal(Phase phase) {
  Scenario sc = testutil::flat_road(200, 20);
  TrafficSignal sig;
  sig.position_m = 50;
  sig.cycle = {{phase, 100.0}};
  sc.signals.push_back(sig);
  return sc;
}

}  // namespace

TEST_CASE("driver_step") {
  const auto& p = vm().params;
  HostState st;
  st.v_h = 10.0;
  Advisory adv;
  adv.direction = Direction::Up;

  SUBCASE("hold with band coasting releases both pedals") {
    DriverModel d = driver_for_style(DriverStyle::Normal);
    d.band_coast = true;
    adv.direction = Direction::Hold;
    const auto u = driver_step(d, adv, 10.5, st, 0.0, p, 0.2);
    CHECK(u.F_t == 0.0);
    CHECK(u.F_b == 0.0);
  }
  SUBCASE("target equal to the speed holds it against resistance") {
    const auto u = driver_step(ideal_driver(0.2), adv, 10.0, st, 0.0, p, 0.2);
    CHECK(u.F_t == doctest::Approx(resistive_force(p, 10.0, 0.0)).epsilon(1e-12));
    CHECK(u.F_b == 0.0);
  }
  SUBCASE("sporty acceleration is clipped at the style maximum") {
    const DriverModel d = driver_for_style(DriverStyle::Sporty);
    const auto u = driver_step(d, adv, 12.0, st, 0.0, p, 0.2);
    const double expected = p.m_eq * d.max_accel + resistive_force(p, 10.0, 0.0);
    REQUIRE(expected < p.traction_limit(10.0));
    CHECK(d.max_accel == doctest::Approx(2.5));
    CHECK(u.F_t == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("hard braking is clipped at the decel envelope") {
    const DriverModel d = driver_for_style(DriverStyle::Normal);
    const auto u = driver_step(d, adv, 0.0, st, 0.0, p, 0.2);
    CHECK(u.F_t == 0.0);
    CHECK(u.F_b == doctest::Approx(std::min(p.F_b_max, p.m_eq * d.max_decel - resistive_force(p, 10.0, 0.0))));
  }
  SUBCASE("forces stay inside the actuator limits") {
    const DriverModel d = ideal_driver(0.2);
    for (double target : {0.0, 5.0, 30.0, 60.0}) {
      const auto u = driver_step(d, adv, target, st, 0.05, p, 0.2);
      CHECK(u.F_t >= 0.0);
      CHECK(u.F_t <= p.traction_limit(st.v_h) + 1e-9);
      CHECK(u.F_b >= 0.0);
      CHECK(u.F_b <= p.F_b_max + 1e-9);
      CHECK(u.F_t * u.F_b == 0.0);
    }
  }
  CHECK_THROWS(driver_step(ideal_driver(0.2), adv, 10.0, st, 0.0, p, 0.0));
}

TEST_CASE("driver presets and validation") {
  const auto c = driver_for_style(DriverStyle::Cautious);
  const auto n = driver_for_style(DriverStyle::Normal);
  const auto s = driver_for_style(DriverStyle::Sporty);
  CHECK(c.limit_factor == doctest::Approx(0.9));
  CHECK(n.limit_factor == doctest::Approx(1.0));
  CHECK(s.limit_factor == doctest::Approx(1.1));
  CHECK(c.max_accel < s.max_accel);
  CHECK(parse_driver_style("sporty") == DriverStyle::Sporty);
  CHECK(to_string(DriverStyle::Cautious) == "cautious");
  CHECK_THROWS_AS(parse_driver_style("reckless"), ValidationError);

  DriverModel bad = n;
  bad.gain = -1.0;
  CHECK_THROWS_AS(validate(bad), ValidationError);
  bad = n;
  bad.reaction_delay_s = -0.1;
  CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("driver perception delay and noise") {
  SUBCASE("zero delay passes the target through") {
    DriverState d(ideal_driver(0.2), 0.2, 1);
    CHECK(d.perceive(7.0) == 7.0);
    CHECK(d.perceive(8.0) == 8.0);
  }
  SUBCASE("delay holds the target back by whole steps") {
    DriverModel m = ideal_driver(0.2);
    m.reaction_delay_s = 0.4;
    DriverState d(m, 0.2, 1);
    CHECK(d.perceive(1.0) == 1.0);
    CHECK(d.perceive(2.0) == 1.0);
    CHECK(d.perceive(3.0) == 1.0);
    CHECK(d.perceive(4.0) == 2.0);
  }
  SUBCASE("noise is reproducible per seed") {
    DriverModel m = ideal_driver(0.2);
    m.noise_std = 0.5;
    DriverState a(m, 0.2, 42), b(m, 0.2, 42), c(m, 0.2, 43);
    bool differs = false;
    for (int k = 0; k < 20; ++k) {
      const double x = a.perceive(10.0);
      CHECK(x == b.perceive(10.0));
      if (x != c.perceive(10.0)) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("empty scenario converges to the planned speed and holds it") {
  const Scenario sc = testutil::flat_road(2000, 15);
  const SimConfig cfg;
  const auto m = testutil::vehicle_for(sc);
  const AllowedProfile allowed(sc, cfg.planner.a_lat_max);
  const SpeedProfile dp = plan_dp_profile(sc, allowed, m.params, m.coeffs, cfg);
  const TripLog log = run_simulation(sc, RunMode::Assisted, ideal_driver(cfg.mpc.dT), m.params, m.coeffs, cfg, &dp, 0);
  REQUIRE(log.records.back().s >= 2000.0);
  int checked = 0;
  for (const auto& r : log.records) {
    if (r.t < 20.0 || r.s > 1500.0) continue;
    const double target = std::min(r.v_max, dp.at(r.s));
    CHECK(std::abs(r.v_h - target) < 0.1);
    CHECK(r.advisory->direction == Direction::Hold);
    ++checked;
  }
  CHECK(checked > 100);
  CHECK(log.degraded_steps == 0);
}

TEST_CASE("stop sign enforces a full stop and the dwell time") {
  Scenario sc = testutil::flat_road(600, 15);
  sc.stop_signs.push_back({300.0, 3.0, 0.0});
  for (RunMode mode : {RunMode::Assisted, RunMode::Baseline}) {
    CAPTURE(to_string(mode));
    const auto run = simulate(sc, mode, mode == RunMode::Assisted ? ideal_driver(0.2)
                                                                  : driver_for_style(DriverStyle::Normal));
    REQUIRE(run.log.stop_sign_dwell_s.size() == 1);
    CHECK(run.log.stop_sign_dwell_s[0] >= 3.0 - 1e-9);
    double first = -1.0, last = -1.0;
    for (const auto& r : run.log.records) {
      if (r.v_h == 0.0 && r.s <= 300.0 && r.s >= 299.0) {
        if (first < 0.0) first = r.t;
        last = r.t;
      }
    }
    CHECK(last - first >= 3.0 - 1e-9);
    CHECK(run.log.records.back().s >= 600.0);
  }
}

TEST_CASE("runs are deterministic for a fixed seed") {
  const Scenario sc = load("single_signal");
  DriverModel noisy = driver_for_style(DriverStyle::Normal);
  noisy.noise_std = 0.3;
  const auto a = simulate(sc, RunMode::Baseline, noisy, 7);
  const auto b = simulate(sc, RunMode::Baseline, noisy, 7);
  const auto c = simulate(sc, RunMode::Baseline, noisy, 8);
  CHECK(trip_csv(a.log) == trip_csv(b.log));
  CHECK(trip_csv(a.log) != trip_csv(c.log));
  const auto x = simulate(sc, RunMode::Assisted, ideal_driver(0.2), 3);
  const auto y = simulate(sc, RunMode::Assisted, ideal_driver(0.2), 3);
  CHECK(trip_csv(x.log) == trip_csv(y.log));
}

TEST_CASE("trip log is self-consistent") {
  const auto run = simulate(load("single_stop"), RunMode::Assisted, ideal_driver(0.2));
  const auto& rec = run.log.records;
  REQUIRE(rec.size() > 10);
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
    CHECK(rec[k + 1].t - rec[k].t == doctest::Approx(run.log.dt).epsilon(1e-9));
    s += 0.5 * run.log.dt * (rec[k].v_h + rec[k + 1].v_h);
    CHECK(rec[k].F_t * rec[k].F_b == 0.0);
  }
  CHECK(s == doctest::Approx(rec.back().s).epsilon(1e-9));
  CHECK(run.metrics.energy_kwh == doctest::Approx(energy_consumed(run.log, testutil::vehicle_for(load("single_stop")).coeffs)));

  const std::string csv = trip_csv(run.log);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == rec.size() + 1);
  CHECK(csv.rfind("t,s,v_h,F_t,F_b,P,", 0) == 0);
}

TEST_CASE("compute_metrics on crafted logs") {
  const auto& coeffs = vm().coeffs;
  SUBCASE("crossing a green signal without stopping") {
    const Scenario sc = with_signal(Phase::Green);
    const auto m = compute_metrics(crafted({record(0, 20, 15), record(2, 50, 15), record(4, 80, 15)}), sc, coeffs);
    CHECK(m.signals_encountered == 1);
    CHECK(m.signals_crossed_green == 1);
    CHECK(m.signals_stopped == 0);
    CHECK(m.red_crossings == 0);
  }
  SUBCASE("crossing on red counts as stopped and as a red crossing") {
    const Scenario sc = with_signal(Phase::Red);
    const auto m = compute_metrics(crafted({record(0, 20, 15), record(2, 50, 15), record(4, 80, 15)}), sc, coeffs);
    CHECK(m.signals_crossed_green == 0);
    CHECK(m.signals_stopped == 1);
    CHECK(m.red_crossings == 1);
  }
  SUBCASE("constant speed below the limit") {
    const Scenario sc = testutil::flat_road(200, 20);
    const auto m = compute_metrics(crafted({record(0, 0, 10), record(1, 10, 10), record(2, 20, 10), record(3, 30, 10)}),
                                   sc, coeffs);
    CHECK(m.speed_violation_time_s == 0.0);
    CHECK(m.speed_violation_count == 0);
    CHECK(m.mean_jerk == 0.0);
    CHECK(m.max_jerk == 0.0);
    CHECK(m.trip_time_s == 3.0);
    CHECK(m.stops_total == 0);
  }
  SUBCASE("violation episodes and stops") {
    const Scenario sc = testutil::flat_road(200, 10);
    const auto m = compute_metrics(crafted({record(0, 0, 12), record(1, 12, 12), record(2, 24, 9), record(3, 33, 0),
                                            record(4, 33, 12), record(5, 45, 9)}),
                                   sc, coeffs);
    CHECK(m.speed_violation_count == 2);
    CHECK(m.speed_violation_time_s == doctest::Approx(3.0));
    CHECK(m.stops_total == 1);
  }
  SUBCASE("violation tolerance") {
    const Scenario sc = testutil::flat_road(200, 10);
    const auto log = crafted({record(0, 0, 10.05), record(1, 10, 10.05)});
    CHECK(compute_metrics(log, sc, coeffs, 0.1).speed_violation_time_s == 0.0);
    CHECK(compute_metrics(log, sc, coeffs, 0.01).speed_violation_time_s == 1.0);
  }
}

TEST_CASE("compare_runs") {
  TripMetrics b, a;
  b.label = a.label = "x";
  SUBCASE("identical runs give zero deltas") {
    b.energy_kwh = a.energy_kwh = 2.0;
    b.speed_violation_time_s = a.speed_violation_time_s = 30.0;
    const auto r = compare_runs(b, a);
    CHECK(r.energy_saving_pct == 0.0);
    CHECK(r.violation_reduction_pct == 0.0);
    CHECK(r.green_crossing_delta == 0);
  }
  SUBCASE("energy 2.0 vs 1.8 kWh is a 10% saving") {
    b.energy_kwh = 2.0;
    a.energy_kwh = 1.8;
    CHECK(compare_runs(b, a).energy_saving_pct == doctest::Approx(10.0));
  }
  SUBCASE("green crossings 3 vs 5") {
    b.signals_crossed_green = 3;
    a.signals_crossed_green = 5;
    CHECK(compare_runs(b, a).green_crossing_delta == 2);
  }
  SUBCASE("violation reduction and trip time change") {
    b.speed_violation_time_s = 40.0;
    a.speed_violation_time_s = 10.0;
    b.trip_time_s = 100.0;
    a.trip_time_s = 110.0;
    const auto r = compare_runs(b, a);
    CHECK(r.violation_reduction_pct == doctest::Approx(75.0));
    CHECK(r.trip_time_change_pct == doctest::Approx(10.0));
  }
  SUBCASE("scenario mismatch") {
    a.label = "y";
    CHECK_THROWS_AS(compare_runs(b, a), ValidationError);
  }
}

TEST_CASE("batch runs match serial runs byte for byte") {
  const Scenario stop = load("single_stop");
  const Scenario follow = load("car_following");
  const SimConfig cfg;
  const auto m = testutil::vehicle_for(stop);
  const AllowedProfile a1(stop, cfg.planner.a_lat_max), a2(follow, cfg.planner.a_lat_max);
  const SpeedProfile p1 = plan_dp_profile(stop, a1, m.params, m.coeffs, cfg);
  const SpeedProfile p2 = plan_dp_profile(follow, a2, m.params, m.coeffs, cfg);
  DriverModel noisy = driver_for_style(DriverStyle::Sporty);
  noisy.noise_std = 0.2;
  std::vector<BatchJob> jobs;
  jobs.push_back({&stop, RunMode::Assisted, ideal_driver(0.2), &p1, 1});
  jobs.push_back({&stop, RunMode::Baseline, noisy, &p1, 2});
  jobs.push_back({&follow, RunMode::Assisted, ideal_driver(0.2), &p2, 3});
  jobs.push_back({&follow, RunMode::Baseline, noisy, &p2, 4});
  const auto par = run_batch(jobs, m.params, m.coeffs, cfg);
  const auto ser = run_batch_serial(jobs, m.params, m.coeffs, cfg);
  REQUIRE(par.size() == jobs.size());
  REQUIRE(ser.size() == jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    CAPTURE(i);
    CHECK(par[i].mode == jobs[i].mode);
    CHECK(trip_csv(par[i]) == trip_csv(ser[i]));
  }
}

TEST_CASE("unreachable route end times out") {
  SimConfig cfg;
  cfg.timeout_s = 5.0;
  CHECK_THROWS_AS(simulate(testutil::flat_road(1000, 15), RunMode::Assisted, ideal_driver(0.2), 0, cfg),
                  InfeasibleError);
}

TEST_CASE("assisted uses no more energy than the sporty baseline on every bundled scenario") {
  const SimConfig cfg;
  const std::vector<std::string> names{"flat_cruise", "single_stop",   "single_signal",
                                       "hilly_curve", "car_following", "urban_highway"};
  std::vector<Scenario> scenarios;
  for (const auto& n : names) scenarios.push_back(load(n));
  // One vehicle per route, as the CLI prepares it.
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    CAPTURE(names[i]);
    const auto m = testutil::vehicle_for(sc);
    const AllowedProfile allowed(sc, cfg.planner.a_lat_max);
    const SpeedProfile dp = plan_dp_profile(sc, allowed, m.params, m.coeffs, cfg);
    std::vector<BatchJob> jobs{{&sc, RunMode::Baseline, driver_for_style(DriverStyle::Sporty), &dp, 0},
                               {&sc, RunMode::Assisted, ideal_driver(cfg.mpc.dT), &dp, 0}};
    const auto logs = run_batch(jobs, m.params, m.coeffs, cfg);
    const double e_base = compute_metrics(logs[0], sc, m.coeffs).energy_kwh;
    const auto assisted = compute_metrics(logs[1], sc, m.coeffs);
    CHECK(assisted.energy_kwh <= e_base);
    CHECK(assisted.red_crossings == 0);
    CHECK(assisted.speed_violation_time_s == 0.0);
  }
}
