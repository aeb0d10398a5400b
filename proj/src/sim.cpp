#include "pedas/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pedas/error.hpp"
#include "pedas/log.hpp"

namespace pedas {

namespace {

constexpr double kStandstill = 1e-9;
constexpr double kStoppedSpeed = 0.5;     // below this a vehicle counts as stopped
constexpr double kStopWindow = 20.0;      // m before a signal checked for stops

bool is_stopped_at_rest(double v) { return v <= kStandstill; }

const std::string& segment_tag(const Scenario& sc, double s) {
  static const std::string none;
  const std::string* tag = &none;
  for (const auto& seg : sc.route.limits)
    if (s >= seg.start_m && s <= seg.end_m) tag = &seg.tag;
  return *tag;
}

SpeedLimits static_limits(const Scenario& sc, double s) {
  return speed_limits_at(sc, std::clamp(s, 0.0, sc.route.length_m));
}

// Human-like limit follower used for the baseline runs.
double baseline_target(const Scenario& sc, const AllowedProfile& allowed, const DriverModel& d, const HostState& st,
                       const std::optional<SensedLead>& lead, const std::vector<bool>& served, const MpcConfig& mpc) {
  const double L = sc.route.length_m;
  const double s = std::clamp(st.s, 0.0, L);
  const double comfort = 0.5 * d.max_decel;
  auto wanted = [&](double x) {
    const double cap = curvature_speed_cap(sc.route.curvature_at(x), allowed.a_lat_max());
    return std::min(static_limits(sc, x).v_max * d.limit_factor, cap);
  };
  double target = wanted(s);
  for (double x = s + 5.0; x <= std::min(L, s + 150.0); x += 5.0)
    target = std::min(target, std::sqrt(std::pow(wanted(x), 2) + 2.0 * comfort * (x - s)));

  if (const auto f = next_its_feature(sc, s, served)) {
    const double gap = 0.5;
    const double dist = f->d_its;
    bool stop = f->kind == FeatureKind::StopSign;
    if (!stop) {
      const auto ph = signal_phase_at(sc.signals[f->index], st.t);
      const double v = st.v_h;
      const bool can_stop = dist >= v * v / (2.0 * d.max_decel) + v / d.gain;
      if (ph.phase == Phase::Red) stop = can_stop || v < 1.0;
      else stop = can_stop && dist / std::max(v, 1.0) > ph.remaining_s;
    }
    // Aim short by the distance covered during the driver's own lag.
    const double lead_in = st.v_h / d.gain;
    if (stop) {
      // Creep up to the aim point, then stop.
      const double creep = 0.4;
      const double left = std::max(dist - gap - lead_in, 0.0);
      target = dist - gap <= 0.25 ? 0.0 : std::min(target, std::max(creep, std::sqrt(2.0 * comfort * left)));
    }
  }
  if (lead) {
    const double desired = mpc.d_min + d.headway_s * st.v_h;
    target = std::min(target, std::max(0.0, lead->v_p + 0.5 * (lead->d_rel - desired)));
  }
  return std::max(0.0, target);
}

std::string num(double x, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  return buf;
}

std::string opt_num(const std::optional<double>& x, int prec = 6) { return x ? num(*x, prec) : std::string(); }

}  // namespace

std::string_view to_string(DriverStyle s) {
  switch (s) {
    case DriverStyle::Cautious: return "cautious";
    case DriverStyle::Normal: return "normal";
    case DriverStyle::Sporty: return "sporty";
  }
  return "normal";
}

DriverStyle parse_driver_style(std::string_view name) {
  if (name == "cautious") return DriverStyle::Cautious;
  if (name == "normal") return DriverStyle::Normal;
  if (name == "sporty") return DriverStyle::Sporty;
  throw ValidationError("driver: unknown style '" + std::string(name) + "'");
}

std::string_view to_string(RunMode m) { return m == RunMode::Baseline ? "baseline" : "assisted"; }

void validate(const DriverModel& d) {
  if (!(d.reaction_delay_s >= 0.0)) throw ValidationError("driver.reaction_delay_s: must be >= 0");
  if (!(d.gain > 0.0)) throw ValidationError("driver.gain: must be > 0");
  if (!(d.noise_std >= 0.0)) throw ValidationError("driver.noise_std: must be >= 0");
  if (!(d.max_accel > 0.0) || !(d.max_decel > 0.0)) throw ValidationError("driver: accel envelope must be positive");
  if (!(d.limit_factor > 0.0)) throw ValidationError("driver.limit_factor: must be > 0");
  if (!(d.headway_s > 0.0)) throw ValidationError("driver.headway_s: must be > 0");
}

DriverModel driver_for_style(DriverStyle style) {
  DriverModel d;
  d.style = style;
  d.gain = 1.0;
  switch (style) {
    case DriverStyle::Cautious:
      d.limit_factor = 0.9;
      d.max_accel = 1.0;
      d.max_decel = 2.5;
      d.headway_s = 2.0;
      break;
    case DriverStyle::Normal:
      d.limit_factor = 1.0;
      d.max_accel = 1.5;
      d.max_decel = 3.5;
      d.headway_s = 1.5;
      break;
    case DriverStyle::Sporty:
      d.limit_factor = 1.1;
      d.max_accel = 2.5;
      d.max_decel = 4.5;
      d.headway_s = 1.0;
      d.gain = 1.5;
      break;
  }
  return d;
}

DriverModel ideal_driver(double dt) {
  DriverModel d;
  d.gain = 1.0 / dt;
  d.max_accel = 10.0;
  d.max_decel = 10.0;
  return d;
}

DriverState::DriverState(const DriverModel& d, double dt, std::uint64_t seed)
    : delay_steps_(static_cast<std::size_t>(std::lround(d.reaction_delay_s / dt))),
      noise_std_(d.noise_std),
      rng_(seed),
      noise_(0.0, 1.0) {}

double DriverState::perceive(double target) {
  line_.push_back(target);
  while (line_.size() > delay_steps_ + 1) line_.pop_front();
  double out = line_.front();
  if (noise_std_ > 0.0) out += noise_std_ * noise_(rng_);
  return std::max(0.0, out);
}

DriverForces driver_step(const DriverModel& d, const Advisory& adv, double target, const HostState& st, double theta,
                         const VehicleParams& p, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("driver_step: dt must be > 0");
  if (adv.direction == Direction::Hold && d.band_coast) return {};
  const double F_res = resistive_force(p, st.v_h, theta);
  if (target <= 0.0 && is_stopped_at_rest(st.v_h)) return {0.0, std::min(p.F_b_max, std::max(0.0, -F_res))};
  double a = std::clamp(d.gain * (target - st.v_h), -d.max_decel, d.max_accel);
  // Stopping from a crawl takes the remaining speed off in one step.
  if (target <= 0.0 && st.v_h <= d.max_decel * dt) a = -st.v_h / dt;
  const double F = p.m_eq * a + F_res;
  if (F >= 0.0) return {std::min(F, std::max(0.0, p.traction_limit(st.v_h))), 0.0};
  return {0.0, std::min(-F, p.F_b_max)};
}

// ---------------------------------------------------------------------------

void write_trip_csv(const TripLog& log, std::ostream& os) {
  os << "t,s,v_h,F_t,F_b,P,d_rel,d_s,d_its,v_ref,target_speed,direction,magnitude,icons,tl_countdown,warning_tone,"
        "v_min,v_max,violation,ctrl_mode,ref_source,correction,degraded,holding\n";
  for (const auto& r : log.records) {
    os << num(r.t, 3) << ',' << num(r.s, 4) << ',' << num(r.v_h, 6) << ',' << num(r.F_t, 3) << ','
       << num(r.F_b, 3) << ',' << num(r.P, 3) << ',' << opt_num(r.d_rel, 4) << ',' << opt_num(r.d_s, 4) << ','
       << opt_num(r.d_its, 4) << ',' << opt_num(r.v_ref, 6) << ',';
    if (r.advisory) {
      const auto& a = *r.advisory;
      os << num(a.target_speed, 6) << ',' << to_string(a.direction) << ',' << num(a.magnitude, 6) << ','
         << icons_to_string(a.icons) << ',' << opt_num(a.tl_countdown, 3) << ',' << (a.warning_tone ? 1 : 0);
    } else {
      os << ",,,,,";
    }
    os << ',' << num(r.v_min, 4) << ',' << num(r.v_max, 4) << ',' << (r.violation ? 1 : 0) << ','
       << to_string(r.ctrl_mode) << ',' << to_string(r.ref_source) << ',' << to_string(r.correction) << ','
       << (r.degraded ? 1 : 0) << ',' << (r.holding ? 1 : 0) << '\n';
  }
}

std::string trip_csv(const TripLog& log) {
  std::ostringstream os;
  write_trip_csv(log, os);
  return os.str();
}

SpeedProfile plan_dp_profile(const Scenario& sc, const AllowedProfile& allowed, const VehicleParams& params,
                             const PowerMapCoeffs& coeffs, const SimConfig& cfg) {
  DpConfig dp = cfg.dp;
  if (dp.speed_grid.empty()) {
    double v_top = 0.0;
    for (const auto& seg : sc.route.limits) v_top = std::max(v_top, seg.v_max);
    dp.speed_grid = uniform_speed_grid(v_top, cfg.dp_grid_step);
  }
  return dp_speed_profile(sc, allowed, params, coeffs, dp);
}

TripLog run_simulation(const Scenario& sc, RunMode mode, const DriverModel& driver, const VehicleParams& params,
                       const PowerMapCoeffs& coeffs, const SimConfig& cfg, const SpeedProfile* dp_profile,
                       std::uint64_t seed) {
  validate(driver);
  validate(cfg.mpc);
  if (mode == RunMode::Assisted && dp_profile == nullptr)
    throw std::invalid_argument("run_simulation: assisted mode needs a DP profile");

  const AllowedProfile allowed(sc, cfg.planner.a_lat_max);
  const double dt = cfg.mpc.dT;
  const double L = sc.route.length_m;
  const double timeout = cfg.timeout_s > 0.0 ? cfg.timeout_s : 300.0 + L / 2.0;

  TripLog log;
  log.label = sc.label;
  log.mode = mode;
  log.seed = seed;
  log.dt = dt;
  log.stop_sign_dwell_s.assign(sc.stop_signs.size(), 0.0);
  log.records.reserve(static_cast<std::size_t>(L / 5.0 / dt) + 16);

  DriverState perception(driver, dt, seed);
  std::optional<Controller> controller;
  if (mode == RunMode::Assisted) controller.emplace(params, coeffs, cfg.mpc, cfg.planner);

  std::vector<bool> served(sc.stop_signs.size(), false);
  std::vector<double> rest_since(sc.stop_signs.size(), -1.0);
  HostState st;
  double v_prev = 0.0;
  std::size_t steps = 0;

  auto base_record = [&](const HostState& x) {
    TripRecord r;
    r.t = x.t;
    r.s = x.s;
    r.v_h = x.v_h;
    const auto lim = static_limits(sc, x.s);
    r.v_min = lim.v_min;
    r.v_max = lim.v_max;
    r.violation = x.v_h > lim.v_max + cfg.violation_tol;
    return r;
  };

  while (st.s < L) {
    // Sense.
    std::optional<SensedLead> lead;
    st.d_rel.reset();
    if (sc.preceding) {
      if (const auto p = sc.preceding->at(st.t)) {
        const double gap = p->position_m - st.s;
        if (gap > 0.0 && gap <= cfg.mpc.d_switch) {
          lead = SensedLead{gap, p->velocity_mps};
          st.d_rel = gap;
        }
      }
    }
    for (std::size_t i = 0; i < sc.stop_signs.size(); ++i) {
      if (served[i]) continue;
      const auto& sign = sc.stop_signs[i];
      const double d = sign.position_m - st.s;
      if (d >= 0.0 && d <= sign.stop_line_offset_m + 1.0 && is_stopped_at_rest(st.v_h)) {
        if (rest_since[i] < 0.0) rest_since[i] = st.t;
        const double dwell = st.t - rest_since[i];
        log.stop_sign_dwell_s[i] = std::max(log.stop_sign_dwell_s[i], dwell);
        if (dwell >= sign.dwell_s - 1e-9) served[i] = true;
      } else {
        rest_since[i] = -1.0;
      }
    }
    const auto feature = next_its_feature(sc, st.s, served);
    st.d_its.reset();
    if (feature) st.d_its = feature->d_its;
    const double theta = sc.route.grade_at(st.s);

    TripRecord rec = base_record(st);
    rec.d_rel = st.d_rel;
    rec.d_its = st.d_its;
    Advisory adv;
    double target = 0.0;

    if (mode == RunMode::Assisted) {
      const auto dec = reference_speed(sc, allowed, *dp_profile, st, served, cfg.planner);
      const ControlStep cs = controller->step(sc, allowed, *dp_profile, st, v_prev, dec, lead);
      target = cs.advisory_speed;
      AdvisoryContext actx;
      actx.mode = cs.mode;
      actx.source = dec.source;
      actx.feature = dec.feature;
      if (dec.feature && dec.feature->kind == FeatureKind::Signal)
        actx.signal_phase = signal_phase_at(sc.signals[dec.feature->index], st.t);
      actx.curve_ahead = curve_ahead(sc, allowed, st.s, st.v_h, cfg.mpc.curve_lookahead_m);
      if (lead && cs.mode == ControllerMode::CarFollowing) {
        actx.d_rel = lead->d_rel;
        actx.d_s = cfg.mpc.d_min + cfg.mpc.h_m * st.v_h;
        rec.d_s = actx.d_s;
      }
      adv = advisory_from_solution(target, st, actx, cfg.mpc);
      rec.advisory = adv;
      rec.v_ref = dec.v_ref;
      rec.ctrl_mode = cs.mode;
      rec.ref_source = dec.source;
      rec.correction = cs.correction;
      rec.degraded = cs.degraded;
      rec.holding = cs.holding;
      if (cs.degraded) ++log.degraded_steps;
    } else {
      target = baseline_target(sc, allowed, driver, st, lead, served, cfg.mpc);
      adv.target_speed = target;
      adv.direction = target > st.v_h ? Direction::Up : Direction::Down;
      if (lead) rec.d_s = cfg.mpc.d_min + cfg.mpc.h_m * st.v_h;
    }

    const double perceived = perception.perceive(target);
    const DriverForces u = driver_step(driver, adv, perceived, st, theta, params, dt);
    rec.F_t = u.F_t;
    rec.F_b = u.F_b;
    rec.P = power(coeffs, st.v_h, u.F_t);
    log.records.push_back(rec);

    const HostState next = step_dynamics(st, u.F_t, u.F_b, theta, params, dt);
    for (const auto& sig : sc.signals) {
      if (st.s < sig.position_m && next.s >= sig.position_m) {
        const double tc = st.t + dt * (sig.position_m - st.s) / (next.s - st.s);
        if (signal_phase_at(sig, tc).phase == Phase::Red) ++log.red_crossings;
      }
    }
    v_prev = st.v_h;
    st = next;
    // Integrate time from the step count so t stays exactly uniform.
    st.t = static_cast<double>(++steps) * dt;
    if (st.t > timeout) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "simulation timed out at t=%.1f s, s=%.1f of %.1f m (v=%.2f m/s)", st.t, st.s,
                    L, st.v_h);
      throw InfeasibleError(buf);
    }
  }
  TripRecord last = base_record(st);
  log.records.push_back(last);
  return log;
}

// ---------------------------------------------------------------------------

double energy_consumed(const TripLog& log, const PowerMapCoeffs& coeffs) {
  std::vector<PowerSample> samples;
  samples.reserve(log.records.size());
  for (const auto& r : log.records) samples.push_back({r.v_h, r.F_t});
  return energy_consumed(samples, log.dt, coeffs);
}

TripMetrics compute_metrics(const TripLog& log, const Scenario& sc, const PowerMapCoeffs& coeffs,
                            double violation_tol) {
  TripMetrics m;
  m.label = log.label;
  const auto& rec = log.records;
  if (rec.empty()) return m;
  const double dt = log.dt;
  m.energy_kwh = energy_consumed(log, coeffs);
  m.trip_time_s = rec.back().t - rec.front().t;

  bool in_violation = false;
  bool moved = false;
  bool was_stopped = true;
  for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
    const auto& r = rec[k];
    const bool viol = r.v_h > static_limits(sc, r.s).v_max + violation_tol;
    if (viol) {
      m.speed_violation_time_s += dt;
      if (!in_violation) ++m.speed_violation_count;
    }
    in_violation = viol;

    const std::string& tag = segment_tag(sc, r.s);
    if (!tag.empty()) {
      auto& seg = m.segments[tag];
      seg.distance_m += rec[k + 1].s - r.s;
      seg.time_s += dt;
      seg.energy_kwh += 0.5 * dt * (power(coeffs, r.v_h, r.F_t) + power(coeffs, rec[k + 1].v_h, rec[k + 1].F_t)) / 3.6e6;
      if (viol) seg.violation_time_s += dt;
    }
  }
  for (const auto& r : rec) {
    const bool stopped = r.v_h < kStoppedSpeed;
    if (!stopped) moved = true;
    if (stopped && !was_stopped && moved) ++m.stops_total;
    was_stopped = stopped;
  }

  for (const auto& sig : sc.signals) {
    const double pos = sig.position_m;
    for (std::size_t k = 0; k + 1 < rec.size(); ++k) {
      if (!(rec[k].s < pos && rec[k + 1].s >= pos)) continue;
      ++m.signals_encountered;
      const double tc = rec[k].t + (rec[k + 1].t - rec[k].t) * (pos - rec[k].s) / (rec[k + 1].s - rec[k].s);
      const bool green = signal_phase_at(sig, tc).phase == Phase::Green;
      if (!green) ++m.red_crossings;
      bool stopped_before = false;
      for (const auto& r : rec)
        if (r.s >= pos - kStopWindow && r.s <= pos && r.v_h < kStoppedSpeed) stopped_before = true;
      if (green && !stopped_before) ++m.signals_crossed_green;
      break;
    }
  }
  m.signals_stopped = m.signals_encountered - m.signals_crossed_green;

  if (rec.size() >= 3) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k + 2 < rec.size(); ++k) {
      const double a0 = (rec[k + 1].v_h - rec[k].v_h) / dt;
      const double a1 = (rec[k + 2].v_h - rec[k + 1].v_h) / dt;
      const double j = std::abs(a1 - a0) / dt;
      sum += j;
      m.max_jerk = std::max(m.max_jerk, j);
      ++n;
    }
    m.mean_jerk = sum / static_cast<double>(n);
  }
  return m;
}

ComparisonReport compare_runs(const TripMetrics& b, const TripMetrics& a) {
  if (b.label != a.label)
    throw ValidationError("compare: scenario mismatch ('" + b.label + "' vs '" + a.label + "')");
  auto pct = [](double base, double other) { return base > 0.0 ? (base - other) / base * 100.0 : 0.0; };
  ComparisonReport r;
  r.label = b.label;
  r.baseline = b;
  r.assisted = a;
  r.energy_saving_pct = pct(b.energy_kwh, a.energy_kwh);
  r.violation_reduction_pct = pct(b.speed_violation_time_s, a.speed_violation_time_s);
  r.green_crossing_delta = a.signals_crossed_green - b.signals_crossed_green;
  r.trip_time_change_pct = b.trip_time_s > 0.0 ? (a.trip_time_s - b.trip_time_s) / b.trip_time_s * 100.0 : 0.0;
  for (const auto& [tag, sb] : b.segments) {
    const auto it = a.segments.find(tag);
    if (it == a.segments.end()) continue;
    r.segments[tag] = {pct(sb.energy_kwh, it->second.energy_kwh),
                       pct(sb.violation_time_s, it->second.violation_time_s)};
  }
  return r;
}

namespace {

nlohmann::ordered_json to_json(const TripMetrics& m) {
  nlohmann::ordered_json j;
  j["label"] = m.label;
  j["energy_kwh"] = m.energy_kwh;
  j["trip_time_s"] = m.trip_time_s;
  j["speed_violation_time_s"] = m.speed_violation_time_s;
  j["speed_violation_count"] = m.speed_violation_count;
  j["signals_encountered"] = m.signals_encountered;
  j["signals_crossed_green"] = m.signals_crossed_green;
  j["signals_stopped"] = m.signals_stopped;
  j["red_crossings"] = m.red_crossings;
  j["stops_total"] = m.stops_total;
  j["mean_jerk"] = m.mean_jerk;
  j["max_jerk"] = m.max_jerk;
  auto& segs = j["segments"] = nlohmann::ordered_json::object();
  for (const auto& [tag, s] : m.segments)
    segs[tag] = {{"distance_m", s.distance_m},
                 {"energy_kwh", s.energy_kwh},
                 {"time_s", s.time_s},
                 {"violation_time_s", s.violation_time_s}};
  return j;
}

}  // namespace

std::string metrics_json(const TripMetrics& m) { return to_json(m).dump(2) + "\n"; }

std::string report_json(const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["label"] = r.label;
  j["energy_saving_pct"] = r.energy_saving_pct;
  j["violation_reduction_pct"] = r.violation_reduction_pct;
  j["green_crossing_delta"] = r.green_crossing_delta;
  j["trip_time_change_pct"] = r.trip_time_change_pct;
  auto& segs = j["segments"] = nlohmann::ordered_json::object();
  for (const auto& [tag, s] : r.segments)
    segs[tag] = {{"energy_saving_pct", s.energy_saving_pct}, {"violation_reduction_pct", s.violation_reduction_pct}};
  j["baseline"] = to_json(r.baseline);
  j["assisted"] = to_json(r.assisted);
  return j.dump(2) + "\n";
}

std::string report_table(const ComparisonReport& r) {
  std::string out;
  char buf[200];
  auto row = [&](const char* name, const std::string& b, const std::string& a, const std::string& d) {
    std::snprintf(buf, sizeof buf, "%-26s %14s %14s %12s\n", name, b.c_str(), a.c_str(), d.c_str());
    out += buf;
  };
  // Percentages are printed without a negative zero.
  auto pct = [](double x) { return num(std::abs(x) < 0.005 ? 0.0 : x, 2) + "%"; };
  out += "scenario: " + r.label + "\n";
  row("metric", "baseline", "assisted", "change");
  row("energy [kWh]", num(r.baseline.energy_kwh, 4), num(r.assisted.energy_kwh, 4),
      pct(-r.energy_saving_pct));
  row("trip time [s]", num(r.baseline.trip_time_s, 1), num(r.assisted.trip_time_s, 1),
      pct(r.trip_time_change_pct));
  row("violation time [s]", num(r.baseline.speed_violation_time_s, 1), num(r.assisted.speed_violation_time_s, 1),
      pct(-r.violation_reduction_pct));
  row("violations", std::to_string(r.baseline.speed_violation_count),
      std::to_string(r.assisted.speed_violation_count), "");
  row("signals crossed green", std::to_string(r.baseline.signals_crossed_green),
      std::to_string(r.assisted.signals_crossed_green), std::to_string(r.green_crossing_delta));
  row("signals stopped", std::to_string(r.baseline.signals_stopped), std::to_string(r.assisted.signals_stopped), "");
  row("stops", std::to_string(r.baseline.stops_total), std::to_string(r.assisted.stops_total), "");
  row("mean jerk [m/s^3]", num(r.baseline.mean_jerk, 3), num(r.assisted.mean_jerk, 3), "");
  for (const auto& [tag, s] : r.segments) {
    const std::string name = "[" + tag + "] energy saving";
    row(name.c_str(), "", "", pct(s.energy_saving_pct));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

template <bool Parallel>
std::vector<TripLog> batch(const std::vector<BatchJob>& jobs, const VehicleParams& params,
                           const PowerMapCoeffs& coeffs, const SimConfig& cfg) {
  const auto n = static_cast<long>(jobs.size());
  std::vector<TripLog> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) if (Parallel)
  for (long i = 0; i < n; ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] =
          run_simulation(*job.scenario, job.mode, job.driver, params, coeffs, cfg, job.dp_profile, job.seed);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace

std::vector<TripLog> run_batch(const std::vector<BatchJob>& jobs, const VehicleParams& params,
                               const PowerMapCoeffs& coeffs, const SimConfig& cfg) {
  return batch<true>(jobs, params, coeffs, cfg);
}

std::vector<TripLog> run_batch_serial(const std::vector<BatchJob>& jobs, const VehicleParams& params,
                                      const PowerMapCoeffs& coeffs, const SimConfig& cfg) {
  return batch<false>(jobs, params, coeffs, cfg);
}

}  // namespace pedas
