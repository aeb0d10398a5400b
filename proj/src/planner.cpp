#include "pedas/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pedas/error.hpp"

namespace pedas {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGridTol = 1e-9;
}  // namespace

// ---------------------------------------------------------------------------
// Allowed speeds

AllowedProfile::AllowedProfile(const Scenario& scenario, double a_lat_max)
    : scenario_(&scenario), a_lat_max_(a_lat_max) {}

SpeedLimits AllowedProfile::at(double s) const {
  s = std::clamp(s, 0.0, scenario_->route.length_m);
  SpeedLimits lim = speed_limits_at(*scenario_, s);
  lim.v_max = std::min(lim.v_max, curvature_speed_cap(scenario_->route.curvature_at(s), a_lat_max_));
  return lim;
}

AllowedProfile allowed_speed_profile(const Scenario& sc, double a_lat_max) {
  AllowedProfile profile(sc, a_lat_max);
  // kappa is piecewise linear and limits piecewise constant, so the envelope
  // is extremal at curvature samples and segment ends.
  std::vector<double> probes;
  for (const auto& c : sc.route.curvature) probes.push_back(c.position_m);
  for (const auto& seg : sc.route.limits) {
    probes.push_back(seg.start_m);
    probes.push_back(std::max(seg.start_m, seg.end_m - 1e-9));
  }
  for (double s : probes) {
    const auto lim = profile.at(s);
    if (lim.v_min > lim.v_max + kGridTol)
      throw ValidationError("allowed speed profile: v_min " + std::to_string(lim.v_min) + " exceeds curvature cap " +
                            std::to_string(lim.v_max) + " at s=" + std::to_string(s));
  }
  return profile;
}

// ---------------------------------------------------------------------------
// Green wave

std::optional<GreenWaveBand> green_wave_band(double d_tl, std::span<const PhaseWindow> windows, double v_min,
                                             double v_max) {
  for (const auto& w : windows) {
    const double lo = w.r > 0.0 ? d_tl / w.r : kInf;
    const double hi = w.g > 0.0 ? d_tl / w.g : kInf;
    const double a = std::max(lo, v_min);
    const double b = std::min(hi, v_max);
    if (a <= b) return GreenWaveBand{a, b};
  }
  return std::nullopt;
}

std::vector<PhaseWindow> signal_windows(const TrafficSignal& sig, double t, double horizon_s, double entry_margin_s,
                                        double exit_margin_s) {
  const double period = sig.period();
  double tau = std::fmod(t + sig.cycle_offset_s, period);
  if (tau < 0.0) tau += period;
  std::size_t idx = 0;
  double into = tau;
  while (idx < sig.cycle.size() && into >= sig.cycle[idx].duration_s) {
    into -= sig.cycle[idx].duration_s;
    ++idx;
  }
  if (idx == sig.cycle.size()) {
    idx = 0;
    into = 0.0;
  }

  std::vector<PhaseWindow> out;
  double start = -into;  // relative start of the current phase
  bool in_green = false;
  double green_start = 0.0;
  auto close_green = [&](double red_start) {
    const double g = green_start <= 0.0 ? 0.0 : green_start + entry_margin_s;
    const double r = red_start - exit_margin_s;
    if (r > g && r > 0.0) out.push_back({g, r});
  };
  // Walk until a phase starts past the horizon.
  for (;;) {
    const auto& ph = sig.cycle[idx];
    if (ph.phase == Phase::Green) {
      if (!in_green) {
        in_green = true;
        green_start = std::max(start, 0.0);
      }
    } else if (in_green) {
      close_green(start);
      in_green = false;
    }
    start += ph.duration_s;
    idx = (idx + 1) % sig.cycle.size();
    if (start > horizon_s) {
      if (in_green) close_green(start);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// DP speed profile

void validate(const DpConfig& cfg) {
  if (!(cfg.ds > 0.0)) throw ValidationError("dp.ds: must be > 0");
  if (cfg.speed_grid.empty()) throw ValidationError("dp.speed_grid: empty");
  for (std::size_t i = 0; i < cfg.speed_grid.size(); ++i) {
    if (cfg.speed_grid[i] < 0.0) throw ValidationError("dp.speed_grid: values must be >= 0");
    if (i > 0 && !(cfg.speed_grid[i] > cfg.speed_grid[i - 1]))
      throw ValidationError("dp.speed_grid: must be strictly ascending");
  }
  if (cfg.w_time < 0.0 || cfg.w_energy < 0.0 || (cfg.w_time == 0.0 && cfg.w_energy == 0.0))
    throw ValidationError("dp weights: must be >= 0 and not both 0");
  if (!(cfg.max_accel > 0.0) || !(cfg.max_decel > 0.0)) throw ValidationError("dp accel limits: must be > 0");
}

std::vector<double> uniform_speed_grid(double v_top, double step) {
  std::vector<double> grid;
  const auto n = static_cast<long>(std::floor(v_top / step + 1e-9));
  for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) * step);
  return grid;
}

double SpeedProfile::at(double s) const {
  if (positions.empty()) return 0.0;
  if (s <= positions.front()) return speeds.front();
  if (s >= positions.back()) return speeds.back();
  auto hi = std::upper_bound(positions.begin(), positions.end(), s);
  const auto i = static_cast<std::size_t>(hi - positions.begin());
  const double w = (s - positions[i - 1]) / (positions[i] - positions[i - 1]);
  return speeds[i - 1] + w * (speeds[i] - speeds[i - 1]);
}

DpStages dp_stages(const AllowedProfile& allowed, const DpConfig& cfg) {
  validate(cfg);
  DpStages st;
  const double length = allowed.length();
  const auto whole = static_cast<long>(std::floor(length / cfg.ds + 1e-9));
  for (long j = 0; j <= whole; ++j) st.positions.push_back(static_cast<double>(j) * cfg.ds);
  if (length - st.positions.back() > 1e-9) st.positions.push_back(length);
  for (double s : st.positions) {
    const auto lim = allowed.at(s);
    std::vector<int> adm;
    for (std::size_t i = 0; i < cfg.speed_grid.size(); ++i) {
      const double v = cfg.speed_grid[i];
      if (v >= lim.v_min - kGridTol && v <= lim.v_max + kGridTol) adm.push_back(static_cast<int>(i));
    }
    if (adm.empty())
      throw InfeasibleError("dp_speed_profile: no admissible grid speed at s=" + std::to_string(s));
    st.admissible.push_back(std::move(adm));
  }
  return st;
}

StageCost dp_stage_cost(const Scenario& sc, const VehicleParams& p, const PowerMapCoeffs& coeffs,
                        const DpConfig& cfg, double s0, double s1, double v_from, double v_to) {
  StageCost out;
  const double ds = s1 - s0;
  const double v_avg = 0.5 * (v_from + v_to);
  if (!(v_avg > 0.0) || !(ds > 0.0)) {
    out.cost = kInf;
    return out;
  }
  const double accel = (v_to * v_to - v_from * v_from) / (2.0 * ds);
  if (accel > cfg.max_accel + kGridTol || accel < -cfg.max_decel - kGridTol) {
    out.cost = kInf;
    return out;
  }
  const double dt = ds / v_avg;
  const double theta = sc.route.grade_at(0.5 * (s0 + s1));
  const double force = p.m_eq * accel + resistive_force(p, v_avg, theta);
  out.time_s = dt;
  if (force >= 0.0) {
    if (force > p.traction_limit(v_avg)) {
      out.cost = kInf;
      return out;
    }
    out.energy_wh = power(coeffs, v_avg, force) * dt / 3600.0;
    out.cost = cfg.w_energy * out.energy_wh + cfg.w_time * dt;
  } else {
    out.cost = cfg.w_time * dt;
  }
  return out;
}

namespace {

template <bool Parallel>
SpeedProfile run_dp(const Scenario& sc, const AllowedProfile& allowed, const VehicleParams& p,
                    const PowerMapCoeffs& coeffs, const DpConfig& cfg) {
  const DpStages st = dp_stages(allowed, cfg);
  const auto& grid = cfg.speed_grid;
  const std::size_t J = st.positions.size();

  // cost_to_go[j][a]: a indexes st.admissible[j]; policy[j][a] indexes st.admissible[j + 1].
  std::vector<std::vector<double>> cost_to_go(J);
  std::vector<std::vector<int>> policy(J);
  cost_to_go[J - 1].assign(st.admissible[J - 1].size(), 0.0);
  policy[J - 1].assign(st.admissible[J - 1].size(), -1);

  for (std::size_t jj = J - 1; jj-- > 0;) {
    const auto& from = st.admissible[jj];
    const auto& to = st.admissible[jj + 1];
    const auto& next_cost = cost_to_go[jj + 1];
    auto& here = cost_to_go[jj];
    auto& pol = policy[jj];
    here.assign(from.size(), kInf);
    pol.assign(from.size(), -1);
    const double s0 = st.positions[jj];
    const double s1 = st.positions[jj + 1];
    const long rows = static_cast<long>(from.size());

#pragma omp parallel for schedule(static) if (Parallel)
    for (long a = 0; a < rows; ++a) {
      const double v0 = grid[static_cast<std::size_t>(from[static_cast<std::size_t>(a)])];
      double best = kInf;
      int arg = -1;
      for (std::size_t b = 0; b < to.size(); ++b) {
        if (!std::isfinite(next_cost[b])) continue;
        const double c = dp_stage_cost(sc, p, coeffs, cfg, s0, s1, v0, grid[static_cast<std::size_t>(to[b])]).cost;
        const double total = c + next_cost[b];
        if (total < best) {
          best = total;
          arg = static_cast<int>(b);
        }
      }
      here[static_cast<std::size_t>(a)] = best;
      pol[static_cast<std::size_t>(a)] = arg;
    }
  }

  int start = -1;
  double best = kInf;
  for (std::size_t a = 0; a < cost_to_go[0].size(); ++a) {
    if (cost_to_go[0][a] < best) {
      best = cost_to_go[0][a];
      start = static_cast<int>(a);
    }
  }
  if (start < 0) throw InfeasibleError("dp_speed_profile: no feasible speed path");

  SpeedProfile prof;
  prof.cost = best;
  prof.positions = st.positions;
  prof.speeds.resize(J);
  int a = start;
  for (std::size_t j = 0; j < J; ++j) {
    prof.speeds[j] = grid[static_cast<std::size_t>(st.admissible[j][static_cast<std::size_t>(a)])];
    if (j + 1 < J) {
      const int b = policy[j][static_cast<std::size_t>(a)];
      const double v1 = grid[static_cast<std::size_t>(st.admissible[j + 1][static_cast<std::size_t>(b)])];
      const auto sc_cost = dp_stage_cost(sc, p, coeffs, cfg, st.positions[j], st.positions[j + 1], prof.speeds[j], v1);
      prof.energy_wh += sc_cost.energy_wh;
      prof.time_s += sc_cost.time_s;
      a = b;
    }
  }
  return prof;
}

}  // namespace

SpeedProfile dp_speed_profile(const Scenario& sc, const AllowedProfile& allowed, const VehicleParams& p,
                              const PowerMapCoeffs& coeffs, const DpConfig& cfg) {
  return run_dp<true>(sc, allowed, p, coeffs, cfg);
}

SpeedProfile dp_speed_profile_serial(const Scenario& sc, const AllowedProfile& allowed, const VehicleParams& p,
                                     const PowerMapCoeffs& coeffs, const DpConfig& cfg) {
  return run_dp<false>(sc, allowed, p, coeffs, cfg);
}

// ---------------------------------------------------------------------------
// Reference selection

std::string_view to_string(RefSource s) { return s == RefSource::GreenWave ? "green_wave" : "dp_fallback"; }

ReferenceDecision reference_speed(const Scenario& sc, const AllowedProfile& allowed, const SpeedProfile& v_dp,
                                  const HostState& state, const std::vector<bool>& stop_served,
                                  const PlannerConfig& cfg) {
  ReferenceDecision out;
  const auto lim = allowed.at(state.s);
  const double v_cap = std::max(lim.v_min, std::min(lim.v_max, v_dp.at(state.s)));
  out.v_ref = std::clamp(v_dp.at(state.s), lim.v_min, v_cap);
  out.feature = next_its_feature(sc, std::clamp(state.s, 0.0, sc.route.length_m), stop_served);
  if (!out.feature) return out;

  const double d = out.feature->d_its;
  const double stop_speed = std::sqrt(2.0 * cfg.stop_decel * std::max(d - cfg.stop_target_gap, 0.0));

  if (out.feature->kind == FeatureKind::StopSign) {
    out.stop_required = true;
    out.v_ref = std::min(out.v_ref, stop_speed);
    return out;
  }

  const auto& sig = sc.signals[out.feature->index];
  const auto windows =
      signal_windows(sig, state.t, cfg.spat_horizon_s, cfg.green_entry_margin_s, cfg.green_exit_margin_s);
  out.band = green_wave_band(d, windows, lim.v_min, v_cap);
  if (out.band) {
    // Arriving early in the green already showing gains nothing, so the DP
    // speed is kept inside that band instead of dropping to its minimum.
    const bool current_green = !windows.empty() && windows.front().g <= 0.0 &&
                               green_wave_band(d, std::span(windows).first(1), lim.v_min, v_cap).has_value();
    out.v_ref = current_green ? std::clamp(out.v_ref, out.band->v_ref_min, out.band->v_ref_max)
                              : out.band->v_ref_min;
    out.source = RefSource::GreenWave;
    return out;
  }
  // Committed: green now, too close to stop, and the line is reached at the
  // current speed before red.
  const auto phase = signal_phase_at(sig, state.t);
  const double v = state.v_h;
  const bool cannot_stop = d < v * v / (2.0 * cfg.max_decel);
  if (phase.phase == Phase::Green && cannot_stop && v > 0.0 && d / v < phase.remaining_s) {
    out.v_ref = std::max(out.v_ref, std::min(v, v_cap));
    return out;
  }
  out.stop_required = true;
  out.v_ref = std::min(out.v_ref, stop_speed);
  return out;
}

}  // namespace pedas
