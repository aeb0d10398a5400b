#pragma once

// Reference speed generation: allowed-speed envelope, green-wave band from
// SPaT, offline DP speed profile and the per-step reference selection.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pedas/scenario.hpp"
#include "pedas/vehicle.hpp"

namespace pedas {

/// v_min(s) and v_max(s) = min(static limit, curvature cap).
class AllowedProfile {
 public:
  AllowedProfile(const Scenario& scenario, double a_lat_max);

  SpeedLimits at(double s) const;
  double length() const { return scenario_->route.length_m; }
  double a_lat_max() const { return a_lat_max_; }

 private:
  const Scenario* scenario_;
  double a_lat_max_;
};

/// Builds the envelope and throws ValidationError if the curvature cap drops
/// below the posted minimum anywhere on the route.
AllowedProfile allowed_speed_profile(const Scenario& scenario, double a_lat_max);

struct GreenWaveBand {
  double v_ref_min = 0.0;
  double v_ref_max = 0.0;
};

/// Arrival window relative to now: green starts at `g` (0 while already
/// green) and red starts at `r`.
struct PhaseWindow {
  double g = 0.0;
  double r = 0.0;
};

/// First window whose speed interval [d/r, d/g] meets [v_min, v_max].
std::optional<GreenWaveBand> green_wave_band(double d_tl, std::span<const PhaseWindow> windows, double v_min,
                                             double v_max);

/// Green windows of `signal` starting within `horizon_s` of time `t`,
/// relative to `t`. Each window is shrunk by `entry_margin_s` after the
/// green start (not applied to a green already showing) and `exit_margin_s`
/// before the red start; windows that vanish are dropped.
std::vector<PhaseWindow> signal_windows(const TrafficSignal& signal, double t, double horizon_s,
                                        double entry_margin_s = 0.0, double exit_margin_s = 0.0);

struct DpConfig {
  double ds = 10.0;
  std::vector<double> speed_grid;  // ascending, >= 0
  double w_time = 2.0;             // per second of trip time
  double w_energy = 1.0;           // per Wh of traction energy
  double max_accel = 1.5;
  double max_decel = 2.0;
};

void validate(const DpConfig& cfg);

/// 0, step, 2*step, ... up to and including `v_top`.
std::vector<double> uniform_speed_grid(double v_top, double step);

struct SpeedProfile {
  std::vector<double> positions;
  std::vector<double> speeds;
  double cost = 0.0;
  double energy_wh = 0.0;
  double time_s = 0.0;

  /// Linear interpolation in position, clamped at the ends.
  double at(double s) const;
};

/// Stage layout shared by the DP solver and test oracles.
struct DpStages {
  std::vector<double> positions;
  std::vector<std::vector<int>> admissible;  // speed-grid indices per stage
};

DpStages dp_stages(const AllowedProfile& allowed, const DpConfig& cfg);

struct StageCost {
  double cost = 0.0;     // +inf when the transition is not allowed
  double energy_wh = 0.0;
  double time_s = 0.0;
};

/// Cost of driving from `v_from` at `s0` to `v_to` at `s1` with average-speed
/// kinematics. Braking transitions pay trip time only.
StageCost dp_stage_cost(const Scenario& scenario, const VehicleParams& params, const PowerMapCoeffs& coeffs,
                        const DpConfig& cfg, double s0, double s1, double v_from, double v_to);

/// Backward DP over (position, speed). The kernel parallelizes each stage
/// across speed rows with OpenMP; results are bitwise identical to the serial
/// version. Throws InfeasibleError if some stage has no admissible speed or
/// no feasible path exists.
SpeedProfile dp_speed_profile(const Scenario& scenario, const AllowedProfile& allowed, const VehicleParams& params,
                              const PowerMapCoeffs& coeffs, const DpConfig& cfg);

/// Single-threaded reference implementation of dp_speed_profile.
SpeedProfile dp_speed_profile_serial(const Scenario& scenario, const AllowedProfile& allowed,
                                     const VehicleParams& params, const PowerMapCoeffs& coeffs, const DpConfig& cfg);

struct PlannerConfig {
  double a_lat_max = 2.0;
  double spat_horizon_s = 300.0;
  double green_entry_margin_s = 1.0;
  double green_exit_margin_s = 2.0;
  double stop_decel = 1.2;      // comfortable deceleration for stop approach, m/s^2
  double stop_target_gap = 0.5; // aim this far before the stop position, m
  double max_decel = 6.0;       // hard braking used for commitment checks, m/s^2
};

enum class RefSource { GreenWave, DpFallback };

std::string_view to_string(RefSource source);

struct ReferenceDecision {
  double v_ref = 0.0;
  RefSource source = RefSource::DpFallback;
  std::optional<ItsFeature> feature;
  std::optional<GreenWaveBand> band;
  // Stop-line constraints are enforced for `feature`.
  bool stop_required = false;
};

/// Reference speed for the tracking controller. Signals with a reachable green
/// window give the band minimum (the DP speed clamped into the band while
/// that green is already showing); otherwise the DP speed, shaped by a
/// comfortable stopping profile when a stop is required. Stop signs always
/// require a stop until served.
ReferenceDecision reference_speed(const Scenario& scenario, const AllowedProfile& allowed,
                                  const SpeedProfile& v_dp, const HostState& state,
                                  const std::vector<bool>& stop_served, const PlannerConfig& cfg);

}  // namespace pedas
