#pragma once

// Fixed-step closed-loop simulation, driver model, trip KPIs and comparison.

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pedas/mpc.hpp"
#include "pedas/planner.hpp"
#include "pedas/scenario.hpp"
#include "pedas/vehicle.hpp"

namespace pedas {

enum class DriverStyle { Cautious, Normal, Sporty };

std::string_view to_string(DriverStyle s);
DriverStyle parse_driver_style(std::string_view name);

struct DriverModel {
  DriverStyle style = DriverStyle::Normal;
  double reaction_delay_s = 0.0;
  double gain = 1.0;        // 1/s
  double noise_std = 0.0;   // m/s on the perceived target
  bool band_coast = false;  // coast while the advisory says Hold
  double max_accel = 1.5;   // m/s^2
  double max_decel = 3.5;   // m/s^2, positive
  double limit_factor = 1.0;  // baseline target relative to the posted limit
  double headway_s = 1.5;     // baseline gap keeping
};

void validate(const DriverModel& d);

/// Style presets: Cautious 0.9x limit and soft envelope, Normal 1.0x,
/// Sporty 1.1x with a harsher envelope.
DriverModel driver_for_style(DriverStyle style);

/// Zero delay, zero noise, reaches the advised speed in one step.
DriverModel ideal_driver(double dt);

/// Per-run mutable driver state: delay line and noise generator.
class DriverState {
 public:
  DriverState(const DriverModel& driver, double dt, std::uint64_t seed);

  /// Pushes `target` and returns the delayed, noise-perturbed target.
  double perceive(double target);

 private:
  std::size_t delay_steps_;
  double noise_std_;
  std::deque<double> line_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> noise_;
};

struct DriverForces {
  double F_t = 0.0;
  double F_b = 0.0;
};

/// Forces that pursue `target` (already delayed and perturbed) with a
/// first-order law clipped to the driver envelope and the actuator limits.
DriverForces driver_step(const DriverModel& driver, const Advisory& advisory, double target, const HostState& state,
                         double theta, const VehicleParams& params, double dt);

enum class RunMode { Baseline, Assisted };

std::string_view to_string(RunMode m);

struct TripRecord {
  double t = 0.0;
  double s = 0.0;
  double v_h = 0.0;
  double F_t = 0.0;
  double F_b = 0.0;
  double P = 0.0;
  std::optional<double> d_rel;
  std::optional<double> d_s;    // safe distance d_min + h_m v_h while following
  std::optional<double> d_its;
  std::optional<Advisory> advisory;
  std::optional<double> v_ref;  // planner reference (assisted runs)
  double v_min = 0.0;           // active limits at s
  double v_max = 0.0;
  bool violation = false;       // v_h > static limit + tolerance
  ControllerMode ctrl_mode = ControllerMode::RefTracking;
  RefSource ref_source = RefSource::DpFallback;
  Correction correction = Correction::None;
  bool degraded = false;
  bool holding = false;
};

struct TripLog {
  std::string label;
  RunMode mode = RunMode::Baseline;
  std::uint64_t seed = 0;
  double dt = 0.2;
  std::vector<TripRecord> records;
  // Diagnostic events found during the run.
  std::vector<double> stop_sign_dwell_s;  // longest standstill at each stop sign
  int red_crossings = 0;
  int degraded_steps = 0;
};

void write_trip_csv(const TripLog& log, std::ostream& os);
std::string trip_csv(const TripLog& log);

struct SimConfig {
  MpcConfig mpc;
  PlannerConfig planner;
  DpConfig dp;                    // speed_grid empty: built from the route limits
  double dp_grid_step = 0.5;
  double violation_tol = 0.1;     // m/s
  double timeout_s = 0.0;         // 0: derived from route length
};

/// Speed profile with the default grid when `cfg.dp.speed_grid` is empty.
SpeedProfile plan_dp_profile(const Scenario& scenario, const AllowedProfile& allowed, const VehicleParams& params,
                             const PowerMapCoeffs& coeffs, const SimConfig& cfg);

/// Runs one trip. `dp_profile` is required for Assisted runs. Throws
/// InfeasibleError when the route end is not reached within the timeout.
TripLog run_simulation(const Scenario& scenario, RunMode mode, const DriverModel& driver, const VehicleParams& params,
                       const PowerMapCoeffs& coeffs, const SimConfig& cfg, const SpeedProfile* dp_profile,
                       std::uint64_t seed);

struct SegmentMetrics {
  double distance_m = 0.0;
  double energy_kwh = 0.0;
  double time_s = 0.0;
  double violation_time_s = 0.0;
};

struct TripMetrics {
  std::string label;
  double energy_kwh = 0.0;
  double trip_time_s = 0.0;
  double speed_violation_time_s = 0.0;
  int speed_violation_count = 0;
  int signals_encountered = 0;
  int signals_crossed_green = 0;
  int signals_stopped = 0;
  int red_crossings = 0;
  int stops_total = 0;
  double mean_jerk = 0.0;
  double max_jerk = 0.0;
  std::map<std::string, SegmentMetrics> segments;  // by limit-segment tag
};

TripMetrics compute_metrics(const TripLog& log, const Scenario& scenario, const PowerMapCoeffs& coeffs,
                            double violation_tol = 0.1);

double energy_consumed(const TripLog& log, const PowerMapCoeffs& coeffs);

struct SegmentComparison {
  double energy_saving_pct = 0.0;
  double violation_reduction_pct = 0.0;
};

struct ComparisonReport {
  std::string label;
  TripMetrics baseline;
  TripMetrics assisted;
  double energy_saving_pct = 0.0;
  double violation_reduction_pct = 0.0;
  int green_crossing_delta = 0;
  double trip_time_change_pct = 0.0;
  std::map<std::string, SegmentComparison> segments;
};

/// Throws ValidationError when the labels differ.
ComparisonReport compare_runs(const TripMetrics& baseline, const TripMetrics& assisted);

std::string report_json(const ComparisonReport& report);
std::string metrics_json(const TripMetrics& metrics);
std::string report_table(const ComparisonReport& report);

struct BatchJob {
  const Scenario* scenario = nullptr;
  RunMode mode = RunMode::Assisted;
  DriverModel driver;
  const SpeedProfile* dp_profile = nullptr;
  std::uint64_t seed = 0;
};

/// Independent runs executed concurrently with OpenMP; the result order
/// matches `jobs`.
std::vector<TripLog> run_batch(const std::vector<BatchJob>& jobs, const VehicleParams& params,
                               const PowerMapCoeffs& coeffs, const SimConfig& cfg);

/// Same as run_batch on the calling thread only.
std::vector<TripLog> run_batch_serial(const std::vector<BatchJob>& jobs, const VehicleParams& params,
                                      const PowerMapCoeffs& coeffs, const SimConfig& cfg);

}  // namespace pedas
