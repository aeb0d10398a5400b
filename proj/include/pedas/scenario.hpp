#pragma once

// Driving environment: route geometry, speed limits, SPaT schedules,
// stop signs and an optional recorded preceding vehicle.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pedas {

struct GradeSample {
  double position_m = 0.0;
  double theta_rad = 0.0;
};

struct CurvatureSample {
  double position_m = 0.0;
  double kappa_per_m = 0.0;
};

struct LimitSegment {
  double start_m = 0.0;
  double end_m = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
  std::string tag;  // optional KPI grouping, e.g. "urban" / "highway"
};

struct RouteProfile {
  double length_m = 0.0;
  std::vector<GradeSample> elevation;
  std::vector<CurvatureSample> curvature;
  std::vector<LimitSegment> limits;

  // Piecewise-linear in position, held constant outside the sampled range.
  double grade_at(double s) const;
  double curvature_at(double s) const;
};

enum class Phase { Green, Red };

struct PhaseInterval {
  Phase phase = Phase::Green;
  double duration_s = 0.0;
};

struct TrafficSignal {
  double position_m = 0.0;
  std::vector<PhaseInterval> cycle;
  // Time into the cycle at t = 0.
  double cycle_offset_s = 0.0;
  // Length of the stopping zone in front of the stop position.
  double stop_line_offset_m = 0.0;

  double period() const;
};

struct StopSign {
  double position_m = 0.0;
  double dwell_s = 3.0;
  double stop_line_offset_m = 0.0;
};

struct TraceSample {
  double time_s = 0.0;
  double position_m = 0.0;
  double velocity_mps = 0.0;
};

struct PrecedingTrace {
  std::vector<TraceSample> samples;
  double entry_time_s = 0.0;
  double exit_time_s = 0.0;

  // Linear interpolation; nullopt outside [entry, exit] or the sampled span.
  std::optional<TraceSample> at(double t) const;
};

struct Scenario {
  RouteProfile route;
  std::vector<TrafficSignal> signals;
  std::vector<StopSign> stop_signs;
  std::optional<PrecedingTrace> preceding;
  std::string label;
};

struct SpeedLimits {
  double v_min = 0.0;
  double v_max = 0.0;
};

enum class FeatureKind { Signal, StopSign };

struct ItsFeature {
  FeatureKind kind = FeatureKind::Signal;
  std::size_t index = 0;  // into Scenario::signals or Scenario::stop_signs
  double d_its = 0.0;
};

struct PhaseState {
  Phase phase = Phase::Green;
  double remaining_s = 0.0;
};

/// Checks every invariant and throws ValidationError naming the offending
/// field path (e.g. `route.limits[2]`).
void validate(const Scenario& scenario);

/// Static limits of the segment containing `s`; joins resolve to the later
/// segment. Throws std::out_of_range outside [0, length].
SpeedLimits speed_limits_at(const Scenario& scenario, double s);

/// Lateral-acceleration comfort cap sqrt(a_lat_max / kappa); +inf on straights.
double curvature_speed_cap(double kappa, double a_lat_max);

PhaseState signal_phase_at(const TrafficSignal& signal, double t);

/// Nearest signal or stop sign strictly ahead of `s`.
std::optional<ItsFeature> next_its_feature(const Scenario& scenario, double s);

/// Same lookup, skipping stop signs whose `served` flag is set.
std::optional<ItsFeature> next_its_feature(const Scenario& scenario, double s,
                                           const std::vector<bool>& stop_served);

double feature_position(const Scenario& scenario, const ItsFeature& feature);
double feature_stop_zone(const Scenario& scenario, const ItsFeature& feature);

Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& json_text);
std::string dump_scenario(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace pedas
