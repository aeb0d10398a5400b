#pragma once

// Longitudinal BEV model: linearized resistive forces, traction-limit line,
// quadratic half-map power model and the least-squares fits behind them.

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pedas {

struct VehicleParams {
  double m_v = 1600.0;   // kg
  double m_eq = 1650.0;  // kg, includes rotating inertia
  double c_w = 0.28;
  double A_f = 2.27;     // m^2
  double rho = 1.2;      // kg/m^3
  double c_r = 0.01;
  double g = 9.81;
  // Aerodynamic linearization v^2 ~ p1*v + p2.
  double p1 = 0.0;
  double p2 = 0.0;
  // Traction-limit line F_t,max ~ p3*v + p4.
  double p3 = 0.0;
  double p4 = 0.0;
  double F_b_max = 12000.0;  // N
  double dF_t_max = 500.0;   // N per control step

  double aero_factor() const { return 0.5 * rho * A_f * c_w; }
  double traction_limit(double v) const { return p3 * v + p4; }
};

void validate(const VehicleParams& params);

struct PowerMapCoeffs {
  double a00 = 0.0, a10 = 0.0, a01 = 0.0, a11 = 0.0, a20 = 0.0, a02 = 0.0;

  std::array<double, 6> as_array() const { return {a00, a10, a01, a11, a20, a02}; }
  static PowerMapCoeffs from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
};

struct HostState {
  double t = 0.0;
  double s = 0.0;
  double v_h = 0.0;
  double F_t_prev = 0.0;
  std::optional<double> d_its;
  std::optional<double> d_rel;
};

struct AffineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

struct PowerGridPoint {
  double v = 0.0;
  double F_t = 0.0;
  double P = 0.0;
};

struct PowerMapFit {
  PowerMapCoeffs coeffs;
  double max_residual = 0.0;
  double rms_residual = 0.0;
  double max_abs_power = 0.0;
};

/// F_res = 1/2 rho A_f c_w (p1 v + p2) + c_r m_v g cos(theta) + m_v g sin(theta).
double resistive_force(const VehicleParams& params, double v, double theta);

/// Ordinary least squares y ~ slope*x + intercept. Throws InfeasibleError when
/// fewer than two distinct abscissae are supplied.
AffineFit fit_affine(std::span<const std::pair<double, double>> samples);

/// Half-map power model, watts. Defined for F_t >= 0.
double power(const PowerMapCoeffs& c, double v, double F_t);

/// Least-squares fit of the six-term quadratic. Throws InfeasibleError on a
/// rank-deficient grid (fewer than six points or collinear regressors).
PowerMapFit fit_power_map(std::span<const PowerGridPoint> grid);

/// One forward-Euler step of the longitudinal model; speed is clamped at 0
/// and distances advance with the trapezoidal mean speed.
HostState step_dynamics(const HostState& state, double F_t, double F_b, double theta,
                        const VehicleParams& params, double dt,
                        std::optional<std::pair<double, double>> v_p_pair = std::nullopt);

struct PowerSample {
  double v = 0.0;
  double F_t = 0.0;
};

/// Trapezoidal integral of the power model over uniformly spaced samples, kWh.
double energy_consumed(std::span<const PowerSample> samples, double dt, const PowerMapCoeffs& coeffs);

// ---------------------------------------------------------------------------
// Reference data used to produce the fits.

/// Physical power map P = F v / eta(v, F) + P_aux with eta bilinear in a table.
struct PhysicalPowerMap {
  std::vector<double> v_grid;
  std::vector<double> F_grid;
  std::vector<std::vector<double>> eta;  // [v index][F index]
  double P_aux = 0.0;

  double efficiency(double v, double F) const;
  double operator()(double v, double F) const;
};

/// Motor envelope F_max(v) = min(max_force, max_power / v).
struct TractionEnvelope {
  double max_force = 7000.0;
  double max_power = 80000.0;

  double operator()(double v) const;
};

struct SampleRange {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
  std::vector<double> values() const;
};

/// Everything read from a vehicle parameter file.
struct VehicleSpec {
  VehicleParams params;
  bool has_aero_line = false;
  bool has_traction_line = false;
  TractionEnvelope envelope;
  std::optional<PhysicalPowerMap> physical_map;
  SampleRange grid_v;
  SampleRange grid_F;
  std::vector<PowerGridPoint> grid_points;  // explicit points, if given
  std::optional<PowerMapCoeffs> coeffs;
  double a_lat_max = 2.0;
};

struct VehicleModel {
  VehicleParams params;
  PowerMapCoeffs coeffs;
  PowerMapFit fit;  // residual report of the power-map fit (zeros if given)
};

VehicleSpec load_vehicle_spec(const std::filesystem::path& path);
VehicleSpec parse_vehicle_spec(const std::string& json_text);

/// Grid the fit runs on: explicit points, or the physical map sampled inside
/// the traction envelope.
std::vector<PowerGridPoint> power_grid(const VehicleSpec& spec);

/// Completes the parameter set for a speed band: fits p1,p2 and p3,p4 over
/// [v_lo, v_hi] unless the file fixed them, and fits the power map unless
/// coefficients were supplied.
VehicleModel prepare_vehicle(const VehicleSpec& spec, double v_lo, double v_hi);

/// Writes a parameter document with fitted coefficients filled in.
std::string dump_vehicle_model(const VehicleSpec& spec, const VehicleModel& model);

}  // namespace pedas
