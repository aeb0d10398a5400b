#pragma once

// Reference-tracking and car-following MPC, switching logic, driver-error
// speed corrections and advisory generation.

#include <Eigen/Dense>
#include <optional>
#include <string_view>
#include <vector>

#include "pedas/planner.hpp"
#include "pedas/qp.hpp"
#include "pedas/scenario.hpp"
#include "pedas/vehicle.hpp"

namespace pedas {

struct MpcConfig {
  int N = 20;
  double dT = 0.2;
  // Reference tracking: zeta1 weighs (v - v_ref)^2 [(m/s)^-2].
  // Car following: zeta1 weighs eps3^2 [m^-2].
  double zeta1 = 5.0e5;
  double zeta2 = 1.0e-2;  // F_b^2 [N^-2]
  double zeta3 = 50.0;    // eps1^2 [m^-2]
  double zeta4 = 1.0e-2;  // eps2^2 [N^-2]
  double h_m = 1.0;       // s
  double h_c = 2.0;       // s
  double d_min = 3.0;     // m
  double d_switch = 100.0;
  double k1 = 0.01, k2 = 0.4, k3 = 0.008, k4 = -0.05, k5 = 0.4;
  double corr_cap = 0.4;
  double gap_close_accel = 1.5;   // m/s^2, bound on upward gap corrections
  double gap_settle_decel = 0.1;  // m/s^2, closing speed the host can shed by coasting
  double hold_band_kmh = 2.0;
  double warning_margin_m = 1.0;
  double countdown_threshold_s = 10.0;
  double countdown_range_m = 200.0;
  double stop_icon_range_m = 150.0;
  double curve_lookahead_m = 150.0;
  double qp_tol = 1e-6;
  int qp_max_iter = 100;
};

void validate(const MpcConfig& cfg);

enum class ControllerMode { RefTracking, CarFollowing };

std::string_view to_string(ControllerMode mode);

/// RefTracking iff no preceding vehicle is sensed or it is beyond d_switch.
ControllerMode select_controller(std::optional<double> d_rel, const MpcConfig& cfg);

/// Everything the horizon QP needs about the route ahead, evaluated along
/// the predicted path.
struct HorizonContext {
  double v0 = 0.0;
  double F_t_prev = 0.0;
  std::vector<double> theta;  // grade for step k = 0..N-1
  std::vector<double> v_lo;   // bounds on v_{k+1}, k = 0..N-1
  std::vector<double> v_hi;
  double v_ref = 0.0;
  bool its_active = false;    // stop-line constraints enforced
  double d_its0 = 0.0;
  double d_s_its = 0.0;
  double v_p = 0.0;           // frozen preceding-vehicle speed
  double d_rel0 = 0.0;
};

struct SensedLead {
  double d_rel = 0.0;
  double v_p = 0.0;
};

HorizonContext make_horizon_context(const Scenario& scenario, const AllowedProfile& allowed,
                                    const SpeedProfile& v_dp, const HostState& state,
                                    const ReferenceDecision& decision, std::optional<SensedLead> lead,
                                    const VehicleParams& params, const PlannerConfig& planner,
                                    const MpcConfig& cfg);

/// Condensed QP over per-step blocks [F_t, F_b, eps1, eps2 (, eps3)].
/// Decision variables are scaled: forces and eps2 in kN, eps1/eps3 in m.
struct MpcProblem {
  ControllerMode mode = ControllerMode::RefTracking;
  int N = 0;
  int block = 4;
  QpProblem qp;
  Eigen::VectorXd scale;       // physical = scale .* qp variable
  Eigen::VectorXd v_const;     // v_k = v_const(k) + v_map.row(k) * physical
  Eigen::MatrixXd v_map;
  // Problem cannot be feasible: hard constraint already broken at k = 0.
  bool initial_breach = false;
};

MpcProblem build_ref_tracking_qp(const HorizonContext& ctx, const VehicleParams& params,
                                 const PowerMapCoeffs& coeffs, const MpcConfig& cfg);

MpcProblem build_car_following_qp(const HorizonContext& ctx, const VehicleParams& params,
                                  const PowerMapCoeffs& coeffs, const MpcConfig& cfg);

struct ControlSolution {
  std::vector<double> F_t_seq, F_b_seq;
  std::vector<double> eps1_seq, eps2_seq, eps3_seq;
  std::vector<double> v_pred_seq;  // N + 1 entries
  double objective = 0.0;
  ControllerMode mode = ControllerMode::RefTracking;
  double advisory_speed = 0.0;     // v_pred_seq[1]
  QpStatus qp_status = QpStatus::MaxIter;
  int iterations = 0;
  Eigen::VectorXd raw;             // scaled QP solution, for warm starts
};

ControlSolution solve_mpc(const MpcProblem& problem, const MpcConfig& cfg,
                          const std::optional<Eigen::VectorXd>& warm_start = std::nullopt);

/// Driver-error correction of the advised speed. Above the safe distance the
/// model prediction is shifted by k1 e^2 + k2 e (e = d_rel - d_c); below it
/// the speed two steps back is corrected by |min(k3 x^2, cap)| (k4 x^2 + k5 x)
/// with x = d_rel - d_s.
double corrected_speed(double v_h_k, double v_h_km1, double v_model_next, double d_rel, double d_c, double d_s,
                       const MpcConfig& cfg);

enum class Direction { Up, Down, Hold };

std::string_view to_string(Direction d);

enum Icon : unsigned {
  kIconNone = 0,
  kIconGreenWave = 1u << 0,
  kIconStopSignAhead = 1u << 1,
  kIconYieldAhead = 1u << 2,
  kIconCurveAhead = 1u << 3,
};

struct Advisory {
  double target_speed = 0.0;
  Direction direction = Direction::Hold;
  double magnitude = 0.0;
  unsigned icons = kIconNone;
  std::optional<double> tl_countdown;
  bool warning_tone = false;
};

std::string icons_to_string(unsigned icons);

struct AdvisoryContext {
  ControllerMode mode = ControllerMode::RefTracking;
  RefSource source = RefSource::DpFallback;
  std::optional<ItsFeature> feature;
  std::optional<PhaseState> signal_phase;  // when feature is a signal
  bool curve_ahead = false;
  std::optional<double> d_rel;
  std::optional<double> d_s;
};

Advisory advisory_from_solution(double target_speed, const HostState& state, const AdvisoryContext& ctx,
                                const MpcConfig& cfg);

inline Advisory advisory_from_solution(const ControlSolution& sol, const HostState& state,
                                       const AdvisoryContext& ctx, const MpcConfig& cfg) {
  return advisory_from_solution(sol.advisory_speed, state, ctx, cfg);
}

/// True when a curvature cap below both the posted limit and `v` lies within
/// `lookahead_m` ahead of `s`.
bool curve_ahead(const Scenario& scenario, const AllowedProfile& allowed, double s, double v, double lookahead_m);

enum class Correction { None, SpeedGap, SafeDistance };

std::string_view to_string(Correction c);

struct ControlStep {
  ControllerMode mode = ControllerMode::RefTracking;
  HorizonContext ctx;
  std::optional<ControlSolution> solution;
  double advisory_speed = 0.0;
  Correction correction = Correction::None;
  bool degraded = false;  // reference-tracking QP failed; proportional fallback
  bool holding = false;   // stopped at a stop line, QP skipped
};

/// Per-simulation controller; keeps the warm-start cache for its own run.
class Controller {
 public:
  Controller(const VehicleParams& params, const PowerMapCoeffs& coeffs, MpcConfig cfg, PlannerConfig planner);

  ControlStep step(const Scenario& scenario, const AllowedProfile& allowed, const SpeedProfile& v_dp,
                   const HostState& state, double v_h_prev, const ReferenceDecision& decision,
                   std::optional<SensedLead> lead);

  const MpcConfig& config() const { return cfg_; }

 private:
  VehicleParams params_;
  PowerMapCoeffs coeffs_;
  MpcConfig cfg_;
  PlannerConfig planner_;
  std::optional<Eigen::VectorXd> warm_[2];
};

}  // namespace pedas
