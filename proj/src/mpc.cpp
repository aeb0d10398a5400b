#include "pedas/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pedas/error.hpp"
#include "pedas/log.hpp"

namespace pedas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kForceScale = 1000.0;  // N per QP unit
constexpr double kSlackCapDistance = 1e4;
constexpr double kSlackCapForce = 1e6;
constexpr double kKmh = 1.0 / 3.6;

enum Slot { kFt = 0, kFb = 1, kEps1 = 2, kEps2 = 3, kEps3 = 4 };

// Accumulates a condensed QP in physical units.
class QpBuilder {
 public:
  QpBuilder(const HorizonContext& ctx, const VehicleParams& p, const MpcConfig& cfg, ControllerMode mode)
      : ctx_(ctx), p_(p), cfg_(cfg), N_(cfg.N), block_(mode == ControllerMode::CarFollowing ? 5 : 4) {
    n_ = N_ * block_;
    H_ = Eigen::MatrixXd::Zero(n_, n_);
    f_ = Eigen::VectorXd::Zero(n_);
    lb_ = Eigen::VectorXd::Zero(n_);
    ub_ = Eigen::VectorXd::Constant(n_, kInf);
    predict();
  }

  Eigen::Index idx(int k, Slot s) const { return static_cast<Eigen::Index>(k * block_ + s); }
  int N() const { return N_; }

  // Velocity v_k as affine function of the decision vector.
  Eigen::RowVectorXd v_row(int k) const { return V_.row(k); }
  double v_const(int k) const { return vc_(k); }
  Eigen::RowVectorXd dist_row(int k) const { return D_.row(k); }
  double dist_const(int k) const { return dc_(k); }

  void add_square(double w, const Eigen::RowVectorXd& g, double g0) {
    H_.noalias() += 2.0 * w * g.transpose() * g;
    f_.noalias() += 2.0 * w * g0 * g.transpose();
    c0_ += w * g0 * g0;
  }

  void add_power(const PowerMapCoeffs& c) {
    for (int k = 0; k < N_; ++k) {
      const auto F = idx(k, kFt);
      const Eigen::RowVectorXd g = V_.row(k);
      const double g0 = vc_(k);
      c0_ += c.a00 + c.a10 * g0;
      f_.noalias() += c.a10 * g.transpose();
      f_(F) += c.a01 + c.a11 * g0;
      H_.col(F).noalias() += c.a11 * g.transpose();
      H_.row(F).noalias() += c.a11 * g;
      add_square(c.a20, g, g0);
      H_(F, F) += 2.0 * c.a02;
    }
  }

  void add_diag(Slot s, double w) {
    for (int k = 0; k < N_; ++k) H_(idx(k, s), idx(k, s)) += 2.0 * w;
  }

  void add_row(const Eigen::RowVectorXd& row, double rhs) {
    rows_.push_back(row);
    rhs_.push_back(rhs);
  }

  Eigen::RowVectorXd unit(Eigen::Index i) const {
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n_);
    r(i) = 1.0;
    return r;
  }

  void common_constraints() {
    for (int k = 0; k < N_; ++k) {
      ub_(idx(k, kFb)) = p_.F_b_max;
      ub_(idx(k, kEps1)) = kSlackCapDistance;
      ub_(idx(k, kEps2)) = kSlackCapForce;
      if (block_ == 5) ub_(idx(k, kEps3)) = kSlackCapDistance;
    }
    // Traction limit (5a); v_0 is fixed so step 0 is a plain bound.
    ub_(idx(0, kFt)) = std::max(0.0, p_.traction_limit(ctx_.v0));
    for (int k = 1; k < N_; ++k)
      add_row(unit(idx(k, kFt)) - p_.p3 * V_.row(k), p_.p4 + p_.p3 * vc_(k));
    // Speed envelope (5c) on v_1..v_N.
    for (int k = 1; k <= N_; ++k) {
      add_row(V_.row(k), ctx_.v_hi[static_cast<std::size_t>(k - 1)] - vc_(k));
      add_row(-V_.row(k), vc_(k) - ctx_.v_lo[static_cast<std::size_t>(k - 1)]);
    }
    // Traction slew (7a-b); eps2_k softens the change into step k.
    for (int k = 0; k < N_; ++k) {
      Eigen::RowVectorXd diff = unit(idx(k, kFt));
      double prev = 0.0;
      if (k == 0) prev = ctx_.F_t_prev;
      else diff -= unit(idx(k - 1, kFt));
      const Eigen::RowVectorXd e2 = unit(idx(k, kEps2));
      add_row(diff - e2, p_.dF_t_max + prev);
      add_row(-diff - e2, p_.dF_t_max - prev);
    }
    // Stop line (8a-b).
    if (ctx_.its_active) {
      for (int k = 1; k <= N_; ++k) {
        // d_its,k = d0 - dist_k >= 0
        add_row(D_.row(k), ctx_.d_its0 - dc_(k));
        // d_its,k - eps1 <= d_s,its
        add_row(-D_.row(k) - unit(idx(k - 1, kEps1)), ctx_.d_s_its - ctx_.d_its0 + dc_(k));
      }
    }
  }

  void car_following_constraints() {
    for (int k = 1; k <= N_; ++k) {
      // d_rel,k = d_rel0 + k dT v_p - dist_k
      const double rel0 = ctx_.d_rel0 + k * cfg_.dT * ctx_.v_p - dc_(k);
      // (6a) d_min + h_m v_k <= d_rel,k
      add_row(cfg_.h_m * V_.row(k) + D_.row(k), rel0 - cfg_.d_min - cfg_.h_m * vc_(k));
      // (6b) d_rel,k <= d_min + h_c v_k + eps3
      add_row(-D_.row(k) - cfg_.h_c * V_.row(k) - unit(idx(k - 1, kEps3)), cfg_.d_min + cfg_.h_c * vc_(k) - rel0);
    }
  }

  MpcProblem finish(ControllerMode mode) const {
    MpcProblem out;
    out.mode = mode;
    out.N = N_;
    out.block = block_;
    out.scale = Eigen::VectorXd::Ones(n_);
    for (int k = 0; k < N_; ++k) {
      out.scale(idx(k, kFt)) = kForceScale;
      out.scale(idx(k, kFb)) = kForceScale;
      out.scale(idx(k, kEps2)) = kForceScale;
    }
    const auto& S = out.scale;
    Eigen::MatrixXd H = S.asDiagonal() * H_ * S.asDiagonal();
    H = 0.5 * (H + H.transpose()).eval();
    out.qp.H = std::move(H);
    out.qp.f = S.cwiseProduct(f_);
    out.qp.c0 = c0_;
    out.qp.A_ineq.resize(static_cast<Eigen::Index>(rows_.size()), n_);
    out.qp.b_ineq.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      out.qp.A_ineq.row(static_cast<Eigen::Index>(r)) = rows_[r].cwiseProduct(S.transpose());
      out.qp.b_ineq(static_cast<Eigen::Index>(r)) = rhs_[r];
    }
    out.qp.lb = lb_.cwiseQuotient(S);
    out.qp.ub = ub_.cwiseQuotient(S);
    out.v_const = vc_;
    out.v_map = V_;
    return out;
  }

 private:
  void predict() {
    const double a = 1.0 - cfg_.dT * p_.aero_factor() * p_.p1 / p_.m_eq;
    const double b = cfg_.dT / p_.m_eq;
    V_ = Eigen::MatrixXd::Zero(N_ + 1, n_);
    vc_ = Eigen::VectorXd::Zero(N_ + 1);
    D_ = Eigen::MatrixXd::Zero(N_ + 1, n_);
    dc_ = Eigen::VectorXd::Zero(N_ + 1);
    vc_(0) = ctx_.v0;
    for (int k = 0; k < N_; ++k) {
      const double th = ctx_.theta[static_cast<std::size_t>(k)];
      const double beta = p_.aero_factor() * p_.p2 + p_.c_r * p_.m_v * p_.g * std::cos(th) + p_.m_v * p_.g * std::sin(th);
      V_.row(k + 1) = a * V_.row(k);
      V_(k + 1, idx(k, kFt)) += b;
      V_(k + 1, idx(k, kFb)) -= b;
      vc_(k + 1) = a * vc_(k) - b * beta;
      D_.row(k + 1) = D_.row(k) + 0.5 * cfg_.dT * (V_.row(k) + V_.row(k + 1));
      dc_(k + 1) = dc_(k) + 0.5 * cfg_.dT * (vc_(k) + vc_(k + 1));
    }
  }

  const HorizonContext& ctx_;
  const VehicleParams& p_;
  const MpcConfig& cfg_;
  int N_;
  int block_;
  Eigen::Index n_ = 0;
  Eigen::MatrixXd V_, D_;
  Eigen::VectorXd vc_, dc_;
  Eigen::MatrixXd H_;
  Eigen::VectorXd f_;
  double c0_ = 0.0;
  Eigen::VectorXd lb_, ub_;
  std::vector<Eigen::RowVectorXd> rows_;
  std::vector<double> rhs_;
};

void check_context(const HorizonContext& ctx, const MpcConfig& cfg) {
  const auto N = static_cast<std::size_t>(cfg.N);
  if (ctx.theta.size() != N || ctx.v_lo.size() != N || ctx.v_hi.size() != N)
    throw std::invalid_argument("HorizonContext: per-step vectors must have N entries");
}

}  // namespace

void validate(const MpcConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("mpc.") + what);
  };
  require(c.N >= 1, "N: must be >= 1");
  require(c.dT > 0.0, "dT: must be > 0");
  require(c.zeta1 >= 0.0 && c.zeta2 >= 0.0 && c.zeta3 >= 0.0 && c.zeta4 >= 0.0, "zeta: must be >= 0");
  require(c.h_m > 0.0 && c.h_m < c.h_c, "h_m/h_c: need 0 < h_m < h_c");
  require(c.d_min > 0.0, "d_min: must be > 0");
  require(c.d_switch > 0.0, "d_switch: must be > 0");
  require(c.hold_band_kmh >= 0.0, "hold_band_kmh: must be >= 0");
  require(c.gap_close_accel > 0.0, "gap_close_accel: must be > 0");
  require(c.gap_settle_decel > 0.0, "gap_settle_decel: must be > 0");
}

std::string_view to_string(ControllerMode m) {
  return m == ControllerMode::RefTracking ? "ref_tracking" : "car_following";
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Hold: return "hold";
  }
  return "hold";
}

std::string_view to_string(Correction c) {
  switch (c) {
    case Correction::None: return "none";
    case Correction::SpeedGap: return "speed_gap";
    case Correction::SafeDistance: return "safe_distance";
  }
  return "none";
}

std::string icons_to_string(unsigned icons) {
  std::string out;
  auto add = [&](unsigned bit, const char* name) {
    if (icons & bit) {
      if (!out.empty()) out += '|';
      out += name;
    }
  };
  add(kIconGreenWave, "green_wave");
  add(kIconStopSignAhead, "stop_sign");
  add(kIconYieldAhead, "yield");
  add(kIconCurveAhead, "curve");
  return out;
}

ControllerMode select_controller(std::optional<double> d_rel, const MpcConfig& cfg) {
  if (!d_rel || *d_rel > cfg.d_switch) return ControllerMode::RefTracking;
  return ControllerMode::CarFollowing;
}

HorizonContext make_horizon_context(const Scenario& sc, const AllowedProfile& allowed, const SpeedProfile& v_dp,
                                    const HostState& st, const ReferenceDecision& dec, std::optional<SensedLead> lead,
                                    const VehicleParams& p, const PlannerConfig& planner, const MpcConfig& cfg) {
  HorizonContext ctx;
  const auto N = static_cast<std::size_t>(cfg.N);
  ctx.v0 = st.v_h;
  ctx.F_t_prev = st.F_t_prev;
  ctx.v_ref = dec.v_ref;
  ctx.theta.resize(N);
  ctx.v_lo.resize(N);
  ctx.v_hi.resize(N);
  const double pace = std::max({st.v_h, dec.v_ref, 1.0});
  const double relax_decel = 0.5 * p.F_b_max / p.m_eq;
  const bool following = lead && select_controller(lead->d_rel, cfg) == ControllerMode::CarFollowing;
  const double len = sc.route.length_m;
  for (std::size_t k = 0; k < N; ++k) {
    const double sk = std::min(len, st.s + static_cast<double>(k) * cfg.dT * pace);
    const double sk1 = std::min(len, st.s + static_cast<double>(k + 1) * cfg.dT * pace);
    ctx.theta[k] = sc.route.grade_at(sk);
    const auto lim = allowed.at(sk1);
    double hi = std::min(lim.v_max, std::max(v_dp.at(sk1), lim.v_min));
    // Already too fast: allow a feasible deceleration ramp instead of a jump.
    hi = std::max(hi, st.v_h - static_cast<double>(k + 1) * cfg.dT * relax_decel);
    double lo = std::min(lim.v_min, st.v_h);
    if (dec.stop_required) lo = 0.0;
    if (following) lo = std::min(lo, lead->v_p);
    ctx.v_lo[k] = std::max(0.0, lo);
    ctx.v_hi[k] = std::max(hi, ctx.v_lo[k]);
  }
  if (dec.stop_required && dec.feature) {
    const double v = st.v_h;
    const double reach = v * cfg.dT * cfg.N + v * v / (2.0 * planner.stop_decel) + 30.0;
    if (dec.feature->d_its <= reach) {
      ctx.its_active = true;
      ctx.d_its0 = dec.feature->d_its;
      ctx.d_s_its = feature_stop_zone(sc, *dec.feature);
    }
  }
  if (lead) {
    ctx.v_p = lead->v_p;
    ctx.d_rel0 = lead->d_rel;
  }
  return ctx;
}

MpcProblem build_ref_tracking_qp(const HorizonContext& ctx, const VehicleParams& p, const PowerMapCoeffs& coeffs,
                                 const MpcConfig& cfg) {
  check_context(ctx, cfg);
  QpBuilder b(ctx, p, cfg, ControllerMode::RefTracking);
  b.add_power(coeffs);
  for (int k = 1; k <= cfg.N; ++k) b.add_square(cfg.zeta1, b.v_row(k), b.v_const(k) - ctx.v_ref);
  b.add_diag(kFb, cfg.zeta2);
  b.add_diag(kEps1, cfg.zeta3);
  b.add_diag(kEps2, cfg.zeta4);
  b.common_constraints();
  MpcProblem out = b.finish(ControllerMode::RefTracking);
  out.initial_breach = ctx.its_active && ctx.d_its0 < 0.0;
  return out;
}

MpcProblem build_car_following_qp(const HorizonContext& ctx, const VehicleParams& p, const PowerMapCoeffs& coeffs,
                                  const MpcConfig& cfg) {
  check_context(ctx, cfg);
  QpBuilder b(ctx, p, cfg, ControllerMode::CarFollowing);
  b.add_power(coeffs);
  b.add_diag(kEps3, cfg.zeta1);
  b.add_diag(kFb, cfg.zeta2);
  b.add_diag(kEps1, cfg.zeta3);
  b.add_diag(kEps2, cfg.zeta4);
  b.common_constraints();
  b.car_following_constraints();
  MpcProblem out = b.finish(ControllerMode::CarFollowing);
  const double d_s0 = cfg.d_min + cfg.h_m * ctx.v0;
  out.initial_breach = ctx.d_rel0 < d_s0 || (ctx.its_active && ctx.d_its0 < 0.0);
  return out;
}

ControlSolution solve_mpc(const MpcProblem& prob, const MpcConfig& cfg, const std::optional<Eigen::VectorXd>& warm) {
  ControlSolution sol;
  sol.mode = prob.mode;
  const auto N = static_cast<std::size_t>(prob.N);
  if (prob.initial_breach) {
    sol.qp_status = QpStatus::Infeasible;
    sol.v_pred_seq.assign(N + 1, prob.v_const(0));
    sol.advisory_speed = prob.v_const(0);
    return sol;
  }
  QpOptions opt;
  opt.tol = cfg.qp_tol;
  opt.max_iter = cfg.qp_max_iter;
  if (warm && warm->size() == prob.qp.num_vars()) opt.warm_start = warm;
  const QpSolution qs = solve_qp(prob.qp, opt);
  sol.qp_status = qs.status;
  sol.iterations = qs.iterations;
  sol.objective = qs.objective;
  sol.raw = qs.x;
  const Eigen::VectorXd x = prob.scale.cwiseProduct(qs.x);
  const Eigen::VectorXd v = prob.v_const + prob.v_map * x;
  sol.v_pred_seq.assign(v.data(), v.data() + v.size());
  for (std::size_t k = 0; k < N; ++k) {
    const auto base = static_cast<Eigen::Index>(k) * prob.block;
    sol.F_t_seq.push_back(x(base + kFt));
    sol.F_b_seq.push_back(x(base + kFb));
    sol.eps1_seq.push_back(x(base + kEps1));
    sol.eps2_seq.push_back(x(base + kEps2));
    sol.eps3_seq.push_back(prob.block == 5 ? x(base + kEps3) : 0.0);
  }
  sol.advisory_speed = sol.v_pred_seq.size() > 1 ? sol.v_pred_seq[1] : sol.v_pred_seq[0];
  return sol;
}

double corrected_speed(double v_h_k, double v_h_km1, double v_model_next, double d_rel, double d_c, double d_s,
                       const MpcConfig& cfg) {
  (void)v_h_k;
  if (d_rel >= d_s) {
    const double e = d_rel - d_c;
    return v_model_next + cfg.k1 * e * e + cfg.k2 * e;
  }
  const double x = d_rel - d_s;
  const double gain = std::abs(std::min(cfg.k3 * x * x, cfg.corr_cap));
  return v_h_km1 + gain * (cfg.k4 * x * x + cfg.k5 * x);
}

bool curve_ahead(const Scenario& sc, const AllowedProfile& allowed, double s, double v, double lookahead_m) {
  const double end = std::min(sc.route.length_m, s + lookahead_m);
  for (double x = s; x <= end; x += 5.0) {
    const double cap = curvature_speed_cap(sc.route.curvature_at(x), allowed.a_lat_max());
    if (cap < speed_limits_at(sc, x).v_max && cap < v) return true;
  }
  return false;
}

Advisory advisory_from_solution(double target, const HostState& st, const AdvisoryContext& ctx, const MpcConfig& cfg) {
  Advisory adv;
  adv.target_speed = target;
  const double diff = target - st.v_h;
  adv.magnitude = std::abs(diff);
  if (adv.magnitude <= cfg.hold_band_kmh * kKmh) adv.direction = Direction::Hold;
  else adv.direction = diff > 0.0 ? Direction::Up : Direction::Down;

  if (ctx.source == RefSource::GreenWave && ctx.mode == ControllerMode::RefTracking) adv.icons |= kIconGreenWave;
  if (ctx.curve_ahead) adv.icons |= kIconCurveAhead;
  if (ctx.feature) {
    if (ctx.feature->kind == FeatureKind::StopSign && ctx.feature->d_its <= cfg.stop_icon_range_m)
      adv.icons |= kIconStopSignAhead;
    if (ctx.feature->kind == FeatureKind::Signal && ctx.signal_phase && ctx.feature->d_its <= cfg.countdown_range_m &&
        ctx.signal_phase->remaining_s < cfg.countdown_threshold_s)
      adv.tl_countdown = ctx.signal_phase->remaining_s;
  }
  if (ctx.mode == ControllerMode::CarFollowing && ctx.d_rel && ctx.d_s && adv.direction == Direction::Down &&
      *ctx.d_rel < *ctx.d_s + cfg.warning_margin_m)
    adv.warning_tone = true;
  return adv;
}

// ---------------------------------------------------------------------------

Controller::Controller(const VehicleParams& params, const PowerMapCoeffs& coeffs, MpcConfig cfg,
                       PlannerConfig planner)
    : params_(params), coeffs_(coeffs), cfg_(cfg), planner_(planner) {
  validate(cfg_);
}

ControlStep Controller::step(const Scenario& sc, const AllowedProfile& allowed, const SpeedProfile& v_dp,
                             const HostState& st, double v_h_prev, const ReferenceDecision& dec,
                             std::optional<SensedLead> lead) {
  ControlStep out;
  out.mode = select_controller(lead ? std::optional<double>(lead->d_rel) : std::nullopt, cfg_);
  out.ctx = make_horizon_context(sc, allowed, v_dp, st, dec, lead, params_, planner_, cfg_);
  const auto& ctx = out.ctx;
  const double v_top = ctx.v_hi.front();

  if (ctx.its_active && st.v_h < 0.05 && ctx.d_its0 <= ctx.d_s_its + 1.0) {
    out.holding = true;
    out.advisory_speed = 0.0;
    return out;
  }

  const int slot = out.mode == ControllerMode::CarFollowing ? 1 : 0;
  const MpcProblem prob = out.mode == ControllerMode::CarFollowing
                              ? build_car_following_qp(ctx, params_, coeffs_, cfg_)
                              : build_ref_tracking_qp(ctx, params_, coeffs_, cfg_);
  std::optional<Eigen::VectorXd> warm;
  if (warm_[slot] && warm_[slot]->size() == prob.qp.num_vars()) {
    // Shift the previous plan by one step.
    const auto& prev = *warm_[slot];
    Eigen::VectorXd shifted(prev.size());
    const auto b = prob.block;
    shifted.head(prev.size() - b) = prev.tail(prev.size() - b);
    shifted.tail(b) = prev.tail(b);
    warm = shifted;
  }
  ControlSolution sol = solve_mpc(prob, cfg_, warm);
  const bool optimal = sol.qp_status == QpStatus::Optimal;
  if (optimal) warm_[slot] = sol.raw;
  else warm_[slot].reset();

  if (out.mode == ControllerMode::CarFollowing) {
    const double d_c = cfg_.d_min + cfg_.h_c * st.v_h;
    const double d_s = cfg_.d_min + cfg_.h_m * st.v_h;
    const double model_next = optimal ? sol.advisory_speed : st.v_h;
    double v = corrected_speed(st.v_h, v_h_prev, model_next, lead->d_rel, d_c, d_s, cfg_);
    out.correction = lead->d_rel >= d_s ? Correction::SpeedGap : Correction::SafeDistance;
    if (out.correction == Correction::SpeedGap) {
      double cap = v_top;
      if (dec.stop_required) cap = std::min(cap, dec.v_ref);
      v = std::min(v, std::max(cap, model_next));
      // Close a large gap at comfort acceleration, and no faster than lets
      // the host coast down to the lead speed at the comfort gap.
      const double a = cfg_.gap_close_accel;
      const double d_settle = cfg_.d_min + cfg_.h_c * lead->v_p;
      const double settle =
          lead->v_p + std::sqrt(2.0 * cfg_.gap_settle_decel * std::max(0.0, lead->d_rel - d_settle));
      v = std::min({v, st.v_h + a * cfg_.dT, std::max(settle, st.v_h - a * cfg_.dT)});
    }
    out.advisory_speed = std::max(0.0, v);
  } else if (optimal) {
    out.advisory_speed = sol.advisory_speed;
  } else {
    // Degraded: proportional approach to the capped reference.
    out.degraded = true;
    const double target = std::min(v_top, ctx.v_ref);
    const double step = std::clamp(0.5 * (target - st.v_h), -2.0 * cfg_.dT * planner_.max_decel, cfg_.dT * 1.5);
    out.advisory_speed = std::max(0.0, st.v_h + step);
    log::debug("reference-tracking QP " + std::string(to_string(sol.qp_status)) + " at s=" + std::to_string(st.s));
  }
  out.solution = std::move(sol);
  return out;
}

}  // namespace pedas
