#pragma once

// Exhaustive force-grid search for short-horizon MPC instances. The cost is
// evaluated by stepping the longitudinal model forward and choosing the
// smallest slacks that satisfy each soft constraint.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pedas/mpc.hpp"

namespace oracle {

struct BruteForceResult {
  double objective = std::numeric_limits<double>::infinity();
  std::vector<double> F_t, F_b;
  long feasible = 0;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return out;
}

struct Rollout {
  const pedas::HorizonContext& ctx;
  const pedas::VehicleParams& p;
  const pedas::PowerMapCoeffs& c;
  const pedas::MpcConfig& cfg;
  bool following;

  double power(double v, double F) const {
    return c.a00 + c.a10 * v + c.a01 * F + c.a11 * v * F + c.a20 * v * v + c.a02 * F * F;
  }

  // Cost of one force sequence, +inf when a hard constraint fails.
  double cost(const std::vector<double>& Ft, const std::vector<double>& Fb) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t N = Ft.size();
    const double half_rho_A_cw = 0.5 * p.rho * p.A_f * p.c_w;
    double v = ctx.v0, d = ctx.d_its0, rel = ctx.d_rel0, prev = ctx.F_t_prev;
    double J = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      const double limit = k == 0 ? std::max(0.0, p.p3 * v + p.p4) : p.p3 * v + p.p4;
      if (Ft[k] > limit + 1e-9) return inf;
      J += power(v, Ft[k]);
      const double th = ctx.theta[k];
      const double res = half_rho_A_cw * (p.p1 * v + p.p2) + p.c_r * p.m_v * p.g * std::cos(th) + p.m_v * p.g * std::sin(th);
      const double vn = v + cfg.dT / p.m_eq * (Ft[k] - Fb[k] - res);
      if (vn < ctx.v_lo[k] - 1e-9 || vn > ctx.v_hi[k] + 1e-9) return inf;
      const double travel = 0.5 * cfg.dT * (v + vn);
      const double e2 = std::max(0.0, std::abs(Ft[k] - prev) - p.dF_t_max);
      J += cfg.zeta2 * Fb[k] * Fb[k] + cfg.zeta4 * e2 * e2;
      if (ctx.its_active) {
        d -= travel;
        if (d < -1e-9) return inf;
        const double e1 = std::max(0.0, d - ctx.d_s_its);
        J += cfg.zeta3 * e1 * e1;
      }
      if (following) {
        rel += cfg.dT * ctx.v_p - travel;
        if (rel < cfg.d_min + cfg.h_m * vn - 1e-9) return inf;
        const double e3 = std::max(0.0, rel - cfg.d_min - cfg.h_c * vn);
        J += cfg.zeta1 * e3 * e3;
      } else {
        J += cfg.zeta1 * (vn - ctx.v_ref) * (vn - ctx.v_ref);
      }
      v = vn;
      prev = Ft[k];
    }
    return J;
  }
};

/// N = 1 or 2, `points` samples per force axis and step.
inline BruteForceResult brute_force_mpc(const pedas::HorizonContext& ctx, const pedas::VehicleParams& p,
                                        const pedas::PowerMapCoeffs& c, const pedas::MpcConfig& cfg, bool following,
                                        int points = 50) {
  const Rollout roll{ctx, p, c, cfg, following};
  // Traction samples span the actuator range at the current speed.
  const auto ft = linspace(0.0, std::max(0.0, p.p3 * ctx.v0 + p.p4), points);
  // Brake samples are quadratically spaced: light braking needs fine steps,
  // full braking does not.
  auto fb = linspace(0.0, 1.0, points);
  for (double& x : fb) x = p.F_b_max * x * x;
  BruteForceResult best;
  const int N = cfg.N;
  std::vector<double> Ft(static_cast<std::size_t>(N)), Fb(static_cast<std::size_t>(N));
  auto visit = [&] {
    const double J = roll.cost(Ft, Fb);
    if (!std::isfinite(J)) return;
    ++best.feasible;
    if (J < best.objective) {
      best.objective = J;
      best.F_t = Ft;
      best.F_b = Fb;
    }
  };
  if (N == 1) {
    for (double a : ft)
      for (double b : fb) {
        Ft[0] = a;
        Fb[0] = b;
        visit();
      }
  } else {
    for (double a0 : ft)
      for (double b0 : fb) {
        Ft[0] = a0;
        Fb[0] = b0;
        for (double a1 : ft)
          for (double b1 : fb) {
            Ft[1] = a1;
            Fb[1] = b1;
            visit();
          }
      }
  }
  return best;
}

}  // namespace oracle
