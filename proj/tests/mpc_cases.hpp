#pragma once

// Randomized short-horizon MPC states shared by the unit and acceptance tests.

#include <random>

#include "pedas/mpc.hpp"

namespace testutil {

struct MpcCase {
  pedas::MpcConfig cfg;
  pedas::HorizonContext ctx;
  bool following = false;
};

inline MpcCase random_mpc_case(std::mt19937_64& rng, int N, bool following) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MpcCase c;
  c.following = following;
  c.cfg.N = N;
  c.cfg.qp_tol = 1e-8;
  c.cfg.qp_max_iter = 200;
  auto& x = c.ctx;
  x.v0 = 2.0 + 20.0 * u(rng);
  x.F_t_prev = 3000.0 * u(rng);
  x.v_ref = std::max(0.0, x.v0 + 4.0 * (u(rng) - 0.5));
  const auto n = static_cast<std::size_t>(N);
  x.theta.assign(n, 0.0);
  x.v_lo.assign(n, 0.0);
  x.v_hi.assign(n, 0.0);
  const double cap = x.v0 + 0.5 + 3.0 * u(rng);
  for (std::size_t k = 0; k < n; ++k) {
    x.theta[k] = 0.06 * (u(rng) - 0.5);
    x.v_hi[k] = cap;
  }
  if (u(rng) < 0.4) {
    // Stop line somewhere ahead; always reachable without crossing it.
    x.its_active = true;
    x.d_s_its = 5.0 + 10.0 * u(rng);
    x.d_its0 = x.v0 * c.cfg.dT * N + x.v0 * x.v0 / 12.0 + 40.0 * u(rng);
  }
  if (following) {
    x.v_p = std::max(0.0, x.v0 + 6.0 * (u(rng) - 0.5));
    x.d_rel0 = c.cfg.d_min + c.cfg.h_m * x.v0 + 1.0 + 40.0 * u(rng);
  }
  return c;
}

}  // namespace testutil
