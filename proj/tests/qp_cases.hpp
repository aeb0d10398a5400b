#pragma once

// Random convex QPs shared by the unit and acceptance tests.

#include <random>

#include "pedas/qp.hpp"

namespace testutil {

inline pedas::QpProblem random_qp(std::mt19937_64& rng, int n, int m) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  std::normal_distribution<double> N01;
  MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = N01(rng);
  pedas::QpProblem p = pedas::make_qp(M * M.transpose() + 0.1 * MatrixXd::Identity(n, n),
                                      VectorXd::NullaryExpr(n, [&] { return N01(rng); }));
  p.A_ineq = MatrixXd::NullaryExpr(m, n, [&] { return N01(rng); });
  // Feasible by construction around a random point.
  const VectorXd x0 = VectorXd::NullaryExpr(n, [&] { return 0.5 * N01(rng); });
  p.b_ineq = p.A_ineq * x0 + VectorXd::Constant(m, 0.5);
  p.lb = VectorXd::Constant(n, -2.0);
  p.ub = VectorXd::Constant(n, 2.0);
  return p;
}

}  // namespace testutil
