#pragma once

// Dense convex QP:  min 1/2 x'Hx + f'x + c0   s.t.  A x <= b,  lb <= x <= ub.

#include <Eigen/Dense>
#include <optional>
#include <string_view>

namespace pedas {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd f;
  double c0 = 0.0;
  Eigen::MatrixXd A_ineq;  // m x n, m may be 0
  Eigen::VectorXd b_ineq;
  Eigen::VectorXd lb;      // -inf allowed
  Eigen::VectorXd ub;      // +inf allowed

  Eigen::Index num_vars() const { return f.size(); }
  double objective(const Eigen::VectorXd& x) const { return 0.5 * x.dot(H * x) + f.dot(x) + c0; }
  /// Largest violation of any constraint (absolute units).
  double max_violation(const Eigen::VectorXd& x) const;
};

/// Unconstrained in all directions except the supplied ones.
QpProblem make_qp(Eigen::MatrixXd H, Eigen::VectorXd f);

enum class QpStatus { Optimal, Infeasible, MaxIter };

std::string_view to_string(QpStatus status);

struct QpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  QpStatus status = QpStatus::MaxIter;
  double kkt_residual = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  // Diagonal shift applied to H when it was found indefinite (0 if none).
  double hessian_shift = 0.0;
};

struct QpOptions {
  double tol = 1e-6;
  int max_iter = 100;
  std::optional<Eigen::VectorXd> warm_start;
};

/// Primal-dual interior-point method with Mehrotra predictor-corrector steps.
/// Throws std::invalid_argument on dimension mismatch, asymmetric H or
/// crossed bounds.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

inline QpSolution solve_qp(const QpProblem& problem, double tol, int max_iter) {
  QpOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_qp(problem, opt);
}

}  // namespace pedas
