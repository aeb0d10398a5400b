#include "pedas/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pedas/log.hpp"

namespace pedas {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bound constraint sign*x[index] <= rhs.
struct BoundRow {
  Eigen::Index index;
  double sign;
  double rhs;
};

// Inequalities G x <= h with G = [Ag; bound rows]. General rows are
// normalized to unit infinity norm.
struct Constraints {
  Eigen::MatrixXd Ag;
  Eigen::VectorXd hg;
  std::vector<BoundRow> bounds;

  Eigen::Index general() const { return Ag.rows(); }
  Eigen::Index total() const { return Ag.rows() + static_cast<Eigen::Index>(bounds.size()); }

  Eigen::VectorXd h() const {
    Eigen::VectorXd out(total());
    out.head(general()) = hg;
    for (std::size_t i = 0; i < bounds.size(); ++i) out(general() + static_cast<Eigen::Index>(i)) = bounds[i].rhs;
    return out;
  }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    Eigen::VectorXd out(total());
    out.head(general()).noalias() = Ag * x;
    for (std::size_t i = 0; i < bounds.size(); ++i)
      out(general() + static_cast<Eigen::Index>(i)) = bounds[i].sign * x(bounds[i].index);
    return out;
  }

  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& z, Eigen::Index n) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (general() > 0) out.noalias() += Ag.transpose() * z.head(general());
    for (std::size_t i = 0; i < bounds.size(); ++i)
      out(bounds[i].index) += bounds[i].sign * z(general() + static_cast<Eigen::Index>(i));
    return out;
  }

  // H + G' diag(d) G
  Eigen::MatrixXd normal_matrix(const Eigen::MatrixXd& H, const Eigen::VectorXd& d) const {
    Eigen::MatrixXd M = H;
    if (general() > 0) {
      Eigen::MatrixXd scaled = Ag.transpose() * d.head(general()).asDiagonal();
      M.noalias() += scaled * Ag;
    }
    for (std::size_t i = 0; i < bounds.size(); ++i)
      M(bounds[i].index, bounds[i].index) += d(general() + static_cast<Eigen::Index>(i));
    return M;
  }
};

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

void check_dimensions(const QpProblem& p) {
  const auto n = p.f.size();
  if (p.H.rows() != n || p.H.cols() != n) throw std::invalid_argument("solve_qp: H must be n x n");
  if (p.A_ineq.rows() != p.b_ineq.size()) throw std::invalid_argument("solve_qp: A/b row mismatch");
  if (p.A_ineq.rows() > 0 && p.A_ineq.cols() != n) throw std::invalid_argument("solve_qp: A column mismatch");
  if (p.lb.size() != 0 && p.lb.size() != n) throw std::invalid_argument("solve_qp: lb size mismatch");
  if (p.ub.size() != 0 && p.ub.size() != n) throw std::invalid_argument("solve_qp: ub size mismatch");
  const double scale = 1.0 + p.H.cwiseAbs().maxCoeff();
  if (n > 0 && (p.H - p.H.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw std::invalid_argument("solve_qp: H is not symmetric");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lo = p.lb.size() ? p.lb(i) : -kInf;
    const double hi = p.ub.size() ? p.ub(i) : kInf;
    if (lo > hi) throw std::invalid_argument("solve_qp: lb > ub at index " + std::to_string(i));
  }
}

// Shift applied so that H + shift*I is positive semidefinite.
double convexity_shift(const Eigen::MatrixXd& H) {
  const auto n = H.rows();
  if (n == 0) return 0.0;
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  Eigen::LLT<Eigen::MatrixXd> llt(H + 1e-9 * scale * Eigen::MatrixXd::Identity(n, n));
  if (llt.info() == Eigen::Success) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin >= -1e-9) return 0.0;
  return std::abs(lmin) + 1e-8;
}

}  // namespace

QpProblem make_qp(Eigen::MatrixXd H, Eigen::VectorXd f) {
  QpProblem p;
  const auto n = f.size();
  p.H = std::move(H);
  p.f = std::move(f);
  p.A_ineq.resize(0, n);
  p.b_ineq.resize(0);
  p.lb = Eigen::VectorXd::Constant(n, -kInf);
  p.ub = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

double QpProblem::max_violation(const Eigen::VectorXd& x) const {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < A_ineq.rows(); ++i) {
    const double norm = A_ineq.row(i).cwiseAbs().maxCoeff();
    const double r = A_ineq.row(i).dot(x) - b_ineq(i);
    worst = std::max(worst, norm > 0.0 ? r / norm : r);
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (lb.size()) worst = std::max(worst, lb(i) - x(i));
    if (ub.size()) worst = std::max(worst, x(i) - ub(i));
  }
  return worst;
}

std::string_view to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "unknown";
}

QpSolution solve_qp(const QpProblem& problem, const QpOptions& opt) {
  check_dimensions(problem);
  const auto n = problem.num_vars();
  QpSolution sol;
  sol.hessian_shift = convexity_shift(problem.H);
  Eigen::MatrixXd H = problem.H;
  if (sol.hessian_shift > 0.0) {
    H.diagonal().array() += sol.hessian_shift;
    log::warn("solve_qp: indefinite Hessian, shifted diagonal by " + std::to_string(sol.hessian_shift));
  }
  const Eigen::VectorXd& f = problem.f;

  Constraints G;
  {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < problem.A_ineq.rows(); ++i) {
      const double norm = problem.A_ineq.row(i).cwiseAbs().maxCoeff();
      if (norm > 0.0) {
        keep.push_back(i);
      } else if (problem.b_ineq(i) < 0.0) {
        // 0 <= negative: no point satisfies this row.
        sol.x = opt.warm_start.value_or(Eigen::VectorXd::Zero(n));
        sol.status = QpStatus::Infeasible;
        sol.max_violation = -problem.b_ineq(i);
        sol.objective = problem.objective(sol.x);
        return sol;
      }
    }
    G.Ag.resize(static_cast<Eigen::Index>(keep.size()), n);
    G.hg.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r) {
      const auto i = keep[r];
      const double norm = problem.A_ineq.row(i).cwiseAbs().maxCoeff();
      G.Ag.row(static_cast<Eigen::Index>(r)) = problem.A_ineq.row(i) / norm;
      G.hg(static_cast<Eigen::Index>(r)) = problem.b_ineq(i) / norm;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      if (problem.ub.size() && std::isfinite(problem.ub(i))) G.bounds.push_back({i, 1.0, problem.ub(i)});
      if (problem.lb.size() && std::isfinite(problem.lb(i))) G.bounds.push_back({i, -1.0, -problem.lb(i)});
    }
  }
  const auto m = G.total();
  const Eigen::VectorXd h = G.h();

  auto finish = [&](Eigen::VectorXd x, QpStatus status, double kkt, int iters) {
    sol.x = std::move(x);
    sol.status = status;
    sol.kkt_residual = kkt;
    sol.iterations = iters;
    sol.objective = problem.objective(sol.x);
    sol.max_violation = problem.max_violation(sol.x);
    return sol;
  };

  if (m == 0) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    Eigen::VectorXd x = ldlt.solve(-f);
    const Eigen::VectorXd rd = H * x + f;
    const double kkt = rd.cwiseAbs().maxCoeff() / (1.0 + f.cwiseAbs().maxCoeff());
    return finish(std::move(x), kkt <= opt.tol ? QpStatus::Optimal : QpStatus::MaxIter, kkt, 1);
  }

  // Starting point.
  Eigen::VectorXd x(n), s(m), z(m);
  if (opt.warm_start && opt.warm_start->size() == n) {
    x = *opt.warm_start;
    s = (h - G.apply(x)).cwiseMax(1e-2);
    z = (1e-2 * s.cwiseInverse()).cwiseMax(1e-4);
  } else {
    Eigen::MatrixXd M0 = G.normal_matrix(H, Eigen::VectorXd::Ones(m));
    M0.diagonal().array() += 1e-10;
    x = M0.ldlt().solve(-f + G.apply_transpose(h, n));
    s = h - G.apply(x);
    z = -s;
    const double ap = -s.minCoeff();
    if (ap >= -1e-8) s.array() += 1.0 + ap;
    const double ad = -z.minCoeff();
    if (ad >= -1e-8) z.array() += 1.0 + ad;
  }

  const double f_scale = f.cwiseAbs().maxCoeff();
  Eigen::VectorXd best_x = x;
  double best_merit = kInf;
  double best_kkt = kInf;
  int stall = 0;
  double last_pres = kInf;

  for (int it = 0; it < opt.max_iter; ++it) {
    const Eigen::VectorXd Hx = H * x;
    const Eigen::VectorXd Gtz = G.apply_transpose(z, n);
    const Eigen::VectorXd rd = Hx + f + Gtz;
    const Eigen::VectorXd rp = G.apply(x) + s - h;
    const double mu = s.dot(z) / static_cast<double>(m);

    const double obj = 0.5 * x.dot(Hx) + f.dot(x);
    const double pres = rp.cwiseAbs().maxCoeff();
    const double dscale = 1.0 + std::max({Hx.cwiseAbs().maxCoeff(), f_scale, Gtz.cwiseAbs().maxCoeff()});
    const double dres = rd.cwiseAbs().maxCoeff() / dscale;
    const double gap = s.dot(z) / (1.0 + std::abs(obj));
    const double kkt = std::max({pres, dres, gap});

    if (kkt < best_merit) {
      best_merit = kkt;
      best_kkt = kkt;
      best_x = x;
    }
    if (pres <= opt.tol && dres <= opt.tol && gap <= opt.tol) return finish(x, QpStatus::Optimal, kkt, it);

    // Primal infeasibility: residual stuck while the duals diverge.
    if (pres > opt.tol && pres > 0.99 * last_pres && mu < 1e-6 * (1.0 + pres)) ++stall;
    else stall = 0;
    last_pres = std::min(last_pres, pres);
    if (stall >= 8 || z.cwiseAbs().maxCoeff() > 1e14) {
      // Report the best iterate seen for diagnostics.
      finish(best_x, QpStatus::Infeasible, best_kkt, it);
      return sol;
    }

    const Eigen::VectorXd d = z.cwiseQuotient(s);
    Eigen::MatrixXd M = G.normal_matrix(H, d);
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    bool use_llt = llt.info() == Eigen::Success;
    if (!use_llt) {
      M.diagonal().array() += 1e-10 * (1.0 + M.diagonal().cwiseAbs().maxCoeff());
      ldlt.compute(M);
    }
    auto direction = [&](const Eigen::VectorXd& rc, Eigen::VectorXd& dx, Eigen::VectorXd& ds, Eigen::VectorXd& dz) {
      const Eigen::VectorXd rhs = -rd - G.apply_transpose(d.cwiseProduct(rp) - rc.cwiseQuotient(s), n);
      dx = use_llt ? Eigen::VectorXd(llt.solve(rhs)) : Eigen::VectorXd(ldlt.solve(rhs));
      const Eigen::VectorXd Gdx = G.apply(dx);
      dz = d.cwiseProduct(Gdx + rp) - rc.cwiseQuotient(s);
      ds = -rp - Gdx;
    };

    Eigen::VectorXd dx, ds, dz;
    const Eigen::VectorXd sz = s.cwiseProduct(z);
    direction(sz, dx, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const Eigen::VectorXd rc = sz + ds.cwiseProduct(dz) - Eigen::VectorXd::Constant(m, sigma * mu);
    direction(rc, dx, ds, dz);
    const double a_max = std::min(max_step(s, ds), max_step(z, dz));
    const double alpha = std::min(1.0, 0.995 * a_max);

    x += alpha * dx;
    s += alpha * ds;
    z += alpha * dz;
    s = s.cwiseMax(1e-300);
    z = z.cwiseMax(1e-300);
  }

  const Eigen::VectorXd rp = G.apply(best_x) - h;
  const double viol = rp.cwiseMax(0.0).maxCoeff();
  return finish(best_x, viol > 1e2 * opt.tol ? QpStatus::Infeasible : QpStatus::MaxIter, best_kkt, opt.max_iter);
}

}  // namespace pedas
