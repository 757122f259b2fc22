#pragma once

// Dense primal-dual interior-point method (Mehrotra predictor-corrector) for the condensed QP
//
//   min 1/2 v'Hv + g'v + w's   s.t.  G v >= g_lo,  C v + s >= c_lo,  s >= 0.
//
// The soft rows carry nonnegative slacks with linear cost w; the slack block of the Newton system
// is diagonal and eliminated in closed form, leaving one n x n Cholesky solve per step.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pmpc/errors.hpp"

namespace pmpc {

struct DenseQp {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::SparseMatrix<double, Eigen::RowMajor> G;
  Eigen::VectorXd g_lo;
  Eigen::MatrixXd C;
  Eigen::VectorXd c_lo;
  Eigen::VectorXd slack_cost;

  int n() const { return static_cast<int>(g.size()); }
  int mg() const { return static_cast<int>(g_lo.size()); }
  int mc() const { return static_cast<int>(c_lo.size()); }
};

struct QpSettings {
  int max_iterations = 60;
  double tolerance = 1e-9;
  double step_fraction = 0.995;
};

struct QpSolution {
  Eigen::VectorXd v;
  Eigen::VectorXd s;
  Eigen::VectorXd y_g;  // multipliers of the hard rows
  Eigen::VectorXd y_c;  // multipliers of the soft rows
  Eigen::VectorXd z_s;  // multipliers of s >= 0
  int iterations = 0;
};

namespace detail {

inline double max_step(const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
  double a = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  }
  return a;
}

inline double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace detail

/// Throws QpSubproblemFailure when the iteration does not reach the tolerance.
inline QpSolution solve_qp(const DenseQp& qp, const QpSettings& settings = {}) {
  using Eigen::VectorXd;
  const int n = qp.n();
  const int mg = qp.mg();
  const int mc = qp.mc();
  const int m = mg + 2 * mc;

  QpSolution sol;
  sol.v = VectorXd::Zero(n);
  if (m == 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H);
    if (llt.info() != Eigen::Success) throw QpSubproblemFailure("QP Hessian is not positive definite");
    sol.v = llt.solve(-qp.g);
    sol.s.resize(0);
    sol.y_g.resize(0);
    sol.y_c.resize(0);
    sol.z_s.resize(0);
    return sol;
  }

  // Starting point: slack variables at least one, multipliers one.
  VectorXd t_g = (qp.G * sol.v - qp.g_lo).cwiseMax(1.0);
  VectorXd y_g = VectorXd::Ones(mg);
  VectorXd s = VectorXd::Ones(mc);
  VectorXd t_c = (qp.C * sol.v + s - qp.c_lo).cwiseMax(1.0);
  VectorXd y_c = VectorXd::Ones(mc);
  VectorXd z_s = (qp.slack_cost.array() - 1.0).cwiseMax(1.0).matrix();

  const double scale_d = 1.0 + detail::inf_norm(qp.g) + detail::inf_norm(qp.slack_cost);
  const double scale_c = 1.0 + detail::inf_norm(qp.g);
  const double scale_p = 1.0 + std::max(detail::inf_norm(qp.g_lo), detail::inf_norm(qp.c_lo));

  const Eigen::SparseMatrix<double> gt = qp.G.transpose();
  const Eigen::MatrixXd ct = qp.C.transpose();

  for (int it = 0; it < settings.max_iterations; ++it) {
    const VectorXd r_v = qp.H * sol.v + qp.g - gt * y_g - ct * y_c;
    const VectorXd r_s = qp.slack_cost - y_c - z_s;
    const VectorXd r_pg = qp.G * sol.v - t_g - qp.g_lo;
    const VectorXd r_pc = qp.C * sol.v + s - t_c - qp.c_lo;
    const double mu = (t_g.dot(y_g) + t_c.dot(y_c) + s.dot(z_s)) / m;

    const double res_d = std::max(detail::inf_norm(r_v), detail::inf_norm(r_s));
    const double res_p = std::max(detail::inf_norm(r_pg), detail::inf_norm(r_pc));
    // Complementarity is judged row by row and without the slack cost in the scale, so a large
    // penalty weight cannot loosen it.
    const double comp = std::max({detail::inf_norm(t_g.cwiseProduct(y_g)), detail::inf_norm(t_c.cwiseProduct(y_c)),
                                  detail::inf_norm(s.cwiseProduct(z_s))});
    if (res_d <= settings.tolerance * scale_d && res_p <= settings.tolerance * scale_p &&
        comp <= settings.tolerance * scale_c) {
      sol.s = s;
      sol.y_g = y_g;
      sol.y_c = y_c;
      sol.z_s = z_s;
      sol.iterations = it;
      return sol;
    }

    const VectorXd d_g = y_g.cwiseQuotient(t_g);
    const VectorXd d_c = y_c.cwiseQuotient(t_c);
    const VectorXd d_s = z_s.cwiseQuotient(s);
    const VectorXd d_sum = d_c + d_s;
    const VectorXd d_tilde = d_c.cwiseProduct(d_s).cwiseQuotient(d_sum);

    Eigen::MatrixXd k = qp.H;
    k += Eigen::MatrixXd(gt * d_g.asDiagonal() * qp.G);
    if (mc > 0) {
      const Eigen::MatrixXd cs = d_tilde.cwiseSqrt().asDiagonal() * qp.C;
      k.selfadjointView<Eigen::Lower>().rankUpdate(cs.transpose());
      k.triangularView<Eigen::StrictlyUpper>() = k.transpose();
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) throw QpSubproblemFailure("QP Newton matrix is not positive definite");

    struct Dir {
      VectorXd v, t_g, y_g, s, t_c, y_c, z_s;
    };
    // Newton direction for complementarity residuals r_cg, r_cc, r_cs.
    auto direction = [&](const VectorXd& r_cg, const VectorXd& r_cc, const VectorXd& r_cs) {
      Dir d;
      const VectorXd q = -r_s - r_cc.cwiseQuotient(t_c) - r_cs.cwiseQuotient(s) - d_c.cwiseProduct(r_pc);
      const VectorXd rhs = -r_v - gt * (r_cg.cwiseQuotient(t_g) + d_g.cwiseProduct(r_pg)) -
                           ct * (r_cc.cwiseQuotient(t_c) + d_c.cwiseProduct(r_pc) +
                                 d_c.cwiseProduct(q.cwiseQuotient(d_sum)));
      d.v = llt.solve(rhs);
      const VectorXd cdv = qp.C * d.v;
      d.s = (q - d_c.cwiseProduct(cdv)).cwiseQuotient(d_sum);
      d.t_g = qp.G * d.v + r_pg;
      d.y_g = -r_cg.cwiseQuotient(t_g) - d_g.cwiseProduct(d.t_g);
      d.t_c = cdv + d.s + r_pc;
      d.y_c = -r_cc.cwiseQuotient(t_c) - d_c.cwiseProduct(d.t_c);
      d.z_s = -r_cs.cwiseQuotient(s) - d_s.cwiseProduct(d.s);
      return d;
    };
    auto step_length = [&](const Dir& d) {
      double a = detail::max_step(t_g, d.t_g);
      a = std::min(a, detail::max_step(y_g, d.y_g));
      a = std::min(a, detail::max_step(t_c, d.t_c));
      a = std::min(a, detail::max_step(y_c, d.y_c));
      a = std::min(a, detail::max_step(s, d.s));
      a = std::min(a, detail::max_step(z_s, d.z_s));
      return a;
    };

    const VectorXd cg0 = t_g.cwiseProduct(y_g);
    const VectorXd cc0 = t_c.cwiseProduct(y_c);
    const VectorXd cs0 = s.cwiseProduct(z_s);
    const Dir aff = direction(cg0, cc0, cs0);
    const double a_aff = step_length(aff);
    const double mu_aff = ((t_g + a_aff * aff.t_g).dot(y_g + a_aff * aff.y_g) +
                           (t_c + a_aff * aff.t_c).dot(y_c + a_aff * aff.y_c) +
                           (s + a_aff * aff.s).dot(z_s + a_aff * aff.z_s)) /
                          m;
    const double sigma = std::pow(mu_aff / mu, 3);
    const double target = sigma * mu;
    const Dir d = direction((cg0 + aff.t_g.cwiseProduct(aff.y_g)).array() - target,
                            (cc0 + aff.t_c.cwiseProduct(aff.y_c)).array() - target,
                            (cs0 + aff.s.cwiseProduct(aff.z_s)).array() - target);
    const double a = std::min(1.0, settings.step_fraction * step_length(d));

    sol.v += a * d.v;
    t_g += a * d.t_g;
    y_g += a * d.y_g;
    s += a * d.s;
    t_c += a * d.t_c;
    y_c += a * d.y_c;
    z_s += a * d.z_s;
    if (!sol.v.allFinite()) throw QpSubproblemFailure("QP iterate is not finite");
  }
  throw QpSubproblemFailure("QP interior-point iteration limit reached");
}

}  // namespace pmpc
