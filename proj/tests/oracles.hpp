#pragma once

// Independent reference computations shared by the unit tests and the acceptance binary.

#include <random>
#include <vector>

#include "pmpc/defaults.hpp"
#include "pmpc/hocbf.hpp"
#include "pmpc/kkt.hpp"
#include "pmpc/sqp.hpp"

namespace pmpc::oracle {

inline std::vector<Obstacle> six_obstacles() {
  std::vector<Obstacle> obs;
  for (int i = 0; i < 6; ++i) obs.push_back({Eigen::Vector2d(3.0 + i, i % 2 ? 0.8 : -0.8), i});
  return obs;
}

inline std::vector<VectorXd> walking_refs(const VectorXd& x0, int n, double ts, double vx) {
  std::vector<VectorXd> refs;
  for (int k = 0; k <= n; ++k) {
    VectorXd r = x0;
    for (int b = 0; b < x0.size() / 12; ++b) {
      r(12 * b) += vx * k * ts;
      r(12 * b + idx::kVel) = vx;
    }
    refs.push_back(r);
  }
  return refs;
}

inline OcpProblem coupled_problem(const std::vector<Obstacle>& obs, const OcpSettings& s = {},
                                  const OcpWeights& w = {}, double vx = 0.3) {
  const SystemModel m = default_system_model();
  const GlobalState x0 = formation_state(m, Eigen::Vector2d::Zero(), 0.0);
  const int n = s.horizon;
  std::vector<ContactSchedule> sch(2, trot_schedule(0.0, n, s.ts, GaitParams{}, m.feet));
  return build_ocp(x0, walking_refs(x0, n, s.ts, vx), sch, obs, w, HocbfParams{}, m, s, OcpMode::kCoupled);
}

/// Random primal iterate around the cold-start guess: perturbed states, forces and slacks.
inline Trajectory random_iterate(const OcpProblem& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Trajectory t = initial_guess(p);
  for (auto& x : t.x) {
    for (int b = 0; b < p.dims.n_bodies; ++b) {
      for (int j = 0; j < 12; ++j) {
        const double scale = j < 3 ? 0.3 : j < 6 ? 0.15 : j < 9 ? 0.5 : 0.8;
        x(12 * b + j) += scale * n(rng);
      }
    }
  }
  for (auto& w : t.w) w += 10.0 * VectorXd::NullaryExpr(w.size(), [&] { return n(rng); });
  t.slack = VectorXd::NullaryExpr(p.num_hocbf_rows(), [&] { return std::abs(n(rng)); });
  return t;
}

/// Worst row-scaled difference between the assembled constraint Jacobian and central differences
/// of the plain constraint evaluation.
inline double nlp_jacobian_error(const OcpProblem& p, const Trajectory& t) {
  const NlpJacobian jac = nlp_jacobian(p, t);
  MatrixXd analytic(p.num_constraints(), p.num_variables());
  analytic << MatrixXd(jac.eq), MatrixXd(jac.ineq);
  const MatrixXd fd = finite_difference_jacobian(
      [&](const VectorXd& z) -> VectorXd {
        const NlpValues v = evaluate_nlp(p, Trajectory::unflatten(p, z));
        VectorXd c(v.eq.size() + v.ineq.size());
        c << v.eq, v.ineq;
        return c;
      },
      t.flatten(p));
  double worst = 0.0;
  for (Eigen::Index r = 0; r < fd.rows(); ++r) {
    const double err =
        (analytic.row(r) - fd.row(r)).cwiseAbs().maxCoeff() / std::max(1.0, fd.row(r).cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
  }
  return worst;
}

/// Single robot, no cone, no obstacles: an equality-constrained least-squares tracking problem.
inline OcpProblem lq_single_robot_problem() {
  const SystemModel m = default_system_model();
  OcpSettings s;
  s.friction_cone = false;
  s.safety = false;
  Vector12d x0 = formation_state(m, Eigen::Vector2d::Zero(), 0.0).head<12>();
  const Vector12d ref = x0;
  x0(2) -= 0.02;
  x0(idx::kEuler) += 0.03;
  x0(idx::kVel) = 0.1;
  const std::vector<VectorXd> refs(s.horizon + 1, VectorXd(ref));
  const std::vector<ContactSchedule> sch{trot_schedule(0.0, s.horizon, s.ts, GaitParams{}, m.feet)};
  return build_ocp(x0, refs, sch, {}, {}, {}, m, s, OcpMode::kSingleRobot);
}

inline SqpSettings tight_sqp() {
  SqpSettings s;
  s.max_iterations = 30;
  s.tolerances.stationarity = 1e-10;
  s.tolerances.equality = 1e-12;
  return s;
}

/// Full-space Gauss-Newton on the equality-constrained NLP with finite-difference Jacobians and a
/// dense LU of the KKT matrix.
inline VectorXd dense_newton_oracle(const OcpProblem& p, VectorXd z) {
  const VectorXd h = cost_hessian_diag(p);
  for (int it = 0; it < 30; ++it) {
    const Trajectory t = Trajectory::unflatten(p, z);
    const NlpValues v = evaluate_nlp(p, t);
    const MatrixXd j = finite_difference_jacobian(
        [&](const VectorXd& q) -> VectorXd { return evaluate_nlp(p, Trajectory::unflatten(p, q)).eq; }, z);
    const int nv = static_cast<int>(z.size()), m = static_cast<int>(j.rows());
    MatrixXd kkt = MatrixXd::Zero(nv + m, nv + m);
    kkt.topLeftCorner(nv, nv) = h.asDiagonal();
    kkt.topRightCorner(nv, m) = j.transpose();
    kkt.bottomLeftCorner(m, nv) = j;
    VectorXd rhs(nv + m);
    rhs << -cost_gradient(p, t), -v.eq;
    const VectorXd sol = kkt.fullPivLu().solve(rhs);
    z += sol.head(nv);
    if (sol.head(nv).lpNorm<Eigen::Infinity>() < 1e-13 * (1.0 + z.lpNorm<Eigen::Infinity>())) break;
  }
  return z;
}

/// Largest |a_i - b_i| / max(1, |b_i|).
inline double relative_gap(const VectorXd& a, const VectorXd& b) {
  return (a - b).cwiseAbs().cwiseQuotient(b.cwiseAbs().cwiseMax(1.0)).maxCoeff();
}

}  // namespace pmpc::oracle
