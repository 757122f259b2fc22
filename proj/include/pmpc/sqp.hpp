#pragma once

// Gauss-Newton SQP for the transcribed OCP. Each QP is condensed: swing forces are pinned,
// interaction wrenches are eliminated through the linearized phi_ddot = 0 rows, and states through
// the linearized dynamics, leaving the stance forces as the only QP variables.

#include <chrono>
#include <cmath>
#include <vector>

#include "pmpc/kkt.hpp"
#include "pmpc/ocp.hpp"
#include "pmpc/qp_solver.hpp"

namespace pmpc {

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleFallback };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max-iterations";
    case SolveStatus::kInfeasibleFallback:
      return "infeasible-fallback";
  }
  return "unknown";
}

struct SqpSettings {
  int max_iterations = 10;
  KktTolerances tolerances;
  double armijo = 1e-4;
  double min_step = 1.0 / 64.0;
  double merit_noise = 1e-11;  // relative slack in the Armijo test
  QpSettings qp;
  double slack_zero = 1e-8;  // slacks below this count as unused
};

struct SlackUsage {
  double total = 0.0;  // sum of slacks above the zero threshold
  double max = 0.0;
  int active = 0;
};

struct SolveResult {
  Trajectory trajectory;
  Multipliers multipliers;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iterations = 0;
  KktResiduals kkt;
  double cost = 0.0;
  SlackUsage slack;
  double solve_ms = 0.0;
};

namespace detail {

/// Positions (within u) of stance and swing force components at step k.
struct StageInputSplit {
  std::vector<int> stance;
  std::vector<int> swing;
};

inline StageInputSplit split_inputs(const OcpProblem& p, int k) {
  StageInputSplit s;
  for (int r = 0; r < p.dims.n_robots; ++r) {
    for (int f = 0; f < kNumFeet; ++f) {
      for (int a = 0; a < 3; ++a) {
        (p.stance(k, r, f) ? s.stance : s.swing).push_back(grf_index(p, r, f, a));
      }
    }
  }
  return s;
}

struct CondensedStage {
  MatrixXd X;    // d x_k / d v
  VectorXd xi;   // x_k offset
  MatrixXd L;    // d lambda_k / d v
  VectorXd ell;  // lambda_k offset
  VectorXd s;    // u_k offset (swing pins)
  Eigen::PartialPivLU<MatrixXd> dl_lu;
};

struct Condensed {
  std::vector<StageInputSplit> split;
  std::vector<int> v_offset;
  int nv = 0;
  std::vector<CondensedStage> stages;  // N + 1 entries; L, ell, s unused at N
  DenseQp qp;
};

inline Condensed condense(const OcpProblem& p, const Trajectory& t, const NlpLinearization& lin) {
  const auto& d = p.dims;
  const int n = p.horizon();
  Condensed c;
  for (int k = 0; k < n; ++k) {
    c.split.push_back(split_inputs(p, k));
    c.v_offset.push_back(c.nv);
    c.nv += static_cast<int>(c.split[k].stance.size());
  }
  const int nv = c.nv;
  c.stages.resize(n + 1);
  c.stages[0].X = MatrixXd::Zero(d.nx, nv);
  c.stages[0].xi = p.x_measured - t.x[0];

  for (int k = 0; k < n; ++k) {
    const auto& sl = lin.stages[k];
    auto& st = c.stages[k];
    const auto& sp = c.split[k];
    const int vo = c.v_offset[k];
    const int ns = static_cast<int>(sp.stance.size());

    st.s = VectorXd::Zero(d.nu);
    for (int i : sp.swing) st.s(i) = -t.w[k](i);

    MatrixXd bu_s(d.nx, ns);
    for (int j = 0; j < ns; ++j) bu_s.col(j) = sl.B.col(sp.stance[j]);
    const MatrixXd bu = sl.B.leftCols(d.nu);

    auto& nx_st = c.stages[k + 1];
    nx_st.X = sl.A * st.X;
    nx_st.X.middleCols(vo, ns) += bu_s;
    nx_st.xi = sl.A * st.xi + bu * st.s + (sl.x_next - t.x[k + 1]);

    if (d.nl > 0) {
      const MatrixXd bl = sl.B.rightCols(d.nl);
      const MatrixXd du = sl.Dw.leftCols(d.nu);
      st.dl_lu.compute(sl.Dw.rightCols(d.nl));
      MatrixXd du_s(d.nl, ns);
      for (int j = 0; j < ns; ++j) du_s.col(j) = du.col(sp.stance[j]);
      MatrixXd rhs = sl.Dx * st.X;
      rhs.middleCols(vo, ns) += du_s;
      st.L = -st.dl_lu.solve(rhs);
      st.ell = -st.dl_lu.solve(sl.Dx * st.xi + du * st.s + sl.phidd);
      nx_st.X += bl * st.L;
      nx_st.xi += bl * st.ell;
    } else {
      st.L = MatrixXd::Zero(0, nv);
      st.ell = VectorXd::Zero(0);
    }
  }

  // Objective.
  const double sc = 2.0 * p.settings.cost_scale;
  const VectorXd q = state_weight_diag(p);
  const VectorXd r = input_weight_diag(p);
  DenseQp& qp = c.qp;
  qp.H = MatrixXd::Zero(nv, nv);
  qp.g = VectorXd::Zero(nv);
  for (int k = 0; k <= n; ++k) {
    const auto& st = c.stages[k];
    const VectorXd qk = (k == n ? p.weights.terminal_factor : 1.0) * sc * q;
    const MatrixXd qx = qk.asDiagonal() * st.X;
    qp.H.noalias() += st.X.transpose() * qx;
    qp.g.noalias() += qx.transpose() * (t.x[k] + st.xi - p.refs[k]);
    if (k == n) break;
    const int vo = c.v_offset[k];
    for (size_t j = 0; j < c.split[k].stance.size(); ++j) {
      const int i = c.split[k].stance[j];
      qp.H(vo + j, vo + j) += sc * r(i);
      qp.g(vo + j) += sc * r(i) * t.w[k](i);
    }
    if (d.nl > 0) {
      const VectorXd rl = sc * r.tail(d.nl);
      const MatrixXd rlx = rl.asDiagonal() * st.L;
      qp.H.noalias() += st.L.transpose() * rlx;
      qp.g.noalias() += rlx.transpose() * (t.w[k].tail(d.nl) + st.ell);
    }
  }

  // Friction pyramid rows on the stance forces.
  const auto prows = pyramid_rows(p);
  std::vector<Eigen::Triplet<double>> trip;
  qp.g_lo.resize(prows.size());
  for (size_t i = 0; i < prows.size(); ++i) {
    const auto& pr = prows[i];
    const auto& stance = c.split[pr.step].stance;
    const int base = grf_index(p, pr.robot, pr.foot, 0);
    const Vector3d f = t.w[pr.step].segment<3>(base);
    for (int a = 0; a < 3; ++a) {
      if (pr.a(a) == 0.0) continue;
      const auto pos = std::find(stance.begin(), stance.end(), base + a) - stance.begin();
      trip.emplace_back(static_cast<int>(i), c.v_offset[pr.step] + static_cast<int>(pos), pr.a(a));
    }
    qp.g_lo(i) = pr.lower - pr.a.dot(f);
  }
  qp.G.resize(static_cast<int>(prows.size()), nv);
  qp.G.setFromTriplets(trip.begin(), trip.end());

  // HOCBF rows.
  const auto hrows = hocbf_rows(p);
  const int n_obs = static_cast<int>(p.obstacles.size());
  qp.C = MatrixXd::Zero(hrows.size(), nv);
  qp.c_lo = VectorXd::Zero(hrows.size());
  qp.slack_cost = VectorXd::Constant(hrows.size(), p.settings.cost_scale * p.settings.slack_weight);
  for (size_t j = 0; j < hrows.size(); ++j) {
    const auto& hr = hrows[j];
    const int col = hr.pair.body * n_obs + hr.pair.obstacle;
    const int row = 12 * hr.pair.body;
    double value = 0.0;
    for (size_t m = 0; m < hr.coeffs.size(); ++m) {
      const int node = hr.step + static_cast<int>(m);
      const Eigen::Vector2d gr = hr.coeffs[m] * lin.barrier_grad[node][col];
      const auto& st = c.stages[node];
      qp.C.row(j) += gr.transpose() * st.X.middleRows(row, 2);
      value += hr.coeffs[m] * lin.barrier_value[node][col] + gr.dot(st.xi.segment<2>(row));
    }
    qp.c_lo(j) = -value;
  }
  return c;
}

/// Full-space step recovered from the condensed QP solution; the slack block holds the new slacks.
inline Trajectory expand_step(const OcpProblem& p, const Condensed& c, const QpSolution& sol) {
  const auto& d = p.dims;
  Trajectory step;
  for (int k = 0; k <= p.horizon(); ++k) {
    step.x.push_back(c.stages[k].X * sol.v + c.stages[k].xi);
    if (k == p.horizon()) break;
    VectorXd w(d.nw);
    w.head(d.nu) = c.stages[k].s;
    const auto& stance = c.split[k].stance;
    for (size_t j = 0; j < stance.size(); ++j) w(stance[j]) = sol.v(c.v_offset[k] + j);
    if (d.nl > 0) w.tail(d.nl) = c.stages[k].L * sol.v + c.stages[k].ell;
    step.w.push_back(w);
  }
  step.slack = sol.s;
  return step;
}

/// NLP multipliers implied by the QP solution, via a backward sweep over the stage structure.
inline Multipliers recover_multipliers(const OcpProblem& p, const NlpLinearization& lin, const Condensed& c,
                                       const QpSolution& sol, const VectorXd& grad_f) {
  const auto& d = p.dims;
  const int n = p.horizon();
  const auto hrows = hocbf_rows(p);
  const int n_obs = static_cast<int>(p.obstacles.size());

  // HOCBF contributions to the state gradients, per node.
  std::vector<VectorXd> hx(n + 1, VectorXd::Zero(d.nx));
  for (size_t j = 0; j < hrows.size(); ++j) {
    const auto& hr = hrows[j];
    for (size_t m = 0; m < hr.coeffs.size(); ++m) {
      const int node = hr.step + static_cast<int>(m);
      hx[node].segment<2>(12 * hr.pair.body) +=
          sol.y_c(j) * hr.coeffs[m] * lin.barrier_grad[node][hr.pair.body * n_obs + hr.pair.obstacle];
    }
  }

  std::vector<VectorXd> y(n), eta(n), zeta(n);
  VectorXd y_next = hx[n] - grad_f.segment(p.x_offset(n), d.nx);
  for (int k = n - 1; k >= 0; --k) {
    const auto& sl = lin.stages[k];
    y[k] = y_next;
    const VectorXd gw = grad_f.segment(p.w_offset(k), d.nw);
    if (d.nl > 0) {
      const VectorXd rhs = gw.tail(d.nl) - sl.B.rightCols(d.nl).transpose() * y[k];
      eta[k] = c.stages[k].dl_lu.transpose().solve(rhs);
    } else {
      eta[k] = VectorXd::Zero(0);
    }
    const VectorXd gu = gw.head(d.nu) - sl.B.leftCols(d.nu).transpose() * y[k] - sl.Dw.leftCols(d.nu).transpose() * eta[k];
    zeta[k].resize(c.split[k].swing.size());
    for (size_t j = 0; j < c.split[k].swing.size(); ++j) zeta[k](j) = gu(c.split[k].swing[j]);
    const VectorXd gx = grad_f.segment(p.x_offset(k), d.nx);
    const VectorXd back = sl.A.transpose() * y[k] + sl.Dx.transpose() * eta[k] + hx[k];
    y_next = k > 0 ? VectorXd(back - gx) : VectorXd(gx - back);
  }

  Multipliers mult;
  mult.eq.resize(p.num_eq());
  int row = 0;
  mult.eq.segment(row, d.nx) = y_next;
  row += d.nx;
  for (int k = 0; k < n; ++k) {
    mult.eq.segment(row, d.nx) = y[k];
    row += d.nx;
    mult.eq.segment(row, d.nl) = eta[k];
    row += d.nl;
  }
  for (int k = 0; k < n; ++k) {
    mult.eq.segment(row, zeta[k].size()) = zeta[k];
    row += static_cast<int>(zeta[k].size());
  }
  mult.ineq.resize(p.num_ineq());
  mult.ineq << sol.y_g, sol.y_c, sol.z_s;
  return mult;
}

/// l1 violation of the nonlinear rows (dynamics, phi_ddot, HOCBF). Pins, swing rows, friction
/// pyramids and slack bounds are linear and hold at every iterate once they hold at the first.
inline double constraint_violation_l1(const OcpProblem& p, const NlpValues& v) {
  double s = v.eq.head(p.num_dynamic_eq()).lpNorm<1>();
  const auto h = v.ineq.segment(p.num_pyramid_rows(), p.num_hocbf_rows());
  for (Eigen::Index i = 0; i < h.size(); ++i) s += std::max(0.0, -h(i));
  return s;
}

inline double nonlinear_multiplier_bound(const OcpProblem& p, const Multipliers& m) {
  return std::max(inf_norm(m.eq.head(p.num_dynamic_eq())),
                  inf_norm(m.ineq.segment(p.num_pyramid_rows(), p.num_hocbf_rows())));
}

inline Trajectory add_step(const Trajectory& t, const Trajectory& step, double alpha) {
  Trajectory out = t;
  for (size_t k = 0; k < t.x.size(); ++k) out.x[k] += alpha * step.x[k];
  for (size_t k = 0; k < t.w.size(); ++k) out.w[k] += alpha * step.w[k];
  out.slack = t.slack + alpha * (step.slack - t.slack);
  return out;
}

}  // namespace detail

inline SlackUsage slack_usage(const VectorXd& slack, double zero) {
  SlackUsage u;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (slack(i) > zero) {
      u.total += slack(i);
      ++u.active;
    }
    u.max = std::max(u.max, slack(i));
  }
  return u;
}

/// Cold-start guess: every state at the measurement, inputs holding the configuration statically.
inline Trajectory initial_guess(const OcpProblem& p) {
  Trajectory t;
  const auto& d = p.dims;
  for (int k = 0; k <= p.horizon(); ++k) t.x.push_back(p.x_measured);
  for (int k = 0; k < p.horizon(); ++k) {
    VectorXd w = VectorXd::Zero(d.nw);
    if (d.mode == OcpMode::kCoupled) {
      const SupportInputs s = static_support(p.model, GlobalState(p.x_measured), p.schedules[0].stance[k],
                                             p.schedules[1].stance[k]);
      w << s.u1, s.u2, s.l1, s.l2;
    } else {
      const StanceFlags& st = p.schedules[0].stance[k];
      const int n_st = static_cast<int>(std::count(st.begin(), st.end(), true));
      for (int f = 0; f < kNumFeet; ++f) {
        if (st[f] && n_st > 0) w(3 * f + 2) = p.model.robots[0].mass * p.model.gravity / n_st;
      }
    }
    t.w.push_back(w);
  }
  t.slack = VectorXd::Zero(p.num_hocbf_rows());
  return t;
}

/// Runs SQP iterations from `guess`. With valid multipliers in `guess_mult` the first KKT test is
/// done before any QP, so an already optimal guess returns without iterating.
inline SolveResult solve_ocp(const OcpProblem& p, const Trajectory& guess, const Multipliers& guess_mult = {},
                             const SqpSettings& settings = {}) {
  const auto start = std::chrono::steady_clock::now();
  SolveResult res;
  Trajectory t = guess;
  if (t.slack.size() != p.num_hocbf_rows()) t.slack = VectorXd::Zero(p.num_hocbf_rows());
  Multipliers mult = guess_mult;
  if (mult.eq.size() != p.num_eq() || mult.ineq.size() != p.num_ineq()) mult = {};
  double penalty = 0.0;

  NlpValues values = evaluate_nlp(p, t);
  for (int it = 0;; ++it) {
    const NlpLinearization lin = linearize_nlp(p, t);
    const VectorXd grad = cost_gradient(p, t);
    if (mult.valid()) {
      res.kkt = kkt_residuals(grad, values, assemble_jacobian(p, lin), mult);
      if (res.kkt.satisfied(settings.tolerances)) {
        res.status = SolveStatus::kConverged;
        res.iterations = it;
        break;
      }
    }
    if (it >= settings.max_iterations) {
      res.status = SolveStatus::kMaxIterations;
      res.iterations = it;
      break;
    }

    const detail::Condensed cond = detail::condense(p, t, lin);
    const QpSolution qs = solve_qp(cond.qp, settings.qp);
    const Trajectory step = detail::expand_step(p, cond, qs);
    const Trajectory full = detail::add_step(t, step, 1.0);
    mult = detail::recover_multipliers(p, lin, cond, qs, cost_gradient(p, full));

    // l1 exact-penalty line search.
    penalty = std::max(penalty, 1.5 * detail::nonlinear_multiplier_bound(p, mult));
    const double viol0 = detail::constraint_violation_l1(p, values);
    const double merit0 = values.cost + penalty * viol0;
    VectorXd dz = step.flatten(p);
    dz.tail(p.num_hocbf_rows()) -= t.slack;
    const double slope = grad.dot(dz) - penalty * viol0;
    double alpha = 1.0;
    Trajectory trial;
    NlpValues trial_values;
    while (true) {
      trial = detail::add_step(t, step, alpha);
      trial_values = evaluate_nlp(p, trial);
      const double merit = trial_values.cost + penalty * detail::constraint_violation_l1(p, trial_values);
      // Near a solution the predicted decrease drops below rounding noise in the merit.
      const double noise = settings.merit_noise * (1.0 + std::abs(merit0));
      if (merit <= merit0 + settings.armijo * alpha * std::min(slope, 0.0) + noise || alpha <= settings.min_step) break;
      alpha *= 0.5;
    }
    t = std::move(trial);
    values = std::move(trial_values);
  }

  res.trajectory = t;
  res.multipliers = mult;
  res.cost = values.cost;
  res.slack = slack_usage(t.slack, settings.slack_zero);
  res.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace pmpc
