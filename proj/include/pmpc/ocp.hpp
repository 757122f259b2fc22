#pragma once

// Multiple-shooting transcription of the DAE-constrained optimal control problem: stacked SRB
// states, stance forces and interaction wrenches, with dynamics defects, phi_ddot = 0 rows,
// HOCBF rows (softened by exact-penalty slacks) and friction-pyramid rows.

#include <array>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "pmpc/autodiff.hpp"
#include "pmpc/coupling.hpp"
#include "pmpc/errors.hpp"
#include "pmpc/hocbf.hpp"
#include "pmpc/srb_model.hpp"

namespace pmpc {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SparseMatrixd = Eigen::SparseMatrix<double>;

/// Diagonal weights. Entries of `state` are (p, theta, p_dot, omega) for one SRB and are shared
/// by all three bodies; the terminal weight is terminal_factor * state.
struct OcpWeights {
  Vector12d state = (Vector12d() << 1e7, 1e7, 16e7, 1e7, 1e7, 1e7, 1e6, 1e6, 1e6, 1e5, 1e5, 1e5).finished();
  double terminal_factor = 10.0;
  double grf = 20.0;
  Vector5d wrench = (Vector5d() << 5e1, 5e1, 5e1, 5e2, 5e2).finished();

  void validate() const {
    if (state.minCoeff() <= 0.0 || terminal_factor <= 0.0 || grf <= 0.0 || wrench.minCoeff() <= 0.0) {
      throw ConfigError("all cost weights must be positive");
    }
  }
};

struct OcpSettings {
  int horizon = 8;
  double ts = 0.01667;
  double friction = 0.6;
  double fz_max = 250.0;
  double slack_weight = 1e10;
  // Uniform objective scaling; leaves the minimizer unchanged and brings the scaled gradient to O(1).
  double cost_scale = 1e-6;
  bool safety = true;
  // Adds psi_1 >= 0 on (x_0, x_1). Under a zero-order hold the first predicted position already
  // depends on u_0, so this row is enforceable and keeps psi_1 nonnegative across re-plans.
  bool initial_psi1 = true;
  // The OCP enforces its HOCBF rows on h - barrier_margin, a tightening that absorbs plant-model
  // mismatch while the prediction rides the boundary. Logged barriers are untouched.
  double barrier_margin = 1e-3;
  bool friction_cone = true;
};

/// Which subsystems are present. The full problem has two robots coupled to a payload; the
/// single-robot mode drops the payload and both edges.
enum class OcpMode { kCoupled, kSingleRobot };

struct OcpDims {
  OcpMode mode = OcpMode::kCoupled;
  int n_robots = 2;
  int n_bodies = 3;
  int n_edges = 2;
  int nx = 36;
  int nu = 24;
  int nl = 10;
  int nw = 34;

  static OcpDims make(OcpMode mode) {
    OcpDims d;
    d.mode = mode;
    if (mode == OcpMode::kSingleRobot) {
      d.n_robots = 1;
      d.n_bodies = 1;
      d.n_edges = 0;
    }
    d.nx = 12 * d.n_bodies;
    d.nu = 12 * d.n_robots;
    d.nl = 5 * d.n_edges;
    d.nw = d.nu + d.nl;
    return d;
  }
};

struct OcpProblem {
  OcpDims dims;
  SystemModel model;
  OcpSettings settings;
  OcpWeights weights;
  HocbfParams hocbf;
  std::vector<Obstacle> obstacles;
  std::vector<ContactSchedule> schedules;  // one per robot, horizon + 1 entries each
  VectorXd x_measured;
  std::vector<VectorXd> refs;  // horizon + 1 global reference states

  int horizon() const { return settings.horizon; }
  int stage_size() const { return dims.nx + dims.nw; }
  /// Decision variables excluding HOCBF slacks: nx (N+1) + nw N.
  int num_primary_variables() const { return dims.nx * (horizon() + 1) + dims.nw * horizon(); }
  int num_hocbf_rows() const {
    if (!settings.safety) return 0;
    return dims.n_bodies * static_cast<int>(obstacles.size()) * (horizon() + (settings.initial_psi1 ? 1 : 0));
  }
  int num_variables() const { return num_primary_variables() + num_hocbf_rows(); }

  int x_offset(int k) const { return k * stage_size(); }
  int w_offset(int k) const { return k * stage_size() + dims.nx; }
  int slack_offset() const { return num_primary_variables(); }

  bool stance(int k, int robot, int foot) const { return schedules[robot].stance[k][foot]; }

  /// Number of stance and swing feet summed over robots at step k.
  int stance_feet(int k) const {
    int n = 0;
    for (int r = 0; r < dims.n_robots; ++r) {
      for (int f = 0; f < kNumFeet; ++f) n += stance(k, r, f) ? 1 : 0;
    }
    return n;
  }

  // Row counts.
  int num_dynamic_eq() const { return dims.nx + horizon() * (dims.nx + dims.nl); }
  int num_swing_rows() const {
    int n = 0;
    for (int k = 0; k < horizon(); ++k) n += 3 * (kNumFeet * dims.n_robots - stance_feet(k));
    return n;
  }
  int num_pyramid_rows() const {
    if (!settings.friction_cone) return 0;
    int n = 0;
    for (int k = 0; k < horizon(); ++k) n += 6 * stance_feet(k);
    return n;
  }
  int num_eq() const { return num_dynamic_eq() + num_swing_rows(); }
  int num_ineq() const { return num_pyramid_rows() + 2 * num_hocbf_rows(); }
  /// Rows defining the admissible input set: friction pyramid plus swing-foot pins.
  int num_input_rows() const { return num_pyramid_rows() + num_swing_rows(); }
  int num_constraints() const { return num_eq() + num_ineq(); }
};

/// Stage-structured primal iterate. x has N+1 entries, w has N: w = (u_1, .., u_R, lambda_1, ..).
struct Trajectory {
  std::vector<VectorXd> x;
  std::vector<VectorXd> w;
  VectorXd slack;

  VectorXd flatten(const OcpProblem& p) const {
    VectorXd z(p.num_variables());
    for (int k = 0; k < p.horizon(); ++k) {
      z.segment(p.x_offset(k), p.dims.nx) = x[k];
      z.segment(p.w_offset(k), p.dims.nw) = w[k];
    }
    z.segment(p.x_offset(p.horizon()), p.dims.nx) = x[p.horizon()];
    z.tail(p.num_hocbf_rows()) = slack;
    return z;
  }

  static Trajectory unflatten(const OcpProblem& p, const VectorXd& z) {
    Trajectory t;
    for (int k = 0; k < p.horizon(); ++k) {
      t.x.push_back(z.segment(p.x_offset(k), p.dims.nx));
      t.w.push_back(z.segment(p.w_offset(k), p.dims.nw));
    }
    t.x.push_back(z.segment(p.x_offset(p.horizon()), p.dims.nx));
    t.slack = z.tail(p.num_hocbf_rows());
    return t;
  }
};

/// Lagrange multipliers in NLP row order (equalities, then inequalities).
struct Multipliers {
  VectorXd eq;
  VectorXd ineq;
  bool valid() const { return eq.size() > 0 || ineq.size() > 0; }
};

OcpProblem build_ocp(const VectorXd& x_measured, const std::vector<VectorXd>& refs,
                     const std::vector<ContactSchedule>& schedules, const std::vector<Obstacle>& obstacles,
                     const OcpWeights& weights, const HocbfParams& hocbf, const SystemModel& model,
                     const OcpSettings& settings, OcpMode mode = OcpMode::kCoupled);

// ---------------------------------------------------------------------------------------------
// Stage functions.

namespace detail {

inline int u_index(const OcpDims& d, int robot) { return d.nx + 12 * robot; }
inline int l_index(const OcpDims& d, int edge) { return d.nx + d.nu + 5 * edge; }

/// Index of the rows in the stage vector z = (x, w) that body b's net wrench depends on.
inline std::vector<int> wrench_inputs(const OcpDims& d, int body) {
  std::vector<int> cols;
  auto add = [&](int start, int n) {
    for (int i = 0; i < n; ++i) cols.push_back(start + i);
  };
  if (d.mode == OcpMode::kSingleRobot) {
    add(0, 12);
    add(u_index(d, 0), 12);
    return cols;
  }
  if (body < kNumRobots) {
    add(12 * body, 12);
    add(24, 12);
    add(u_index(d, body), 12);
    add(l_index(d, body), 5);
  } else {
    add(24, 12);
    add(l_index(d, 0), 10);
  }
  return cols;
}

template <typename S>
Vec6<S> body_wrench(const OcpProblem& p, int k, int body, const Eigen::Matrix<S, Eigen::Dynamic, 1>& in) {
  const auto& d = p.dims;
  if (d.mode == OcpMode::kSingleRobot) {
    return grf_wrench<S>(Vec12<S>(in.template segment<12>(0)), Vec12<S>(in.template segment<12>(12)),
                         p.schedules[0].stance[k], p.model.feet);
  }
  if (body < kNumRobots) {
    const Vec12<S> xi = in.template segment<12>(0);
    const Vec12<S> xl = in.template segment<12>(12);
    const Vec12<S> u = in.template segment<12>(24);
    const Vec5<S> l = in.template segment<5>(36);
    return grf_wrench<S>(xi, u, p.schedules[body].stance[k], p.model.feet) +
           robot_interaction_wrench<S>(xi, xl, l, p.model.geom, body);
  }
  const Vec12<S> xl = in.template segment<12>(0);
  return payload_interaction_wrench<S>(xl, Vec5<S>(in.template segment<5>(12)), p.model.geom, 0) +
         payload_interaction_wrench<S>(xl, Vec5<S>(in.template segment<5>(17)), p.model.geom, 1);
}

inline const SrbParams& body_params(const OcpProblem& p, int body) {
  if (p.dims.mode == OcpMode::kSingleRobot || body < kNumRobots) return p.model.robots[body];
  return p.model.payload;
}

template <int N>
std::pair<Vector6d, Eigen::Matrix<double, 6, N>> wrench_jacobian(const OcpProblem& p, int k, int body,
                                                                  const Eigen::Matrix<double, N, 1>& in) {
  auto [v, j] = ad_jacobian<N>(
      [&](const auto& z) {
        using S = typename std::decay_t<decltype(z)>::Scalar;
        return body_wrench<S>(p, k, body, Eigen::Matrix<S, Eigen::Dynamic, 1>(z));
      },
      in);
  return {v, j};
}

}  // namespace detail

struct StageValues {
  VectorXd x_next;
  VectorXd phidd;
};

/// Next state (RK4 with the net wrench held at its step-start value) and phi_ddot at stage k.
inline StageValues stage_values(const OcpProblem& p, int k, const VectorXd& x, const VectorXd& w) {
  const auto& d = p.dims;
  VectorXd z(d.nx + d.nw);
  z << x, w;
  StageValues out;
  out.x_next.resize(d.nx);
  std::vector<Vector12d> xdot(d.n_bodies);
  for (int b = 0; b < d.n_bodies; ++b) {
    const auto cols = detail::wrench_inputs(d, b);
    VectorXd in(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) in(i) = z(cols[i]);
    const Vector6d wr = detail::body_wrench<double>(p, k, b, in);
    const Vector12d xb = x.segment<12>(12 * b);
    const SrbParams& prm = detail::body_params(p, b);
    out.x_next.segment<12>(12 * b) = discretize<double>(prm, xb, wr, p.settings.ts, p.model.gravity);
    xdot[b] = srb_continuous_rhs<double>(prm, xb, wr, p.model.gravity);
  }
  out.phidd.resize(d.nl);
  for (int e = 0; e < d.n_edges; ++e) {
    out.phidd.segment<5>(5 * e) = holonomic_accel<double>(x.segment<12>(12 * e), x.segment<12>(24), xdot[e],
                                                          xdot[2], p.model.geom, e);
  }
  return out;
}

struct StageLinearization {
  VectorXd x_next;
  MatrixXd A;  // d x_next / d x
  MatrixXd B;  // d x_next / d w
  VectorXd phidd;
  MatrixXd Dx;  // d phidd / d x
  MatrixXd Dw;  // d phidd / d w
};

inline StageLinearization stage_linearize(const OcpProblem& p, int k, const VectorXd& x, const VectorXd& w) {
  const auto& d = p.dims;
  const int nz = d.nx + d.nw;
  VectorXd z(nz);
  z << x, w;

  MatrixXd jn = MatrixXd::Zero(d.nx, nz);  // d x_next / d z
  std::vector<MatrixXd> jxdot(d.n_bodies);  // d xdot_b / d z
  std::vector<Vector12d> xdot(d.n_bodies);
  StageLinearization lin;
  lin.x_next.resize(d.nx);

  for (int b = 0; b < d.n_bodies; ++b) {
    const auto cols = detail::wrench_inputs(d, b);
    VectorXd in(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) in(i) = z(cols[i]);
    Vector6d wr;
    MatrixXd jw_local;
    switch (cols.size()) {
      case 24: {
        auto [v, j] = detail::wrench_jacobian<24>(p, k, b, Eigen::Matrix<double, 24, 1>(in));
        wr = v;
        jw_local = j;
        break;
      }
      case 41: {
        auto [v, j] = detail::wrench_jacobian<41>(p, k, b, Eigen::Matrix<double, 41, 1>(in));
        wr = v;
        jw_local = j;
        break;
      }
      case 22: {
        auto [v, j] = detail::wrench_jacobian<22>(p, k, b, Eigen::Matrix<double, 22, 1>(in));
        wr = v;
        jw_local = j;
        break;
      }
      default:
        throw Error("unexpected wrench input size");
    }
    MatrixXd jw = MatrixXd::Zero(6, nz);
    for (size_t i = 0; i < cols.size(); ++i) jw.col(cols[i]) += jw_local.col(i);

    const Vector12d xb = x.segment<12>(12 * b);
    const SrbParams& prm = detail::body_params(p, b);
    const auto [xn, jrk] = discretize_jacobian(prm, xb, wr, p.settings.ts, p.model.gravity);
    const auto [xd, jrhs] = rhs_jacobian(prm, xb, wr, p.model.gravity);
    lin.x_next.segment<12>(12 * b) = xn;
    jn.middleRows(12 * b, 12) = jrk.rightCols<6>() * jw;
    jn.block(12 * b, 12 * b, 12, 12) += jrk.leftCols<12>();
    xdot[b] = xd;
    jxdot[b] = jrhs.rightCols<6>() * jw;
    jxdot[b].block(0, 12 * b, 12, 12) += jrhs.leftCols<12>();
  }

  MatrixXd jp = MatrixXd::Zero(d.nl, nz);
  lin.phidd.resize(d.nl);
  for (int e = 0; e < d.n_edges; ++e) {
    Eigen::Matrix<double, 48, 1> in;
    in << x.segment<12>(12 * e), x.segment<12>(24), xdot[e], xdot[2];
    auto [v, j] = ad_jacobian<48>(
        [&](const auto& q) {
          using S = typename std::decay_t<decltype(q)>::Scalar;
          return holonomic_accel<S>(Vec12<S>(q.template segment<12>(0)), Vec12<S>(q.template segment<12>(12)),
                                    Vec12<S>(q.template segment<12>(24)), Vec12<S>(q.template segment<12>(36)),
                                    p.model.geom, e);
        },
        in);
    lin.phidd.segment<5>(5 * e) = v;
    MatrixXd je = j.middleCols(24, 12) * jxdot[e] + j.middleCols(36, 12) * jxdot[2];
    je.middleCols(12 * e, 12) += j.leftCols(12);
    je.middleCols(24, 12) += j.middleCols(12, 12);
    jp.middleRows(5 * e, 5) = je;
  }

  lin.A = jn.leftCols(d.nx);
  lin.B = jn.rightCols(d.nw);
  lin.Dx = jp.leftCols(d.nx);
  lin.Dw = jp.rightCols(d.nw);
  return lin;
}

// ---------------------------------------------------------------------------------------------
// Row bookkeeping shared by evaluation, Jacobian assembly and the solver.

/// One friction-pyramid row: a . f >= lower for the stance force f of (step, robot, foot).
struct PyramidRow {
  int step;
  int robot;
  int foot;
  Vector3d a;
  double lower;
};

inline std::vector<PyramidRow> pyramid_rows(const OcpProblem& p) {
  std::vector<PyramidRow> rows;
  if (!p.settings.friction_cone) return rows;
  const double mu = p.settings.friction;
  for (int k = 0; k < p.horizon(); ++k) {
    for (int r = 0; r < p.dims.n_robots; ++r) {
      for (int f = 0; f < kNumFeet; ++f) {
        if (!p.stance(k, r, f)) continue;
        rows.push_back({k, r, f, Vector3d(0, 0, 1), 0.0});
        rows.push_back({k, r, f, Vector3d(0, 0, -1), -p.settings.fz_max});
        rows.push_back({k, r, f, Vector3d(-1, 0, mu), 0.0});
        rows.push_back({k, r, f, Vector3d(1, 0, mu), 0.0});
        rows.push_back({k, r, f, Vector3d(0, -1, mu), 0.0});
        rows.push_back({k, r, f, Vector3d(0, 1, mu), 0.0});
      }
    }
  }
  return rows;
}

/// One swing-foot pin: u component (step, robot, foot, axis) = 0.
struct SwingRow {
  int step;
  int robot;
  int foot;
  int axis;
};

inline std::vector<SwingRow> swing_rows(const OcpProblem& p) {
  std::vector<SwingRow> rows;
  for (int k = 0; k < p.horizon(); ++k) {
    for (int r = 0; r < p.dims.n_robots; ++r) {
      for (int f = 0; f < kNumFeet; ++f) {
        if (p.stance(k, r, f)) continue;
        for (int a = 0; a < 3; ++a) rows.push_back({k, r, f, a});
      }
    }
  }
  return rows;
}

/// One HOCBF row: psi_2 over nodes (step, step+1, step+2), or psi_1 over (step, step+1) at the
/// terminal step and, optionally, at step 0. `coeffs` multiplies h at those nodes.
struct HocbfRow {
  int step;
  BarrierPair pair;
  std::vector<double> coeffs;
};

inline std::vector<HocbfRow> hocbf_rows(const OcpProblem& p) {
  std::vector<HocbfRow> rows;
  if (!p.settings.safety) return rows;
  const Eigen::Vector3d c2 = psi2_coefficients(p.hocbf);
  const int n_obs = static_cast<int>(p.obstacles.size());
  const std::vector<double> c1 = {-(1.0 - p.hocbf.alpha1_gain), 1.0};
  for (int k = 0; k < p.horizon(); ++k) {
    for (int b = 0; b < p.dims.n_bodies; ++b) {
      for (int l = 0; l < n_obs; ++l) {
        if (k + 2 <= p.horizon()) {
          rows.push_back({k, {b, l}, {c2(0), c2(1), c2(2)}});
        } else {
          rows.push_back({k, {b, l}, c1});
        }
      }
    }
  }
  if (p.settings.initial_psi1) {
    for (int b = 0; b < p.dims.n_bodies; ++b) {
      for (int l = 0; l < n_obs; ++l) rows.push_back({0, {b, l}, c1});
    }
  }
  return rows;
}

inline int grf_index(const OcpProblem& p, int robot, int foot, int axis) {
  return 12 * robot + 3 * foot + axis;
  (void)p;
}

// ---------------------------------------------------------------------------------------------
// NLP evaluation.

struct NlpValues {
  double cost = 0.0;
  VectorXd eq;
  VectorXd ineq;
};

inline VectorXd state_weight_diag(const OcpProblem& p) {
  VectorXd q(p.dims.nx);
  for (int b = 0; b < p.dims.n_bodies; ++b) q.segment<12>(12 * b) = p.weights.state;
  return q;
}

inline VectorXd input_weight_diag(const OcpProblem& p) {
  VectorXd r(p.dims.nw);
  r.head(p.dims.nu).setConstant(p.weights.grf);
  for (int e = 0; e < p.dims.n_edges; ++e) r.segment<5>(p.dims.nu + 5 * e) = p.weights.wrench;
  return r;
}

/// Scaled objective (value only).
inline double evaluate_cost(const OcpProblem& p, const Trajectory& t) {
  const VectorXd q = state_weight_diag(p);
  const VectorXd r = input_weight_diag(p);
  double j = 0.0;
  for (int k = 0; k < p.horizon(); ++k) {
    const VectorXd e = t.x[k] - p.refs[k];
    j += e.dot(q.cwiseProduct(e)) + t.w[k].dot(r.cwiseProduct(t.w[k]));
  }
  const VectorXd en = t.x[p.horizon()] - p.refs[p.horizon()];
  j += p.weights.terminal_factor * en.dot(q.cwiseProduct(en));
  j += p.settings.slack_weight * t.slack.sum();
  return p.settings.cost_scale * j;
}

inline VectorXd cost_gradient(const OcpProblem& p, const Trajectory& t) {
  const VectorXd q = state_weight_diag(p);
  const VectorXd r = input_weight_diag(p);
  const double s = p.settings.cost_scale;
  VectorXd g = VectorXd::Zero(p.num_variables());
  for (int k = 0; k < p.horizon(); ++k) {
    g.segment(p.x_offset(k), p.dims.nx) = 2.0 * s * q.cwiseProduct(t.x[k] - p.refs[k]);
    g.segment(p.w_offset(k), p.dims.nw) = 2.0 * s * r.cwiseProduct(t.w[k]);
  }
  g.segment(p.x_offset(p.horizon()), p.dims.nx) =
      2.0 * s * p.weights.terminal_factor * q.cwiseProduct(t.x[p.horizon()] - p.refs[p.horizon()]);
  g.tail(p.num_hocbf_rows()).setConstant(s * p.settings.slack_weight);
  return g;
}

/// Diagonal of the (constant) objective Hessian.
inline VectorXd cost_hessian_diag(const OcpProblem& p) {
  const VectorXd q = state_weight_diag(p);
  const VectorXd r = input_weight_diag(p);
  const double s = p.settings.cost_scale;
  VectorXd h = VectorXd::Zero(p.num_variables());
  for (int k = 0; k < p.horizon(); ++k) {
    h.segment(p.x_offset(k), p.dims.nx) = 2.0 * s * q;
    h.segment(p.w_offset(k), p.dims.nw) = 2.0 * s * r;
  }
  h.segment(p.x_offset(p.horizon()), p.dims.nx) = 2.0 * s * p.weights.terminal_factor * q;
  return h;
}

/// Barrier values at every node for every (body, obstacle) pair: h[k][b * n_obs + l].
inline std::vector<std::vector<double>> node_barriers(const OcpProblem& p, const Trajectory& t) {
  const int n_obs = static_cast<int>(p.obstacles.size());
  std::vector<std::vector<double>> h(p.horizon() + 1, std::vector<double>(p.dims.n_bodies * n_obs));
  for (int k = 0; k <= p.horizon(); ++k) {
    for (int b = 0; b < p.dims.n_bodies; ++b) {
      for (int l = 0; l < n_obs; ++l) {
        h[k][b * n_obs + l] =
            barrier<double>(t.x[k].segment<12>(12 * b), p.obstacles[l], p.hocbf) - p.settings.barrier_margin;
      }
    }
  }
  return h;
}

/// Constraint values in NLP row order. Equalities: pin, then per step (defect, phi_ddot), then swing
/// pins. Inequalities (>= 0): pyramid rows, HOCBF rows, slack bounds.
inline NlpValues evaluate_nlp(const OcpProblem& p, const Trajectory& t) {
  NlpValues v;
  v.cost = evaluate_cost(p, t);
  v.eq.resize(p.num_eq());
  int row = 0;
  v.eq.segment(row, p.dims.nx) = t.x[0] - p.x_measured;
  row += p.dims.nx;
  for (int k = 0; k < p.horizon(); ++k) {
    const StageValues sv = stage_values(p, k, t.x[k], t.w[k]);
    v.eq.segment(row, p.dims.nx) = sv.x_next - t.x[k + 1];
    row += p.dims.nx;
    v.eq.segment(row, p.dims.nl) = sv.phidd;
    row += p.dims.nl;
  }
  for (const auto& s : swing_rows(p)) {
    v.eq(row++) = t.w[s.step](grf_index(p, s.robot, s.foot, s.axis));
  }

  v.ineq.resize(p.num_ineq());
  row = 0;
  for (const auto& pr : pyramid_rows(p)) {
    const Vector3d f = t.w[pr.step].segment<3>(grf_index(p, pr.robot, pr.foot, 0));
    v.ineq(row++) = pr.a.dot(f) - pr.lower;
  }
  const auto rows = hocbf_rows(p);
  if (!rows.empty()) {
    const auto h = node_barriers(p, t);
    const int n_obs = static_cast<int>(p.obstacles.size());
    for (size_t j = 0; j < rows.size(); ++j) {
      const auto& hr = rows[j];
      double psi = 0.0;
      for (size_t m = 0; m < hr.coeffs.size(); ++m) {
        psi += hr.coeffs[m] * h[hr.step + m][hr.pair.body * n_obs + hr.pair.obstacle];
      }
      v.ineq(row++) = psi + t.slack(j);
    }
    for (size_t j = 0; j < rows.size(); ++j) v.ineq(row++) = t.slack(j);
  }
  return v;
}

struct NlpLinearization {
  std::vector<StageLinearization> stages;
  // Barrier gradients w.r.t. body xy position at each node: grad[k][b * n_obs + l].
  std::vector<std::vector<Eigen::Vector2d>> barrier_grad;
  std::vector<std::vector<double>> barrier_value;
};

inline NlpLinearization linearize_nlp(const OcpProblem& p, const Trajectory& t) {
  NlpLinearization lin;
  lin.stages.reserve(p.horizon());
  for (int k = 0; k < p.horizon(); ++k) lin.stages.push_back(stage_linearize(p, k, t.x[k], t.w[k]));
  if (p.num_hocbf_rows() > 0) {
    const int n_obs = static_cast<int>(p.obstacles.size());
    lin.barrier_value = node_barriers(p, t);
    lin.barrier_grad.assign(p.horizon() + 1, std::vector<Eigen::Vector2d>(p.dims.n_bodies * n_obs));
    for (int k = 0; k <= p.horizon(); ++k) {
      for (int b = 0; b < p.dims.n_bodies; ++b) {
        for (int l = 0; l < n_obs; ++l) {
          lin.barrier_grad[k][b * n_obs + l] = barrier_gradient_xy(t.x[k].segment<12>(12 * b), p.obstacles[l]);
        }
      }
    }
  }
  return lin;
}

struct NlpJacobian {
  SparseMatrixd eq;
  SparseMatrixd ineq;
};

/// Sparse constraint Jacobians assembled from a stage linearization, rows as in evaluate_nlp.
inline NlpJacobian assemble_jacobian(const OcpProblem& p, const NlpLinearization& lin) {
  using Triplet = Eigen::Triplet<double>;
  const int nv = p.num_variables();
  const auto& d = p.dims;
  std::vector<Triplet> te;
  int row = 0;
  for (int i = 0; i < d.nx; ++i) te.emplace_back(row + i, p.x_offset(0) + i, 1.0);
  row += d.nx;
  auto add_block = [&](int r0, int c0, const MatrixXd& m) {
    for (int j = 0; j < m.cols(); ++j) {
      for (int i = 0; i < m.rows(); ++i) {
        if (m(i, j) != 0.0) te.emplace_back(r0 + i, c0 + j, m(i, j));
      }
    }
  };
  for (int k = 0; k < p.horizon(); ++k) {
    const auto& s = lin.stages[k];
    add_block(row, p.x_offset(k), s.A);
    add_block(row, p.w_offset(k), s.B);
    for (int i = 0; i < d.nx; ++i) te.emplace_back(row + i, p.x_offset(k + 1) + i, -1.0);
    row += d.nx;
    add_block(row, p.x_offset(k), s.Dx);
    add_block(row, p.w_offset(k), s.Dw);
    row += d.nl;
  }
  for (const auto& sr : swing_rows(p)) {
    te.emplace_back(row++, p.w_offset(sr.step) + grf_index(p, sr.robot, sr.foot, sr.axis), 1.0);
  }
  NlpJacobian jac;
  jac.eq.resize(p.num_eq(), nv);
  jac.eq.setFromTriplets(te.begin(), te.end());

  std::vector<Triplet> ti;
  row = 0;
  for (const auto& pr : pyramid_rows(p)) {
    for (int a = 0; a < 3; ++a) {
      if (pr.a(a) != 0.0) ti.emplace_back(row, p.w_offset(pr.step) + grf_index(p, pr.robot, pr.foot, a), pr.a(a));
    }
    ++row;
  }
  const auto rows = hocbf_rows(p);
  const int n_obs = static_cast<int>(p.obstacles.size());
  for (size_t j = 0; j < rows.size(); ++j) {
    const auto& hr = rows[j];
    for (size_t m = 0; m < hr.coeffs.size(); ++m) {
      const int node = hr.step + static_cast<int>(m);
      const Eigen::Vector2d g = lin.barrier_grad[node][hr.pair.body * n_obs + hr.pair.obstacle];
      ti.emplace_back(row, p.x_offset(node) + 12 * hr.pair.body, hr.coeffs[m] * g(0));
      ti.emplace_back(row, p.x_offset(node) + 12 * hr.pair.body + 1, hr.coeffs[m] * g(1));
    }
    ti.emplace_back(row, p.slack_offset() + static_cast<int>(j), 1.0);
    ++row;
  }
  for (size_t j = 0; j < rows.size(); ++j) ti.emplace_back(row++, p.slack_offset() + static_cast<int>(j), 1.0);
  jac.ineq.resize(p.num_ineq(), nv);
  jac.ineq.setFromTriplets(ti.begin(), ti.end());
  return jac;
}

inline NlpJacobian nlp_jacobian(const OcpProblem& p, const Trajectory& t) {
  return assemble_jacobian(p, linearize_nlp(p, t));
}

// ---------------------------------------------------------------------------------------------

inline OcpProblem build_ocp(const VectorXd& x_measured, const std::vector<VectorXd>& refs,
                            const std::vector<ContactSchedule>& schedules, const std::vector<Obstacle>& obstacles,
                            const OcpWeights& weights, const HocbfParams& hocbf, const SystemModel& model,
                            const OcpSettings& settings, OcpMode mode) {
  OcpProblem p;
  p.dims = OcpDims::make(mode);
  p.model = model;
  p.settings = settings;
  p.weights = weights;
  p.hocbf = hocbf;
  p.obstacles = obstacles;
  p.schedules = schedules;
  p.x_measured = x_measured;
  p.refs = refs;

  if (settings.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (!(settings.ts > 0.0)) throw ConfigError("sampling time must be positive");
  weights.validate();
  hocbf.validate();
  if (x_measured.size() != p.dims.nx) throw ConfigError("measured state has wrong dimension");
  if (!x_measured.allFinite()) throw ConfigError("measured state is not finite");
  if (static_cast<int>(refs.size()) != settings.horizon + 1) {
    throw ReferenceLengthMismatch("expected " + std::to_string(settings.horizon + 1) + " reference states, got " +
                                  std::to_string(refs.size()));
  }
  for (const auto& r : refs) {
    if (r.size() != p.dims.nx) throw ReferenceLengthMismatch("reference state has wrong dimension");
  }
  if (static_cast<int>(schedules.size()) != p.dims.n_robots) throw ConfigError("one contact schedule per robot");
  for (const auto& s : schedules) {
    if (s.steps() < settings.horizon + 1) throw ConfigError("contact schedule shorter than the horizon");
  }
  return p;
}

}  // namespace pmpc
