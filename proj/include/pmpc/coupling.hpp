#pragma once

#include <array>
#include <utility>

#include <Eigen/Dense>

#include "pmpc/autodiff.hpp"
#include "pmpc/errors.hpp"
#include "pmpc/spatial_math.hpp"
#include "pmpc/srb_model.hpp"

namespace pmpc {

template <typename S>
using Vec5 = Eigen::Matrix<S, 5, 1>;
template <typename S>
using Vec10 = Eigen::Matrix<S, 10, 1>;
using Vector5d = Vec5<double>;
using Vector10d = Vec10<double>;

constexpr int kWrenchDim = 5;
constexpr int kNumRobots = 2;

/// Rigid bracket geometry for a tandem formation (robot 0 behind the payload, robot 1 ahead).
/// robot_offset[i] is the attachment point in robot i's body frame,
/// payload_offset[i] the matching point in the payload frame.
struct AttachmentGeometry {
  std::array<Vector3d, kNumRobots> robot_offset{Vector3d(0.25, 0.0, 0.05), Vector3d(-0.25, 0.0, 0.05)};
  std::array<Vector3d, kNumRobots> payload_offset{Vector3d(-0.45, 0.0, 0.0), Vector3d(0.45, 0.0, 0.0)};

  void validate() const {
    if ((payload_offset[0] - payload_offset[1]).norm() < 1e-6) {
      throw ConfigError("payload attachment offsets must be distinct");
    }
  }
};

/// Constraint wrench on one robot-payload edge: force at the attachment (world frame, acting on the
/// robot) and roll/pitch constraint torques about the payload-frame x and y axes.
struct InteractionWrench {
  Vector3d f = Vector3d::Zero();
  Eigen::Vector2d tau_rp = Eigen::Vector2d::Zero();

  Vector5d vec() const {
    Vector5d l;
    l << f, tau_rp;
    return l;
  }
  static InteractionWrench from_vec(const Vector5d& l) { return {l.head<3>(), l.tail<2>()}; }
};

struct BaumgarteGains {
  double zeta = 1.0;
  double omega = 50.0;
};

// ---------------------------------------------------------------------------------------------
// Holonomic constraint and its time derivatives.

template <typename S>
Vec5<S> holonomic_residual(const Vec12<S>& xi, const Vec12<S>& xl, const AttachmentGeometry& geom,
                           int edge) {
  const Mat3<S> ri = rotation_from_euler<S>(xi.template segment<3>(idx::kEuler));
  const Mat3<S> rl = rotation_from_euler<S>(xl.template segment<3>(idx::kEuler));
  Vec5<S> phi;
  phi.template head<3>() = xi.template segment<3>(idx::kPos) + ri * geom.robot_offset[edge].cast<S>() -
                           xl.template segment<3>(idx::kPos) - rl * geom.payload_offset[edge].cast<S>();
  phi(3) = xi(idx::kEuler) - xl(idx::kEuler);
  phi(4) = xi(idx::kEuler + 1) - xl(idx::kEuler + 1);
  return phi;
}

namespace detail {

// Roll and pitch rates of a ZYX parameterization driven by world-frame omega.
template <typename S>
Eigen::Matrix<S, 2, 1> roll_pitch_rate(const Vec3<S>& theta, const Vec3<S>& omega) {
  using std::cos;
  using std::sin;
  const S cp = cos(theta(1));
  const S cy = cos(theta(2)), sy = sin(theta(2));
  Eigen::Matrix<S, 2, 1> r;
  r(0) = (cy * omega(0) + sy * omega(1)) / cp;
  r(1) = -sy * omega(0) + cy * omega(1);
  return r;
}

// Time derivative of roll_pitch_rate given the angular acceleration.
template <typename S>
Eigen::Matrix<S, 2, 1> roll_pitch_accel(const Vec3<S>& theta, const Vec3<S>& omega,
                                        const Vec3<S>& alpha) {
  using std::cos;
  using std::sin;
  const S cp = cos(theta(1)), sp = sin(theta(1));
  const S cy = cos(theta(2)), sy = sin(theta(2));
  const S c = cy * omega(0) + sy * omega(1);
  const S q = -sy * omega(0) + cy * omega(1);  // pitch rate
  const S yaw_rate = c * sp / cp + omega(2);
  const S c_dot = yaw_rate * q + cy * alpha(0) + sy * alpha(1);
  Eigen::Matrix<S, 2, 1> r;
  r(0) = c_dot / cp + c * sp * q / (cp * cp);
  r(1) = -yaw_rate * c - sy * alpha(0) + cy * alpha(1);
  return r;
}

}  // namespace detail

/// First time derivative of the edge constraint.
template <typename S>
Vec5<S> holonomic_rate(const Vec12<S>& xi, const Vec12<S>& xl, const AttachmentGeometry& geom, int edge) {
  const Mat3<S> ri = rotation_from_euler<S>(xi.template segment<3>(idx::kEuler));
  const Mat3<S> rl = rotation_from_euler<S>(xl.template segment<3>(idx::kEuler));
  const Vec3<S> rho_i = ri * geom.robot_offset[edge].cast<S>();
  const Vec3<S> rho_l = rl * geom.payload_offset[edge].cast<S>();
  const Vec3<S> wi = xi.template segment<3>(idx::kOmega);
  const Vec3<S> wl = xl.template segment<3>(idx::kOmega);
  Vec5<S> d;
  d.template head<3>() = xi.template segment<3>(idx::kVel) + wi.cross(rho_i) -
                         xl.template segment<3>(idx::kVel) - wl.cross(rho_l);
  d.template tail<2>() = detail::roll_pitch_rate<S>(xi.template segment<3>(idx::kEuler), wi) -
                         detail::roll_pitch_rate<S>(xl.template segment<3>(idx::kEuler), wl);
  return d;
}

/// Second time derivative of the edge constraint given both bodies' state derivatives.
template <typename S>
Vec5<S> holonomic_accel(const Vec12<S>& xi, const Vec12<S>& xl, const Vec12<S>& xdi, const Vec12<S>& xdl,
                        const AttachmentGeometry& geom, int edge) {
  const Mat3<S> ri = rotation_from_euler<S>(xi.template segment<3>(idx::kEuler));
  const Mat3<S> rl = rotation_from_euler<S>(xl.template segment<3>(idx::kEuler));
  const Vec3<S> rho_i = ri * geom.robot_offset[edge].cast<S>();
  const Vec3<S> rho_l = rl * geom.payload_offset[edge].cast<S>();
  const Vec3<S> wi = xi.template segment<3>(idx::kOmega);
  const Vec3<S> wl = xl.template segment<3>(idx::kOmega);
  const Vec3<S> ai = xdi.template segment<3>(idx::kOmega);
  const Vec3<S> al = xdl.template segment<3>(idx::kOmega);
  Vec5<S> dd;
  dd.template head<3>() = xdi.template segment<3>(idx::kVel) + ai.cross(rho_i) + wi.cross(Vec3<S>(wi.cross(rho_i))) -
                          xdl.template segment<3>(idx::kVel) - al.cross(rho_l) -
                          wl.cross(Vec3<S>(wl.cross(rho_l)));
  dd.template tail<2>() = detail::roll_pitch_accel<S>(xi.template segment<3>(idx::kEuler), wi, ai) -
                          detail::roll_pitch_accel<S>(xl.template segment<3>(idx::kEuler), wl, al);
  return dd;
}

// ---------------------------------------------------------------------------------------------
// Interaction-wrench maps.

/// Wrench at robot i's CoM produced by lambda on edge i.
template <typename S>
Vec6<S> robot_interaction_wrench(const Vec12<S>& xi, const Vec12<S>& xl, const Vec5<S>& lambda,
                                 const AttachmentGeometry& geom, int edge) {
  const Mat3<S> ri = rotation_from_euler<S>(xi.template segment<3>(idx::kEuler));
  const Mat3<S> rl = rotation_from_euler<S>(xl.template segment<3>(idx::kEuler));
  const Vec3<S> rho_i = ri * geom.robot_offset[edge].cast<S>();
  const Vec3<S> f = lambda.template head<3>();
  Vec6<S> w;
  w.template head<3>() = f;
  w.template tail<3>() = rho_i.cross(f) + rl.col(0) * lambda(3) + rl.col(1) * lambda(4);
  return w;
}

/// Reaction wrench at the payload CoM from edge i (Newton's third law at the attachment point).
template <typename S>
Vec6<S> payload_interaction_wrench(const Vec12<S>& xl, const Vec5<S>& lambda,
                                   const AttachmentGeometry& geom, int edge) {
  const Mat3<S> rl = rotation_from_euler<S>(xl.template segment<3>(idx::kEuler));
  const Vec3<S> rho_l = rl * geom.payload_offset[edge].cast<S>();
  const Vec3<S> f = lambda.template head<3>();
  Vec6<S> w;
  w.template head<3>() = -f;
  w.template tail<3>() = -rho_l.cross(f) - rl.col(0) * lambda(3) - rl.col(1) * lambda(4);
  return w;
}

/// The 6x5 matrices F (robot side) and its payload counterpart for one edge.
inline std::pair<Eigen::Matrix<double, 6, 5>, Eigen::Matrix<double, 6, 5>> wrench_map(
    const SrbState& xi, const SrbState& xl, const AttachmentGeometry& geom, int edge) {
  const Matrix3d ri = rotation_from_euler<double>(xi.theta);
  const Matrix3d rl = rotation_from_euler<double>(xl.theta);
  Eigen::Matrix<double, 6, 5> robot = Eigen::Matrix<double, 6, 5>::Zero();
  Eigen::Matrix<double, 6, 5> payload = Eigen::Matrix<double, 6, 5>::Zero();
  robot.block<3, 3>(0, 0).setIdentity();
  robot.block<3, 3>(3, 0) = skew<double>(ri * geom.robot_offset[edge]);
  robot.block<3, 1>(3, 3) = rl.col(0);
  robot.block<3, 1>(3, 4) = rl.col(1);
  payload.block<3, 3>(0, 0) = -Matrix3d::Identity();
  payload.block<3, 3>(3, 0) = -skew<double>(rl * geom.payload_offset[edge]);
  payload.block<3, 1>(3, 3) = -rl.col(0);
  payload.block<3, 1>(3, 4) = -rl.col(1);
  return {robot, payload};
}

// ---------------------------------------------------------------------------------------------
// The coupled two-robot + payload system.

/// Physical description of the interconnected system: robots 0 and 1, then the payload.
struct SystemModel {
  std::array<SrbParams, kNumRobots> robots;
  SrbParams payload;
  AttachmentGeometry geom;
  FootLayout feet = default_foot_layout();
  double gravity = kGravity;

  void validate() const {
    for (const auto& r : robots) r.validate();
    payload.validate();
    geom.validate();
  }
};

/// Global state: robot 0, robot 1, payload, 12 entries each.
using GlobalState = Eigen::Matrix<double, 36, 1>;

constexpr StanceFlags kAllStance{true, true, true, true};

/// Net CoM wrenches of the three bodies.
template <typename S>
std::array<Vec6<S>, 3> system_wrenches(const SystemModel& model, const Vec12<S>& x1, const Vec12<S>& x2,
                                       const Vec12<S>& xl, const Vec12<S>& u1, const Vec12<S>& u2,
                                       const Vec5<S>& l1, const Vec5<S>& l2, const StanceFlags& s1,
                                       const StanceFlags& s2) {
  std::array<Vec6<S>, 3> w;
  w[0] = grf_wrench<S>(x1, u1, s1, model.feet) + robot_interaction_wrench<S>(x1, xl, l1, model.geom, 0);
  w[1] = grf_wrench<S>(x2, u2, s2, model.feet) + robot_interaction_wrench<S>(x2, xl, l2, model.geom, 1);
  w[2] = payload_interaction_wrench<S>(xl, l1, model.geom, 0) +
         payload_interaction_wrench<S>(xl, l2, model.geom, 1);
  return w;
}

/// Stacked phi_ddot of both edges along the continuous dynamics. With `baumgarte` set, returns the
/// stabilized form phi_ddot + 2 zeta w phi_dot + w^2 phi. `external` adds further CoM wrenches
/// per body (robot 0, robot 1, payload).
template <typename S>
Vec10<S> holonomic_second_derivative(const SystemModel& model, const Vec12<S>& x1, const Vec12<S>& x2,
                                     const Vec12<S>& xl, const Vec12<S>& u1, const Vec12<S>& u2,
                                     const Vec5<S>& l1, const Vec5<S>& l2, const StanceFlags& s1,
                                     const StanceFlags& s2, const BaumgarteGains* baumgarte = nullptr,
                                     const std::array<Vector6d, 3>* external = nullptr) {
  auto w = system_wrenches<S>(model, x1, x2, xl, u1, u2, l1, l2, s1, s2);
  if (external != nullptr) {
    for (int b = 0; b < 3; ++b) w[b] += (*external)[b].cast<S>();
  }
  const Vec12<S> d1 = srb_continuous_rhs<S>(model.robots[0], x1, w[0], model.gravity);
  const Vec12<S> d2 = srb_continuous_rhs<S>(model.robots[1], x2, w[1], model.gravity);
  const Vec12<S> dl = srb_continuous_rhs<S>(model.payload, xl, w[2], model.gravity);
  Vec10<S> out;
  out.template head<5>() = holonomic_accel<S>(x1, xl, d1, dl, model.geom, 0);
  out.template tail<5>() = holonomic_accel<S>(x2, xl, d2, dl, model.geom, 1);
  if (baumgarte != nullptr) {
    const S c1(2.0 * baumgarte->zeta * baumgarte->omega);
    const S c0(baumgarte->omega * baumgarte->omega);
    out.template head<5>() += c1 * holonomic_rate<S>(x1, xl, model.geom, 0) +
                              c0 * holonomic_residual<S>(x1, xl, model.geom, 0);
    out.template tail<5>() += c1 * holonomic_rate<S>(x2, xl, model.geom, 1) +
                              c0 * holonomic_residual<S>(x2, xl, model.geom, 1);
  }
  return out;
}

inline Vector10d holonomic_second_derivative(const SystemModel& model, const GlobalState& x,
                                             const GrfInput& u1, const GrfInput& u2,
                                             const InteractionWrench& l1, const InteractionWrench& l2,
                                             const StanceFlags& s1, const StanceFlags& s2,
                                             const BaumgarteGains* baumgarte = nullptr) {
  return holonomic_second_derivative<double>(model, x.segment<12>(0), x.segment<12>(12), x.segment<12>(24),
                                             u1, u2, l1.vec(), l2.vec(), s1, s2, baumgarte);
}

/// Both edges' residuals stacked; a convenience for monitors and plant checks.
inline Vector10d holonomic_residuals(const SystemModel& model, const GlobalState& x) {
  Vector10d r;
  r.head<5>() = holonomic_residual<double>(x.segment<12>(0), x.segment<12>(24), model.geom, 0);
  r.tail<5>() = holonomic_residual<double>(x.segment<12>(12), x.segment<12>(24), model.geom, 1);
  return r;
}

constexpr double kMaxCouplingCondition = 1e12;

/// Interaction wrenches making the (optionally stabilized) phi_ddot vanish. phi_ddot is affine in the
/// stacked lambda, so this is one 10x10 linear solve.
inline std::pair<InteractionWrench, InteractionWrench> solve_constraint_wrenches(
    const SystemModel& model, const GlobalState& x, const GrfInput& u1, const GrfInput& u2,
    const BaumgarteGains* baumgarte, const StanceFlags& s1 = kAllStance,
    const StanceFlags& s2 = kAllStance, const std::array<Vector6d, 3>* external = nullptr) {
  const Vector10d zero = Vector10d::Zero();
  auto [b, m] = ad_jacobian<10>(
      [&](const auto& lam) {
        using S = typename std::decay_t<decltype(lam)>::Scalar;
        return holonomic_second_derivative<S>(
            model, x.segment<12>(0).cast<S>(), x.segment<12>(12).cast<S>(), x.segment<12>(24).cast<S>(),
            u1.cast<S>(), u2.cast<S>(), Vec5<S>(lam.template head<5>()), Vec5<S>(lam.template tail<5>()),
            s1, s2, baumgarte, external);
      },
      zero);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > kMaxCouplingCondition) {
    throw SingularCoupling("constraint-wrench system condition number exceeds 1e12");
  }
  const Vector10d lam = m.partialPivLu().solve(-b);
  return {InteractionWrench::from_vec(lam.head<5>()), InteractionWrench::from_vec(lam.tail<5>())};
}

/// Stance forces and interaction wrenches that hold a motionless configuration in place: all three
/// bodies have zero acceleration. Minimum-norm solution of the 18 affine balance equations.
struct SupportInputs {
  GrfInput u1 = GrfInput::Zero();
  GrfInput u2 = GrfInput::Zero();
  Vector5d l1 = Vector5d::Zero();
  Vector5d l2 = Vector5d::Zero();
};

inline SupportInputs static_support(const SystemModel& model, const GlobalState& x, const StanceFlags& s1,
                                    const StanceFlags& s2) {
  GlobalState xs = x;
  for (int b = 0; b < 3; ++b) {
    xs.segment<3>(12 * b + idx::kVel).setZero();
    xs.segment<3>(12 * b + idx::kOmega).setZero();
  }
  auto accel = [&](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    const Vec12<S> x1 = xs.segment<12>(0).cast<S>();
    const Vec12<S> x2 = xs.segment<12>(12).cast<S>();
    const Vec12<S> xl = xs.segment<12>(24).cast<S>();
    const auto w = system_wrenches<S>(model, x1, x2, xl, Vec12<S>(z.template segment<12>(0)),
                                      Vec12<S>(z.template segment<12>(12)), Vec5<S>(z.template segment<5>(24)),
                                      Vec5<S>(z.template segment<5>(29)), s1, s2);
    Eigen::Matrix<S, 18, 1> a;
    const Vec12<S> d1 = srb_continuous_rhs<S>(model.robots[0], x1, w[0], model.gravity);
    const Vec12<S> d2 = srb_continuous_rhs<S>(model.robots[1], x2, w[1], model.gravity);
    const Vec12<S> dl = srb_continuous_rhs<S>(model.payload, xl, w[2], model.gravity);
    a << d1.template tail<6>(), d2.template tail<6>(), dl.template tail<6>();
    return a;
  };
  auto [a0, jac] = ad_jacobian<34>(accel, Eigen::Matrix<double, 34, 1>::Zero());
  // Keep only the columns of feet in stance.
  std::vector<int> cols;
  for (int f = 0; f < kNumFeet; ++f) {
    for (int c = 0; c < 3; ++c) {
      if (s1[f]) cols.push_back(3 * f + c);
    }
  }
  for (int f = 0; f < kNumFeet; ++f) {
    for (int c = 0; c < 3; ++c) {
      if (s2[f]) cols.push_back(12 + 3 * f + c);
    }
  }
  for (int c = 24; c < 34; ++c) cols.push_back(c);
  Eigen::MatrixXd a(18, cols.size());
  for (size_t j = 0; j < cols.size(); ++j) a.col(j) = jac.col(cols[j]);
  const Eigen::VectorXd sol = a.completeOrthogonalDecomposition().solve(-a0);
  Eigen::Matrix<double, 34, 1> z = Eigen::Matrix<double, 34, 1>::Zero();
  for (size_t j = 0; j < cols.size(); ++j) z(cols[j]) = sol(j);
  return {z.segment<12>(0), z.segment<12>(12), z.segment<5>(24), z.segment<5>(29)};
}

}  // namespace pmpc
