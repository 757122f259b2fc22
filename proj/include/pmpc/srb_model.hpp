#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmpc/autodiff.hpp"
#include "pmpc/errors.hpp"
#include "pmpc/spatial_math.hpp"

namespace pmpc {

template <typename S>
using Vec6 = Eigen::Matrix<S, 6, 1>;
template <typename S>
using Vec12 = Eigen::Matrix<S, 12, 1>;

using Vector6d = Vec6<double>;
using Vector12d = Vec12<double>;

constexpr double kGravity = 9.81;
constexpr int kStateDim = 12;
constexpr int kGrfDim = 12;
constexpr int kNumFeet = 4;

// State layout inside a 12-vector.
namespace idx {
constexpr int kPos = 0;
constexpr int kEuler = 3;
constexpr int kVel = 6;
constexpr int kOmega = 9;
}  // namespace idx

struct SrbParams {
  std::string name;
  double mass = 1.0;
  Matrix3d body_inertia = Matrix3d::Identity();

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw ConfigError("body '" + name + "': mass must be positive");
    }
    if (!body_inertia.isApprox(body_inertia.transpose(), 1e-12)) {
      throw ConfigError("body '" + name + "': inertia must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix3d> eig(body_inertia);
    if (eig.eigenvalues().minCoeff() <= 0.0) {
      throw ConfigError("body '" + name + "': inertia must be positive definite");
    }
  }
};

/// Pose and twist of one rigid body. Euler angles are ZYX (roll, pitch, yaw); omega is world-frame.
struct SrbState {
  Vector3d p = Vector3d::Zero();
  Vector3d theta = Vector3d::Zero();
  Vector3d v = Vector3d::Zero();
  Vector3d omega = Vector3d::Zero();

  Vector12d vec() const {
    Vector12d x;
    x << p, theta, v, omega;
    return x;
  }

  static SrbState from_vec(const Eigen::Ref<const Vector12d>& x) {
    return {x.segment<3>(idx::kPos), x.segment<3>(idx::kEuler), x.segment<3>(idx::kVel),
            x.segment<3>(idx::kOmega)};
  }

  bool valid() const { return vec().allFinite() && inside_gimbal_guard(theta(1)); }
};

struct NetWrench {
  Vector3d force = Vector3d::Zero();
  Vector3d torque = Vector3d::Zero();

  Vector6d vec() const {
    Vector6d w;
    w << force, torque;
    return w;
  }
  static NetWrench from_vec(const Vector6d& w) { return {w.head<3>(), w.tail<3>()}; }
};

// Per-foot forces, FL, FR, RL, RR, 3 components each, world frame.
using GrfInput = Vector12d;

enum Foot : int { kFL = 0, kFR = 1, kRL = 2, kRR = 3 };

using FootLayout = std::array<Vector3d, kNumFeet>;
using StanceFlags = std::array<bool, kNumFeet>;

/// Nominal body-frame foot positions relative to the CoM.
inline FootLayout default_foot_layout() {
  return {Vector3d(0.19, 0.14, -0.28), Vector3d(0.19, -0.14, -0.28), Vector3d(-0.19, 0.14, -0.28),
          Vector3d(-0.19, -0.14, -0.28)};
}

struct GaitParams {
  double period = 0.4;
  double phase_offset = 0.0;
};

/// Stance flags at the N+1 horizon nodes. Feet hold their body-frame offsets over the horizon.
struct ContactSchedule {
  std::vector<StanceFlags> stance;
  FootLayout feet = default_foot_layout();
  GaitParams gait;

  int steps() const { return static_cast<int>(stance.size()); }
  int stance_count(int step) const {
    int n = 0;
    for (bool s : stance.at(step)) n += s ? 1 : 0;
    return n;
  }
};

/// 50% duty-cycle trot. Phase origin has {FL, RR} in stance.
inline StanceFlags trot_stance_at(double t, const GaitParams& gait) {
  // The small offset keeps samples that land on a half-period boundary (up to rounding) in the
  // later half.
  const double half_periods = std::floor((t + gait.phase_offset) / (0.5 * gait.period) + 1e-9);
  const bool first_pair = static_cast<long long>(half_periods) % 2 == 0;
  if (first_pair) return {true, false, false, true};
  return {false, true, true, false};
}

inline ContactSchedule trot_schedule(double t, int horizon, double ts, const GaitParams& gait,
                                     const FootLayout& feet = default_foot_layout()) {
  if (!(gait.period > 0.0)) throw ConfigError("gait period must be positive");
  ContactSchedule sched;
  sched.feet = feet;
  sched.gait = gait;
  sched.stance.reserve(horizon + 1);
  for (int k = 0; k <= horizon; ++k) {
    sched.stance.push_back(trot_stance_at(t + k * ts, gait));
  }
  return sched;
}

/// Net wrench at the CoM produced by stance-foot forces: E(x) u.
template <typename S>
Vec6<S> grf_wrench(const Vec12<S>& x, const Vec12<S>& u, const StanceFlags& stance,
                   const FootLayout& feet) {
  const Mat3<S> rot = rotation_from_euler<S>(x.template segment<3>(idx::kEuler));
  Vec6<S> w = Vec6<S>::Zero();
  for (int f = 0; f < kNumFeet; ++f) {
    if (!stance[f]) continue;
    const Vec3<S> lever = rot * feet[f].cast<S>();
    const Vec3<S> force = u.template segment<3>(3 * f);
    w.template head<3>() += force;
    w.template tail<3>() += lever.cross(force);
  }
  return w;
}

/// The 6x12 map E from foot forces to the CoM wrench for one horizon step.
inline Eigen::Matrix<double, 6, 12> grf_map(const SrbState& state, const ContactSchedule& schedule,
                                            int step) {
  const StanceFlags& stance = schedule.stance.at(step);
  const Matrix3d rot = rotation_from_euler<double>(state.theta);
  Eigen::Matrix<double, 6, 12> e = Eigen::Matrix<double, 6, 12>::Zero();
  for (int f = 0; f < kNumFeet; ++f) {
    if (!stance[f]) continue;
    e.block<3, 3>(0, 3 * f).setIdentity();
    e.block<3, 3>(3, 3 * f) = skew<double>(rot * schedule.feet[f]);
  }
  return e;
}

/// Continuous SRB dynamics: (p_dot, A(theta) omega, f/m - g0, I^-1 (tau - omega x I omega)),
/// with the world inertia I = R I_B R^T.
template <typename S>
Vec12<S> srb_continuous_rhs(const SrbParams& params, const Vec12<S>& x, const Vec6<S>& wrench,
                            double gravity = kGravity) {
  const Vec3<S> theta = x.template segment<3>(idx::kEuler);
  const Vec3<S> omega = x.template segment<3>(idx::kOmega);
  const Mat3<S> rot = rotation_from_euler<S>(theta);
  const Mat3<S> inertia = rot * params.body_inertia.cast<S>() * rot.transpose();
  const Mat3<S> inertia_inv = rot * params.body_inertia.inverse().cast<S>() * rot.transpose();

  Vec12<S> dx;
  dx.template segment<3>(idx::kPos) = x.template segment<3>(idx::kVel);
  dx.template segment<3>(idx::kEuler) = euler_rate_map<S>(theta) * omega;
  Vec3<S> acc = wrench.template head<3>() / S(params.mass);
  acc(2) -= S(gravity);
  dx.template segment<3>(idx::kVel) = acc;
  dx.template segment<3>(idx::kOmega) =
      inertia_inv * (wrench.template tail<3>() - omega.cross(Vec3<S>(inertia * omega)));
  return dx;
}

/// One classic RK4 step with the net wrench held constant over dt.
template <typename S>
Vec12<S> discretize(const SrbParams& params, const Vec12<S>& x, const Vec6<S>& wrench, double dt,
                    double gravity = kGravity) {
  const S h(dt);
  const Vec12<S> k1 = srb_continuous_rhs<S>(params, x, wrench, gravity);
  const Vec12<S> k2 = srb_continuous_rhs<S>(params, Vec12<S>(x + (h / S(2)) * k1), wrench, gravity);
  const Vec12<S> k3 = srb_continuous_rhs<S>(params, Vec12<S>(x + (h / S(2)) * k2), wrench, gravity);
  const Vec12<S> k4 = srb_continuous_rhs<S>(params, Vec12<S>(x + h * k3), wrench, gravity);
  return x + (h / S(6)) * (k1 + S(2) * k2 + S(2) * k3 + k4);
}

inline SrbState discretize(const SrbParams& params, const SrbState& state, const NetWrench& net,
                           double dt) {
  if (!(dt > 0.0)) throw ConfigError("discretize: dt must be positive");
  return SrbState::from_vec(discretize<double>(params, state.vec(), net.vec(), dt));
}

/// Jacobian of one RK4 step w.r.t. [state (12), wrench (6)].
inline std::pair<Vector12d, Eigen::Matrix<double, 12, 18>> discretize_jacobian(
    const SrbParams& params, const Vector12d& x, const Vector6d& wrench, double dt,
    double gravity = kGravity) {
  Eigen::Matrix<double, 18, 1> z;
  z << x, wrench;
  auto [val, jac] = ad_jacobian<18>(
      [&](const auto& zz) {
        using S = typename std::decay_t<decltype(zz)>::Scalar;
        return discretize<S>(params, Vec12<S>(zz.template head<12>()), Vec6<S>(zz.template tail<6>()),
                             dt, gravity);
      },
      z);
  return {val, jac};
}

/// Jacobian of the continuous right-hand side w.r.t. [state (12), wrench (6)].
inline std::pair<Vector12d, Eigen::Matrix<double, 12, 18>> rhs_jacobian(const SrbParams& params,
                                                                        const Vector12d& x,
                                                                        const Vector6d& wrench,
                                                                        double gravity = kGravity) {
  Eigen::Matrix<double, 18, 1> z;
  z << x, wrench;
  auto [val, jac] = ad_jacobian<18>(
      [&](const auto& zz) {
        using S = typename std::decay_t<decltype(zz)>::Scalar;
        return srb_continuous_rhs<S>(params, Vec12<S>(zz.template head<12>()),
                                     Vec6<S>(zz.template tail<6>()), gravity);
      },
      z);
  return {val, jac};
}

}  // namespace pmpc
