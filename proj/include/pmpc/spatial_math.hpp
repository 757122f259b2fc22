#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <Eigen/Dense>

#include "pmpc/autodiff.hpp"
#include "pmpc/errors.hpp"

namespace pmpc {

template <typename S>
using Vec3 = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Mat3 = Eigen::Matrix<S, 3, 3>;

using Vector3d = Eigen::Vector3d;
using Matrix3d = Eigen::Matrix3d;

// Euler angles are stored as (roll, pitch, yaw), ZYX convention: R = Rz(yaw) Ry(pitch) Rx(roll).
constexpr double kGimbalGuard = 0.05;

template <typename S>
Mat3<S> skew(const Vec3<S>& v) {
  Mat3<S> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
       -v(1), v(0), S(0);
  return m;
}

template <typename S>
Mat3<S> rotation_from_euler(const Vec3<S>& rpy) {
  using std::cos;
  using std::sin;
  const S cr = cos(rpy(0)), sr = sin(rpy(0));
  const S cp = cos(rpy(1)), sp = sin(rpy(1));
  const S cy = cos(rpy(2)), sy = sin(rpy(2));
  Mat3<S> r;
  r << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp, cp * sr, cp * cr;
  return r;
}

/// ZYX angles of a rotation matrix. Pitch is returned in [-pi/2, pi/2].
inline Vector3d euler_from_rotation(const Matrix3d& r) {
  const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
  const double roll = std::atan2(r(2, 1), r(2, 2));
  const double yaw = std::atan2(r(1, 0), r(0, 0));
  return {roll, pitch, yaw};
}

inline bool inside_gimbal_guard(double pitch) {
  return std::abs(pitch) < std::numbers::pi / 2 - kGimbalGuard;
}

/// Maps world-frame angular velocity to ZYX Euler-angle rates: theta_dot = A(theta) omega.
template <typename S>
Mat3<S> euler_rate_map(const Vec3<S>& rpy) {
  using std::cos;
  using std::sin;
  if (!inside_gimbal_guard(value_of(rpy(1)))) {
    throw GimbalProximity("pitch " + std::to_string(value_of(rpy(1))) + " rad inside gimbal guard band");
  }
  const S cp = cos(rpy(1)), sp = sin(rpy(1));
  const S cy = cos(rpy(2)), sy = sin(rpy(2));
  Mat3<S> a;
  a << cy / cp, sy / cp, S(0),
       -sy, cy, S(0),
       cy * sp / cp, sy * sp / cp, S(1);
  return a;
}

/// Inverse of euler_rate_map: omega = T(theta) theta_dot. Defined everywhere.
template <typename S>
Mat3<S> euler_rate_to_omega(const Vec3<S>& rpy) {
  using std::cos;
  using std::sin;
  const S cp = cos(rpy(1)), sp = sin(rpy(1));
  const S cy = cos(rpy(2)), sy = sin(rpy(2));
  Mat3<S> t;
  t << cy * cp, -sy, S(0),
       sy * cp, cy, S(0),
       -sp, S(0), S(1);
  return t;
}

/// Central-difference Jacobian. Used as the reference against which all exact Jacobians are checked.
inline Eigen::MatrixXd finite_difference_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double step = 1e-6) {
  const Eigen::VectorXd f0 = f(x);
  Eigen::MatrixXd jac(f0.size(), x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(j) = x(j);
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace pmpc
