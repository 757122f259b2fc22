#pragma once

// Ground-truth plant: the coupled three-body DAE with true parameters, interaction wrenches
// solved at every RK4 stage with Baumgarte stabilization, CoM push disturbances, and a measurement
// model that can rebuild the payload state from the two robots.

#include <cmath>
#include <random>
#include <vector>

#include "pmpc/autodiff.hpp"
#include "pmpc/coupling.hpp"
#include "pmpc/errors.hpp"

namespace pmpc {

struct Disturbance {
  double start = 0.0;     // s
  double duration = 0.0;  // s
  int body = 0;           // 0, 1 robots; 2 payload
  Vector3d force = Vector3d::Zero();

  bool active(double t) const { return t >= start && t < start + duration; }
};

enum class MeasureMode { kExact, kReconstructPayload };

struct PlantConfig {
  SystemModel model;  // true parameters
  double dt = 0.01667 / 16.0;
  BaumgarteGains baumgarte;
  std::vector<Disturbance> disturbances;
  MeasureMode measure = MeasureMode::kExact;
  double position_noise = 0.0;  // std of robot position noise, m
  // A constraint residual component above this aborts the run.
  double blowup_threshold = 0.05;

  void validate() const {
    model.validate();
    if (!(dt > 0.0)) throw ConfigError("plant step must be positive");
    if (position_noise < 0.0) throw ConfigError("noise level must be nonnegative");
    for (const auto& d : disturbances) {
      if (d.body < 0 || d.body > 2) throw ConfigError("disturbance body must be 0, 1 or 2");
      if (d.duration < 0.0) throw ConfigError("disturbance duration must be nonnegative");
    }
  }
};

/// Number of plant substeps per control period; throws unless dt divides ts.
inline int substeps_per_period(double ts, double dt) {
  const double r = ts / dt;
  const long n = std::lround(r);
  if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * r) {
    throw ConfigError("plant step must divide the control period");
  }
  return static_cast<int>(n);
}

inline bool disturbance_active(const std::vector<Disturbance>& ds, double t) {
  for (const auto& d : ds) {
    if (d.active(t)) return true;
  }
  return false;
}

struct PlantDerivative {
  GlobalState xdot;
  Vector10d lambda;
};

/// Time derivative of the plant state with the constraint wrenches solved in place.
inline PlantDerivative plant_rhs(const PlantConfig& cfg, const GlobalState& x, const GrfInput& u1,
                                 const GrfInput& u2, double t) {
  std::array<Vector6d, 3> push{Vector6d::Zero(), Vector6d::Zero(), Vector6d::Zero()};
  for (const auto& d : cfg.disturbances) {
    if (d.active(t)) push[d.body].head<3>() += d.force;
  }
  const auto [l1, l2] =
      solve_constraint_wrenches(cfg.model, x, u1, u2, &cfg.baumgarte, kAllStance, kAllStance, &push);
  const Vec12<double> x1 = x.segment<12>(0), x2 = x.segment<12>(12), xl = x.segment<12>(24);
  auto w = system_wrenches<double>(cfg.model, x1, x2, xl, u1, u2, l1.vec(), l2.vec(), kAllStance, kAllStance);
  for (int b = 0; b < 3; ++b) w[b] += push[b];
  PlantDerivative out;
  out.xdot.segment<12>(0) = srb_continuous_rhs<double>(cfg.model.robots[0], x1, w[0], cfg.model.gravity);
  out.xdot.segment<12>(12) = srb_continuous_rhs<double>(cfg.model.robots[1], x2, w[1], cfg.model.gravity);
  out.xdot.segment<12>(24) = srb_continuous_rhs<double>(cfg.model.payload, xl, w[2], cfg.model.gravity);
  out.lambda << l1.vec(), l2.vec();
  return out;
}

struct PlantStepResult {
  GlobalState x;
  Vector10d lambda;  // constraint wrenches at the start of the period
};

inline double max_constraint_residual(const SystemModel& model, const GlobalState& x) {
  return holonomic_residuals(model, x).cwiseAbs().maxCoeff();
}

/// Advances the plant over one control period `ts` holding the GRFs constant.
inline PlantStepResult plant_step(const GlobalState& x0, const GrfInput& u1, const GrfInput& u2,
                                  const PlantConfig& cfg, double t, double ts) {
  const int n = substeps_per_period(ts, cfg.dt);
  const double h = ts / n;
  PlantStepResult res;
  GlobalState x = x0;
  for (int i = 0; i < n; ++i) {
    const double ti = t + i * h;
    const PlantDerivative k1 = plant_rhs(cfg, x, u1, u2, ti);
    if (i == 0) res.lambda = k1.lambda;
    const PlantDerivative k2 = plant_rhs(cfg, x + 0.5 * h * k1.xdot, u1, u2, ti + 0.5 * h);
    const PlantDerivative k3 = plant_rhs(cfg, x + 0.5 * h * k2.xdot, u1, u2, ti + 0.5 * h);
    const PlantDerivative k4 = plant_rhs(cfg, x + h * k3.xdot, u1, u2, ti + h);
    x += (h / 6.0) * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
    if (!x.allFinite()) throw ConstraintBlowup("plant state became non-finite");
    const double r = max_constraint_residual(cfg.model, x);
    if (r > cfg.blowup_threshold) {
      throw ConstraintBlowup("constraint residual " + std::to_string(r) + " exceeds " +
                             std::to_string(cfg.blowup_threshold));
    }
  }
  res.x = x;
  return res;
}

// ---------------------------------------------------------------------------------------------
// Measurement.

namespace detail {

/// Payload pose (p, theta) implied by the two robot poses through the bracket geometry.
template <typename S>
Eigen::Matrix<S, 6, 1> payload_pose_from_robots(const Eigen::Matrix<S, 6, 1>& r0, const Eigen::Matrix<S, 6, 1>& r1,
                                                const AttachmentGeometry& geom) {
  using std::atan2;
  const Vec3<S> th0 = r0.template tail<3>(), th1 = r1.template tail<3>();
  const Vec3<S> a0 = r0.template head<3>() + rotation_from_euler<S>(th0) * geom.robot_offset[0].cast<S>();
  const Vec3<S> a1 = r1.template head<3>() + rotation_from_euler<S>(th1) * geom.robot_offset[1].cast<S>();
  const S roll = S(0.5) * (th0(0) + th1(0));
  const S pitch = S(0.5) * (th0(1) + th1(1));
  // Rz(yaw) maps the tilted payload-frame offset difference onto the measured one.
  const Vec3<S> e = rotation_from_euler<S>(Vec3<S>(roll, pitch, S(0))) *
                    (geom.payload_offset[1] - geom.payload_offset[0]).cast<S>();
  const Vec3<S> d = a1 - a0;
  S yaw = atan2(d(1), d(0)) - atan2(e(1), e(0));
  // Keep the same branch as the robots' yaw so unwrapped headings stay continuous.
  const double ref_yaw = 0.5 * (value_of(th0(2)) + value_of(th1(2)));
  yaw -= S(2.0 * M_PI * std::round((value_of(yaw) - ref_yaw) / (2.0 * M_PI)));
  const Vec3<S> theta(roll, pitch, yaw);
  const Mat3<S> rl = rotation_from_euler<S>(theta);
  const Vec3<S> p = S(0.5) * (a0 - rl * geom.payload_offset[0].cast<S>() + a1 - rl * geom.payload_offset[1].cast<S>());
  Eigen::Matrix<S, 6, 1> out;
  out << p, theta;
  return out;
}

}  // namespace detail

/// Payload state rebuilt from the robot states in `x`; velocities follow by differentiating the
/// pose reconstruction along the robots' pose rates.
inline Vector12d reconstruct_payload(const GlobalState& x, const AttachmentGeometry& geom) {
  Eigen::Matrix<double, 12, 1> pose, rate;
  for (int i = 0; i < kNumRobots; ++i) {
    const Vector12d xi = x.segment<12>(12 * i);
    pose.segment<6>(6 * i) << xi.head<3>(), xi.segment<3>(idx::kEuler);
    rate.segment<6>(6 * i) << xi.segment<3>(idx::kVel),
        euler_rate_map<double>(xi.segment<3>(idx::kEuler)) * xi.segment<3>(idx::kOmega);
  }
  auto [val, jac] = ad_jacobian<12>(
      [&](const auto& q) {
        using S = typename std::decay_t<decltype(q)>::Scalar;
        return detail::payload_pose_from_robots<S>(Eigen::Matrix<S, 6, 1>(q.template head<6>()),
                                                   Eigen::Matrix<S, 6, 1>(q.template tail<6>()), geom);
      },
      pose);
  const Vector6d pose_rate = jac * rate;
  Vector12d xl;
  xl.head<3>() = val.head<3>();
  xl.segment<3>(idx::kEuler) = val.tail<3>();
  xl.segment<3>(idx::kVel) = pose_rate.head<3>();
  xl.segment<3>(idx::kOmega) = euler_rate_to_omega<double>(val.tail<3>()) * pose_rate.tail<3>();
  return xl;
}

/// Measured global state. Noise, when configured, perturbs robot positions before any
/// reconstruction so it propagates into the payload estimate.
inline GlobalState measure(const GlobalState& x, const PlantConfig& cfg, std::mt19937_64* rng = nullptr) {
  GlobalState m = x;
  if (cfg.position_noise > 0.0 && rng != nullptr) {
    std::normal_distribution<double> noise(0.0, cfg.position_noise);
    for (int i = 0; i < kNumRobots; ++i) {
      for (int a = 0; a < 3; ++a) m(12 * i + a) += noise(*rng);
    }
  }
  if (cfg.measure == MeasureMode::kReconstructPayload) m.segment<12>(24) = reconstruct_payload(m, cfg.model.geom);
  return m;
}

}  // namespace pmpc
