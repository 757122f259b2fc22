#pragma once

// Default physical parameters and the nominal standing formation.

#include "pmpc/coupling.hpp"

namespace pmpc {

/// Solid-box inertia about the CoM.
inline Matrix3d box_inertia(double mass, double lx, double ly, double lz) {
  return Eigen::Vector3d(mass * (ly * ly + lz * lz) / 12.0, mass * (lx * lx + lz * lz) / 12.0,
                         mass * (lx * lx + ly * ly) / 12.0)
      .asDiagonal();
}

inline SrbParams default_robot(const std::string& name) {
  return {name, 15.0, box_inertia(15.0, 0.5, 0.25, 0.15)};
}

inline SrbParams default_payload(double mass = 5.0) {
  return {"payload", mass, box_inertia(mass, 1.2, 0.4, 0.1)};
}

inline SystemModel default_system_model(double payload_mass = 5.0) {
  SystemModel m;
  m.robots = {default_robot("robot0"), default_robot("robot1")};
  m.payload = default_payload(payload_mass);
  return m;
}

/// Robot CoM height at which the default feet touch the ground.
inline double standing_height(const FootLayout& feet) { return -feet[0].z(); }

/// Payload CoM pose and robot poses with coincident attachment points, all bodies sharing `yaw`,
/// at rest. `payload_xy` places the payload; robot heights follow from standing_height.
inline GlobalState formation_state(const SystemModel& model, const Eigen::Vector2d& payload_xy, double yaw) {
  GlobalState x = GlobalState::Zero();
  const Vector3d theta(0.0, 0.0, yaw);
  const Matrix3d rot = rotation_from_euler<double>(theta);
  const double z_robot = standing_height(model.feet);
  // Payload height from robot 0's bracket; all brackets share the same height offset.
  const double z_payload =
      z_robot + model.geom.robot_offset[0].z() - model.geom.payload_offset[0].z();
  const Vector3d pl(payload_xy.x(), payload_xy.y(), z_payload);
  x.segment<3>(24) = pl;
  x.segment<3>(24 + idx::kEuler) = theta;
  for (int i = 0; i < kNumRobots; ++i) {
    x.segment<3>(12 * i) = pl + rot * (model.geom.payload_offset[i] - model.geom.robot_offset[i]);
    x.segment<3>(12 * i + idx::kEuler) = theta;
  }
  return x;
}

}  // namespace pmpc
