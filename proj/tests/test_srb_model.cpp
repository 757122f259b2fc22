#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "pmpc/defaults.hpp"
#include "pmpc/srb_model.hpp"

namespace pmpc {
namespace {

Vector12d random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.3);
  Vector12d x;
  for (int i = 0; i < 12; ++i) x(i) = n(rng);
  x(idx::kPos + 2) += 0.3;
  return x;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

TEST(SrbParams, Validation) {
  SrbParams p = default_robot("r");
  EXPECT_NO_THROW(p.validate());
  p.mass = -1.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = default_robot("r");
  p.body_inertia(0, 1) = 0.01;
  EXPECT_THROW(p.validate(), ConfigError);
  p = default_robot("r");
  p.body_inertia(2, 2) = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(GrfMap, AllSwingIsZero) {
  ContactSchedule s;
  s.stance = {StanceFlags{false, false, false, false}};
  EXPECT_EQ(grf_map(SrbState{}, s, 0), (Eigen::Matrix<double, 6, 12>::Zero()));
}

TEST(GrfMap, FootBelowCom) {
  ContactSchedule s;
  s.feet = {Vector3d(0, 0, -0.28), Vector3d(0.2, 0.1, -0.28), Vector3d(-0.2, 0.1, -0.28), Vector3d(0, -0.1, -0.28)};
  s.stance = {StanceFlags{true, false, false, false}};
  GrfInput u = GrfInput::Zero();
  u(2) = 90.0;
  const Vector6d w = grf_map(SrbState{}, s, 0) * u;
  EXPECT_LT((w - (Vector6d() << 0, 0, 90, 0, 0, 0).finished()).norm(), 1e-12);
}

TEST(GrfMap, MatchesExplicitSummation) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 40.0);
  for (int i = 0; i < 100; ++i) {
    const SrbState st = SrbState::from_vec(random_state(rng));
    ContactSchedule s = trot_schedule(0.1 * i, 0, 0.01, GaitParams{});
    GrfInput u;
    for (int j = 0; j < 12; ++j) u(j) = n(rng);
    const Matrix3d r = rotation_from_euler<double>(st.theta);
    Vector6d ref = Vector6d::Zero();
    for (int f = 0; f < kNumFeet; ++f) {
      if (!s.stance[0][f]) continue;
      const Vector3d foot_world = st.p + r * s.feet[f];
      const Vector3d force = u.segment<3>(3 * f);
      ref.head<3>() += force;
      ref.tail<3>() += (foot_world - st.p).cross(force);
    }
    const Eigen::Matrix<double, 6, 12> e = grf_map(st, s, 0);
    EXPECT_LT((e * u - ref).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((grf_wrench<double>(st.vec(), u, s.stance[0], s.feet) - ref).cwiseAbs().maxCoeff(), 1e-12);
    for (int f = 0; f < kNumFeet; ++f) {
      if (!s.stance[0][f]) {
        EXPECT_EQ(e.middleCols<3>(3 * f), (Eigen::Matrix<double, 6, 3>::Zero()));
      }
    }
  }
}

TEST(SrbDynamics, FreeFall) {
  const SrbParams p = default_robot("r");
  const Vector12d dx = srb_continuous_rhs<double>(p, Vector12d::Zero(), Vector6d::Zero());
  EXPECT_LT((dx.segment<3>(idx::kVel) - Vector3d(0, 0, -kGravity)).norm(), 1e-15);
  EXPECT_EQ(dx.segment<3>(idx::kOmega), Vector3d::Zero());
}

TEST(SrbDynamics, HoverEquilibrium) {
  const SrbParams p = default_robot("r");
  Vector6d w = Vector6d::Zero();
  w(2) = p.mass * kGravity;
  Vector12d x = Vector12d::Zero();
  x(idx::kEuler + 2) = 0.7;
  EXPECT_LT(srb_continuous_rhs<double>(p, x, w).norm(), 1e-13);
}

TEST(SrbDynamics, TorqueFreeSpinConservesEnergy) {
  const SrbParams p = default_payload();
  Vector12d x = Vector12d::Zero();
  x.segment<3>(idx::kOmega) = Vector3d(0.4, -0.2, 0.9);
  const auto energy = [&](const Vector12d& s) {
    const Matrix3d r = rotation_from_euler<double>(s.segment<3>(idx::kEuler));
    const Vector3d w = s.segment<3>(idx::kOmega);
    return 0.5 * w.dot(r * p.body_inertia * r.transpose() * w);
  };
  const double e0 = energy(x);
  Vector6d zero_g = Vector6d::Zero();
  zero_g(2) = p.mass * kGravity;
  for (int i = 0; i < 10000; ++i) x = discretize<double>(p, x, zero_g, 1e-4);
  EXPECT_LT(std::abs(energy(x) - e0), 1e-6);
}

TEST(Discretize, HoverStateUnchanged) {
  const SrbParams p = default_robot("r");
  SrbState s;
  s.p = Vector3d(1, 2, 0.28);
  const SrbState next = discretize(p, s, NetWrench{Vector3d(0, 0, p.mass * kGravity), Vector3d::Zero()}, 0.01667);
  EXPECT_LT((next.vec() - s.vec()).norm(), 1e-14);
}

TEST(Discretize, BallisticFreeFall) {
  const SrbState next = discretize(default_robot("r"), SrbState{}, NetWrench{}, 0.1);
  EXPECT_NEAR(next.v.z(), -0.981, 1e-12);
  EXPECT_NEAR(next.p.z(), -0.04905, 1e-12);
}

TEST(Discretize, RejectsNonPositiveStep) {
  EXPECT_THROW(discretize(default_robot("r"), SrbState{}, NetWrench{}, 0.0), ConfigError);
}

TEST(Discretize, MatchesFineIntegration) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  const SrbParams p = default_robot("r");
  const double dt = 0.01667;
  for (int i = 0; i < 50; ++i) {
    const Vector12d x = random_state(rng);
    // Forces and torques of the size stance feet produce on a standing robot.
    Vector6d w;
    for (int j = 0; j < 6; ++j) w(j) = (j < 3 ? 20.0 : 2.0) * n(rng);
    w(2) += p.mass * kGravity;
    Vector12d fine = x;
    for (int k = 0; k < 100; ++k) fine = discretize<double>(p, fine, w, dt / 100);
    EXPECT_LT((discretize<double>(p, x, w, dt) - fine).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Discretize, JacobianMatchesFiniteDifference) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> n(0.0, 1.0);
  const SrbParams p = default_robot("r");
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix<double, 18, 1> z;
    z << random_state(rng), 30.0 * Vector6d::NullaryExpr([&] { return n(rng); });
    const auto [val, jac] = discretize_jacobian(p, z.head<12>(), z.tail<6>(), 0.01667);
    const Eigen::MatrixXd fd = finite_difference_jacobian(
        [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
          return discretize<double>(p, Vector12d(q.head<12>()), Vector6d(q.tail<6>()), 0.01667);
        },
        z);
    EXPECT_LT(rel_err(jac, fd), 1e-5) << "sample " << i;
    const auto [rv, rj] = rhs_jacobian(p, z.head<12>(), z.tail<6>());
    const Eigen::MatrixXd rfd = finite_difference_jacobian(
        [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
          return srb_continuous_rhs<double>(p, Vector12d(q.head<12>()), Vector6d(q.tail<6>()));
        },
        z);
    EXPECT_LT(rel_err(rj, rfd), 1e-5) << "sample " << i;
  }
}

TEST(Discretize, MomentumConstantWithoutGravityOrInput) {
  const SrbParams p = default_payload();
  Vector12d x = Vector12d::Zero();
  x.segment<3>(idx::kVel) = Vector3d(0.3, -0.1, 0.2);
  x.segment<3>(idx::kOmega) = Vector3d(0.5, 0.2, -0.4);
  const auto angular = [&](const Vector12d& s) {
    const Matrix3d r = rotation_from_euler<double>(s.segment<3>(idx::kEuler));
    return Vector3d(r * p.body_inertia * r.transpose() * s.segment<3>(idx::kOmega));
  };
  const Vector3d l0 = angular(x);
  const Vector3d v0 = x.segment<3>(idx::kVel);
  for (int i = 0; i < 200; ++i) x = discretize<double>(p, x, Vector6d::Zero(), 0.005, 0.0);
  EXPECT_LT((x.segment<3>(idx::kVel) - v0).norm(), 1e-14);
  EXPECT_LT((angular(x) - l0).norm(), 1e-7);
}

TEST(Trot, PhaseOriginAndAlternation) {
  const GaitParams g;
  EXPECT_EQ(trot_stance_at(0.0, g), (StanceFlags{true, false, false, true}));
  EXPECT_EQ(trot_stance_at(0.5 * g.period, g), (StanceFlags{false, true, true, false}));
}

TEST(Trot, TwoFeetInStanceAndHalfDutyCycle) {
  const GaitParams g;
  const int samples = 4000;
  std::array<int, kNumFeet> count{};
  for (int i = 0; i < samples; ++i) {
    const StanceFlags s = trot_stance_at(g.period * i / samples, g);
    int n = 0;
    for (int f = 0; f < kNumFeet; ++f) {
      n += s[f];
      count[f] += s[f];
    }
    EXPECT_EQ(n, 2);
  }
  for (int f = 0; f < kNumFeet; ++f) EXPECT_EQ(count[f], samples / 2);
}

TEST(Trot, ScheduleCoversHorizonNodes) {
  const ContactSchedule s = trot_schedule(0.0, 8, 0.01667, GaitParams{});
  EXPECT_EQ(s.steps(), 9);
  for (int k = 0; k < s.steps(); ++k) EXPECT_EQ(s.stance_count(k), 2);
  EXPECT_THROW(trot_schedule(0.0, 8, 0.01667, GaitParams{0.0, 0.0}), ConfigError);
}

}  // namespace
}  // namespace pmpc
