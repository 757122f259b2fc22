#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "pmpc/autodiff.hpp"
#include "pmpc/spatial_math.hpp"

namespace pmpc {
namespace {

Vector3d random_angles(std::mt19937_64& rng, double pitch_limit = 1.2) {
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> pitch(-pitch_limit, pitch_limit);
  return {ang(rng), pitch(rng), ang(rng)};
}

TEST(Skew, ZeroVectorGivesZeroMatrix) {
  EXPECT_EQ(skew<double>(Vector3d::Zero()), Matrix3d::Zero());
}

TEST(Skew, UnitCrossProduct) {
  const Vector3d r = skew<double>(Vector3d::UnitX()) * Vector3d::UnitY();
  EXPECT_TRUE(r.isApprox(Vector3d::UnitZ()));
}

TEST(Skew, MatchesCrossProductAndIsAntisymmetric) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const Vector3d v(n(rng), n(rng), n(rng));
    const Vector3d w(n(rng), n(rng), n(rng));
    const Vector3d cross(v.y() * w.z() - v.z() * w.y(), v.z() * w.x() - v.x() * w.z(), v.x() * w.y() - v.y() * w.x());
    EXPECT_LT((skew<double>(v) * w - cross).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(skew<double>(v) + skew<double>(v).transpose(), Matrix3d::Zero());
  }
}

TEST(Rotation, IdentityAndPureYaw) {
  EXPECT_TRUE(rotation_from_euler<double>(Vector3d::Zero()).isApprox(Matrix3d::Identity()));
  const Matrix3d r = rotation_from_euler<double>(Vector3d(0, 0, std::numbers::pi / 2));
  EXPECT_LT((r * Vector3d::UnitX() - Vector3d::UnitY()).norm(), 1e-15);
}

TEST(Rotation, OrthonormalAndMatchesAxisComposition) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vector3d a = random_angles(rng);
    const Matrix3d r = rotation_from_euler<double>(a);
    EXPECT_LT((r.transpose() * r - Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
    // ZYX: R = Rz(yaw) Ry(pitch) Rx(roll).
    const Matrix3d ref = (Eigen::AngleAxisd(a(2), Vector3d::UnitZ()) * Eigen::AngleAxisd(a(1), Vector3d::UnitY()) *
                          Eigen::AngleAxisd(a(0), Vector3d::UnitX()))
                             .toRotationMatrix();
    EXPECT_LT((r - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Rotation, EulerRoundTripInsideGuardBand) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Vector3d a = random_angles(rng, std::numbers::pi / 2 - 0.1);
    EXPECT_LT((euler_from_rotation(rotation_from_euler<double>(a)) - a).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EulerRateMap, IdentityActionAtZeroAttitude) {
  EXPECT_TRUE(euler_rate_map<double>(Vector3d::Zero()).isApprox(Matrix3d::Identity()));
}

TEST(EulerRateMap, PureYawRate) {
  const Vector3d rate = euler_rate_map<double>(Vector3d(0, 0, 0.8)) * Vector3d(0, 0, 1.3);
  EXPECT_LT((rate - Vector3d(0, 0, 1.3)).norm(), 1e-15);
}

TEST(EulerRateMap, InverseOfOmegaMap) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Vector3d a = random_angles(rng);
    const Matrix3d prod = euler_rate_map<double>(a) * euler_rate_to_omega<double>(a);
    EXPECT_LT((prod - Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    const double cond = euler_rate_map<double>(a).jacobiSvd().singularValues().maxCoeff() /
                        euler_rate_map<double>(a).jacobiSvd().singularValues().minCoeff();
    EXPECT_TRUE(std::isfinite(cond));
  }
}

TEST(EulerRateMap, MatchesFiniteDifferenceOfIntegratedRotation) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  const double dt = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Vector3d a = random_angles(rng);
    const Vector3d w(n(rng), n(rng), n(rng));
    const Matrix3d r0 = rotation_from_euler<double>(a);
    // Exact flow of R_dot = skew(w) R over +-dt.
    const Matrix3d rp = Eigen::AngleAxisd(w.norm() * dt, w.normalized()).toRotationMatrix() * r0;
    const Matrix3d rm = Eigen::AngleAxisd(-w.norm() * dt, w.normalized()).toRotationMatrix() * r0;
    Vector3d fd = (euler_from_rotation(rp) - euler_from_rotation(rm)) / (2 * dt);
    const Vector3d exact = euler_rate_map<double>(a) * w;
    EXPECT_LT((fd - exact).norm() / std::max(1.0, exact.norm()), 1e-4);
  }
}

TEST(EulerRateMap, ThrowsInsideGimbalGuard) {
  EXPECT_THROW(euler_rate_map<double>(Vector3d(0, std::numbers::pi / 2 - 0.01, 0)), GimbalProximity);
  EXPECT_NO_THROW(euler_rate_map<double>(Vector3d(0, std::numbers::pi / 2 - 0.06, 0)));
}

TEST(FiniteDifference, IdentityFunction) {
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
  const Eigen::MatrixXd j = finite_difference_jacobian([](const Eigen::VectorXd& z) { return z; }, x);
  EXPECT_LT((j - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(FiniteDifference, HandComputablePolynomial) {
  const auto f = [](const Eigen::VectorXd& z) {
    Eigen::VectorXd y(2);
    y << z(0) * z(0), z(0) * z(1);
    return y;
  };
  Eigen::MatrixXd expected(2, 2);
  expected << 2, 0, 2, 1;
  EXPECT_LT((finite_difference_jacobian(f, Eigen::Vector2d(1, 2)) - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(AutoDiff, AgreesWithFiniteDifferenceOnRotation) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100; ++i) {
    const Vector3d a = random_angles(rng);
    const Vector3d v(0.3, -1.1, 0.7);
    auto [val, jac] = ad_jacobian<3>(
        [&](const auto& z) {
          using S = typename std::decay_t<decltype(z)>::Scalar;
          return Vec3<S>(rotation_from_euler<S>(Vec3<S>(z)) * v.cast<S>());
        },
        a);
    const Eigen::MatrixXd fd = finite_difference_jacobian(
        [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return rotation_from_euler<double>(Vector3d(z)) * v; }, a);
    EXPECT_LT((jac - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()), 1e-5);
    EXPECT_LT((val - rotation_from_euler<double>(a) * v).norm(), 1e-14);
  }
}

}  // namespace
}  // namespace pmpc
