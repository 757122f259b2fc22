#pragma once

// Forward-mode differentiation helpers on top of Eigen's AutoDiffScalar.
// Model code is templated on the scalar so the same expression yields values
// (double) and exact Jacobians (ADScalar<N>).

#include <Eigen/Dense>
#include <unsupported/Eigen/AutoDiff>

namespace pmpc {

template <int N>
using ADScalar = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;

inline double value_of(double x) { return x; }

template <typename Der>
double value_of(const Eigen::AutoDiffScalar<Der>& x) {
  return x.value();
}

/// Seed an N-vector of active variables.
template <int N>
Eigen::Matrix<ADScalar<N>, N, 1> ad_seed(const Eigen::Matrix<double, N, 1>& x) {
  Eigen::Matrix<ADScalar<N>, N, 1> out;
  for (int i = 0; i < N; ++i) {
    out(i) = ADScalar<N>(x(i), N, i);
  }
  return out;
}

/// Evaluates f at x and returns (value, Jacobian). `f` must be generic over the scalar type and
/// return a fixed or dynamic column vector of that scalar.
template <int N, typename F>
std::pair<Eigen::VectorXd, Eigen::MatrixXd> ad_jacobian(F&& f, const Eigen::Matrix<double, N, 1>& x) {
  const auto xs = ad_seed<N>(x);
  const auto ys = f(xs);
  const int m = static_cast<int>(ys.size());
  Eigen::VectorXd value(m);
  Eigen::MatrixXd jac(m, N);
  for (int i = 0; i < m; ++i) {
    value(i) = ys(i).value();
    if (ys(i).derivatives().size() == N) {
      jac.row(i) = ys(i).derivatives().transpose();
    } else {
      // Constant outputs carry an empty derivative vector.
      jac.row(i).setZero();
    }
  }
  return {value, jac};
}

}  // namespace pmpc
