#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmpc/autodiff.hpp"
#include "pmpc/coupling.hpp"
#include "pmpc/errors.hpp"
#include "pmpc/srb_model.hpp"

namespace pmpc {

/// Static point obstacle in the xy-plane. Its physical radius is folded into d_th.
struct Obstacle {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  int id = 0;
};

/// Distance margin and the slopes of the linear class-K functions alpha_j(s) = gain_j * s.
struct HocbfParams {
  double d_th = 0.5;
  double alpha1_gain = 0.4;
  double alpha2_gain = 0.04;

  void validate() const {
    if (!(d_th > 0.0)) throw ConfigError("d_th must be positive");
    // A linear class-K function with alpha(s) < s needs a slope in (0, 1).
    if (!(alpha1_gain > 0.0 && alpha1_gain < 1.0) || !(alpha2_gain > 0.0 && alpha2_gain < 1.0)) {
      throw ConfigError("class-K gains must lie in (0, 1)");
    }
  }
};

constexpr double kMinObstacleDistance = 1e-6;

/// h = ||p_xy - o|| - d_th for one body.
template <typename S>
S barrier(const Vec12<S>& x, const Obstacle& obs, const HocbfParams& params) {
  using std::sqrt;
  const S dx = x(idx::kPos) - S(obs.position.x());
  const S dy = x(idx::kPos + 1) - S(obs.position.y());
  const S dist = sqrt(dx * dx + dy * dy);
  if (value_of(dist) <= kMinObstacleDistance) {
    throw DegenerateDistance("CoM projection coincides with obstacle " + std::to_string(obs.id));
  }
  return dist - S(params.d_th);
}

inline double barrier(const SrbState& s, const Obstacle& obs, const HocbfParams& params) {
  return barrier<double>(s.vec(), obs, params);
}

/// Gradient of h w.r.t. the body's (x, y) position.
inline Eigen::Vector2d barrier_gradient_xy(const Vector12d& x, const Obstacle& obs) {
  const Eigen::Vector2d d = x.head<2>() - obs.position;
  const double n = d.norm();
  if (n <= kMinObstacleDistance) {
    throw DegenerateDistance("CoM projection coincides with obstacle " + std::to_string(obs.id));
  }
  return d / n;
}

/// (body, obstacle) index pair. Bodies: 0, 1 robots, 2 payload.
struct BarrierPair {
  int body = 0;
  int obstacle = 0;
};

inline Vector12d body_state(const GlobalState& x, int body) { return x.segment<12>(12 * body); }

inline double barrier(const GlobalState& x, const BarrierPair& pair, const std::vector<Obstacle>& obstacles,
                      const HocbfParams& params) {
  return barrier<double>(body_state(x, pair.body), obstacles.at(pair.obstacle), params);
}

/// psi_1 from barrier values at consecutive samples.
inline double psi1_from_h(double h_now, double h_next, const HocbfParams& params) {
  return (h_next - h_now) + params.alpha1_gain * h_now;
}

/// psi_2 built recursively from psi_1 at consecutive samples.
inline double psi2_from_h(double h0, double h1, double h2, const HocbfParams& params) {
  const double p_now = psi1_from_h(h0, h1, params);
  const double p_next = psi1_from_h(h1, h2, params);
  return (p_next - p_now) + params.alpha2_gain * p_now;
}

/// Coefficients c with psi_2 = c0 h_k + c1 h_{k+1} + c2 h_{k+2} for linear gains.
inline Eigen::Vector3d psi2_coefficients(const HocbfParams& params) {
  const double a1 = params.alpha1_gain, a2 = params.alpha2_gain;
  return {(1.0 - a1) * (1.0 - a2), -(2.0 - a1 - a2), 1.0};
}

inline double psi1(const GlobalState& x_now, const GlobalState& x_next, const BarrierPair& pair,
                   const std::vector<Obstacle>& obstacles, const HocbfParams& params) {
  return psi1_from_h(barrier(x_now, pair, obstacles, params), barrier(x_next, pair, obstacles, params), params);
}

inline double psi2(const GlobalState& x_now, const GlobalState& x_next, const GlobalState& x_next2,
                   const BarrierPair& pair, const std::vector<Obstacle>& obstacles, const HocbfParams& params) {
  return psi2_from_h(barrier(x_now, pair, obstacles, params), barrier(x_next, pair, obstacles, params),
                     barrier(x_next2, pair, obstacles, params), params);
}

// ---------------------------------------------------------------------------------------------
// Forward-invariance monitor over a closed-loop log.

struct ViolationInterval {
  double t_start = 0.0;
  double t_end = 0.0;  // first recovered sample, or last sample when not recovered
  double min_value = 0.0;
  int samples = 0;
  bool recovered = false;
  bool transient = false;
};

struct PairReport {
  BarrierPair pair;
  double min_psi0 = 0.0;
  double min_psi1 = 0.0;
  std::vector<ViolationInterval> psi0_violations;
  std::vector<ViolationInterval> psi1_violations;
};

struct InvarianceReport {
  std::vector<PairReport> pairs;
  int transient_violations = 0;
  int persistent_violations = 0;
  double min_psi0 = 0.0;
  double min_psi1 = 0.0;

  bool violation_free() const { return transient_violations == 0 && persistent_violations == 0; }
};

struct MonitorOptions {
  double transient_limit_s = 0.5;
  // Allowance on psi_1 for plant/model mismatch; psi_0 is always judged against zero.
  double psi1_tolerance = 0.0;
};

namespace detail {

inline std::vector<ViolationInterval> find_violations(const std::vector<double>& t, const std::vector<double>& v,
                                                      double threshold, double transient_limit) {
  std::vector<ViolationInterval> out;
  const size_t n = v.size();
  size_t k = 0;
  while (k < n) {
    if (!(v[k] < threshold)) {
      ++k;
      continue;
    }
    ViolationInterval iv;
    iv.t_start = t[k];
    iv.min_value = v[k];
    while (k < n && v[k] < threshold) {
      iv.min_value = std::min(iv.min_value, v[k]);
      ++iv.samples;
      ++k;
    }
    iv.recovered = k < n;
    iv.t_end = iv.recovered ? t[k] : t[n - 1];
    iv.transient = iv.recovered && (iv.t_end - iv.t_start) < transient_limit;
    out.push_back(iv);
  }
  return out;
}

}  // namespace detail

/// Classifies barrier-series violations. `h[p]` is the series for `pairs[p]` sampled at `times`.
inline InvarianceReport invariance_monitor_series(const std::vector<double>& times,
                                                  const std::vector<BarrierPair>& pairs,
                                                  const std::vector<std::vector<double>>& h,
                                                  const HocbfParams& params, const MonitorOptions& opts = {}) {
  InvarianceReport rep;
  rep.min_psi0 = std::numeric_limits<double>::infinity();
  rep.min_psi1 = std::numeric_limits<double>::infinity();
  for (size_t p = 0; p < pairs.size(); ++p) {
    const auto& hs = h.at(p);
    PairReport pr;
    pr.pair = pairs[p];
    pr.min_psi0 = std::numeric_limits<double>::infinity();
    pr.min_psi1 = std::numeric_limits<double>::infinity();
    for (double v : hs) pr.min_psi0 = std::min(pr.min_psi0, v);
    std::vector<double> p1;
    std::vector<double> t1;
    for (size_t k = 0; k + 1 < hs.size(); ++k) {
      p1.push_back(psi1_from_h(hs[k], hs[k + 1], params));
      t1.push_back(times[k]);
      pr.min_psi1 = std::min(pr.min_psi1, p1.back());
    }
    pr.psi0_violations = detail::find_violations(times, hs, 0.0, opts.transient_limit_s);
    pr.psi1_violations = detail::find_violations(t1, p1, -opts.psi1_tolerance, opts.transient_limit_s);
    for (const auto& iv : pr.psi0_violations) {
      (iv.transient ? rep.transient_violations : rep.persistent_violations) += 1;
    }
    rep.min_psi0 = std::min(rep.min_psi0, pr.min_psi0);
    rep.min_psi1 = std::min(rep.min_psi1, pr.min_psi1);
    rep.pairs.push_back(std::move(pr));
  }
  return rep;
}

inline std::vector<BarrierPair> all_barrier_pairs(int num_bodies, int num_obstacles) {
  std::vector<BarrierPair> pairs;
  for (int b = 0; b < num_bodies; ++b) {
    for (int l = 0; l < num_obstacles; ++l) pairs.push_back({b, l});
  }
  return pairs;
}

/// Monitor over logged global states.
inline InvarianceReport invariance_monitor(const std::vector<double>& times, const std::vector<GlobalState>& states,
                                           const std::vector<Obstacle>& obstacles, const HocbfParams& params,
                                           const MonitorOptions& opts = {}) {
  const auto pairs = all_barrier_pairs(3, static_cast<int>(obstacles.size()));
  std::vector<std::vector<double>> h(pairs.size());
  for (size_t p = 0; p < pairs.size(); ++p) {
    h[p].reserve(states.size());
    for (const auto& x : states) h[p].push_back(barrier(x, pairs[p], obstacles, params));
  }
  return invariance_monitor_series(times, pairs, h, params, opts);
}

}  // namespace pmpc
