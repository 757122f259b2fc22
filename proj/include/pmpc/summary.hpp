#pragma once

// Run summary: a pure function of the run log. Wall-clock solve times are kept out of the summary
// so repeated runs produce identical text; they are reported separately.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "pmpc/hocbf.hpp"
#include "pmpc/run_log.hpp"

namespace pmpc {

struct PairSummary {
  int body = 0;
  int obstacle = 0;
  double min_h = std::numeric_limits<double>::infinity();
};

struct RunSummary {
  std::string scenario;
  std::string termination;
  int horizon = 0;
  double ts = 0.0;
  bool safety = true;
  long samples = 0;
  double duration = 0.0;
  std::vector<PairSummary> pairs;
  double min_h = std::numeric_limits<double>::infinity();
  int transient_violations = 0;
  int persistent_violations = 0;
  double longest_violation = 0.0;  // s
  long tracking_samples = 0;
  double velocity_rmse = 0.0;  // m/s, all bodies, obstacle-free samples
  double yaw_rmse = 0.0;       // rad, payload
  double total_slack = 0.0;
  double max_phi = 0.0;
  double lambda_discrepancy = 0.0;  // RMS relative
  long converged = 0;
  long iteration_capped = 0;
  long fallbacks = 0;
  long kkt_checked = 0;
  long kkt_certified = 0;
  double mean_iterations = 0.0;

  bool safe() const { return persistent_violations == 0; }
};

struct TimingSummary {
  long solves = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double max_ms = 0.0;
};

/// True when every body's reference position is at least `clearance` away from all obstacles.
inline bool obstacle_free(const LogRow& r, const std::vector<Obstacle>& obstacles, double clearance) {
  for (int b = 0; b < 3; ++b) {
    const Eigen::Vector2d p = r.ref.segment<2>(12 * b);
    for (const auto& o : obstacles) {
      if ((p - o.position).norm() < clearance) return false;
    }
  }
  return true;
}

inline RunSummary summarize(const RunLog& log) {
  RunSummary s;
  s.scenario = log.meta.scenario;
  s.termination = log.meta.termination;
  s.horizon = log.meta.horizon;
  s.ts = log.meta.ts;
  s.safety = log.meta.safety;
  s.samples = static_cast<long>(log.rows.size());
  s.duration = log.rows.empty() ? 0.0 : log.rows.back().t + log.meta.ts;
  const int n_obs = log.num_obstacles();

  // Barrier statistics and violation classification.
  std::vector<double> times;
  std::vector<std::vector<double>> series(3 * n_obs);
  for (const auto& r : log.rows) {
    times.push_back(r.t);
    for (int j = 0; j < 3 * n_obs; ++j) series[j].push_back(r.h[j]);
  }
  std::vector<BarrierPair> pairs = all_barrier_pairs(3, n_obs);
  for (const auto& p : pairs) {
    PairSummary ps{p.body, p.obstacle};
    for (double h : series[p.body * n_obs + p.obstacle]) ps.min_h = std::min(ps.min_h, h);
    s.min_h = std::min(s.min_h, ps.min_h);
    s.pairs.push_back(ps);
  }
  MonitorOptions mo;
  mo.transient_limit_s = log.meta.analysis.transient_limit;
  const InvarianceReport rep = invariance_monitor_series(times, pairs, series, log.meta.hocbf, mo);
  s.transient_violations = rep.transient_violations;
  s.persistent_violations = rep.persistent_violations;
  for (const auto& pr : rep.pairs) {
    for (const auto& v : pr.psi0_violations) s.longest_violation = std::max(s.longest_violation, v.t_end - v.t_start);
  }

  // Tracking, constraint drift, wrench consistency, solver outcomes.
  double v_sq = 0.0, yaw_sq = 0.0, dl_sq = 0.0, l_sq = 0.0, iters = 0.0;
  for (const auto& r : log.rows) {
    if (r.t >= log.meta.analysis.settle_time &&
        obstacle_free(r, log.meta.obstacles, log.meta.analysis.obstacle_clearance)) {
      for (int b = 0; b < 3; ++b) {
        v_sq += (r.x.segment<2>(12 * b + idx::kVel) - r.ref.segment<2>(12 * b + idx::kVel)).squaredNorm();
      }
      const double dy = r.x(24 + idx::kEuler + 2) - r.ref(24 + idx::kEuler + 2);
      yaw_sq += dy * dy;
      ++s.tracking_samples;
    }
    s.total_slack += r.slack;
    s.max_phi = std::max(s.max_phi, r.phi.maxCoeff());
    dl_sq += (r.plant_lambda - r.ctrl_lambda).squaredNorm();
    l_sq += r.plant_lambda.squaredNorm();
    iters += r.iterations;
    switch (r.status) {
      case SolveStatus::kConverged:
        ++s.converged;
        break;
      case SolveStatus::kMaxIterations:
        ++s.iteration_capped;
        break;
      case SolveStatus::kInfeasibleFallback:
        ++s.fallbacks;
        break;
    }
    if (r.kkt_certified >= 0) {
      ++s.kkt_checked;
      s.kkt_certified += r.kkt_certified;
    }
  }
  if (s.tracking_samples > 0) {
    s.velocity_rmse = std::sqrt(v_sq / (3.0 * s.tracking_samples));
    s.yaw_rmse = std::sqrt(yaw_sq / s.tracking_samples);
  }
  if (l_sq > 0.0) s.lambda_discrepancy = std::sqrt(dl_sq / l_sq);
  if (s.samples > 0) s.mean_iterations = iters / s.samples;
  if (s.pairs.empty()) s.min_h = 0.0;
  return s;
}

inline TimingSummary timing(const RunLog& log) {
  TimingSummary t;
  t.solves = static_cast<long>(log.rows.size());
  if (t.solves == 0) return t;
  for (const auto& r : log.rows) {
    t.mean_ms += r.solve_ms;
    t.max_ms = std::max(t.max_ms, r.solve_ms);
  }
  t.mean_ms /= t.solves;
  for (const auto& r : log.rows) t.std_ms += (r.solve_ms - t.mean_ms) * (r.solve_ms - t.mean_ms);
  t.std_ms = std::sqrt(t.std_ms / t.solves);
  return t;
}

inline std::string summary_yaml(const RunSummary& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(12);
  out << YAML::BeginMap;
  out << YAML::Key << "scenario" << YAML::Value << s.scenario;
  out << YAML::Key << "termination" << YAML::Value << s.termination;
  out << YAML::Key << "horizon" << YAML::Value << s.horizon;
  out << YAML::Key << "ts_s" << YAML::Value << s.ts;
  out << YAML::Key << "safety_constraints" << YAML::Value << s.safety;
  out << YAML::Key << "samples" << YAML::Value << s.samples;
  out << YAML::Key << "duration_s" << YAML::Value << s.duration;
  out << YAML::Key << "safety" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "min_h_m" << YAML::Value << s.min_h;
  out << YAML::Key << "transient_violations" << YAML::Value << s.transient_violations;
  out << YAML::Key << "persistent_violations" << YAML::Value << s.persistent_violations;
  out << YAML::Key << "longest_violation_s" << YAML::Value << s.longest_violation;
  out << YAML::Key << "total_slack" << YAML::Value << s.total_slack;
  out << YAML::Key << "pairs" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : s.pairs) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "body" << YAML::Value << p.body << YAML::Key << "obstacle"
        << YAML::Value << p.obstacle << YAML::Key << "min_h_m" << YAML::Value << p.min_h << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::Key << "tracking" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "samples" << YAML::Value << s.tracking_samples;
  out << YAML::Key << "velocity_rmse_mps" << YAML::Value << s.velocity_rmse;
  out << YAML::Key << "payload_yaw_rmse_rad" << YAML::Value << s.yaw_rmse;
  out << YAML::EndMap;
  out << YAML::Key << "coupling" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_phi" << YAML::Value << s.max_phi;
  out << YAML::Key << "lambda_rms_discrepancy" << YAML::Value << s.lambda_discrepancy;
  out << YAML::EndMap;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "converged" << YAML::Value << s.converged;
  out << YAML::Key << "iteration_capped" << YAML::Value << s.iteration_capped;
  out << YAML::Key << "fallbacks" << YAML::Value << s.fallbacks;
  out << YAML::Key << "mean_iterations" << YAML::Value << s.mean_iterations;
  out << YAML::Key << "kkt_checked" << YAML::Value << s.kkt_checked;
  out << YAML::Key << "kkt_certified" << YAML::Value << s.kkt_certified;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline std::string timing_yaml(const TimingSummary& t) {
  YAML::Emitter out;
  out.SetDoublePrecision(6);
  out << YAML::BeginMap;
  out << YAML::Key << "solves" << YAML::Value << t.solves;
  out << YAML::Key << "mean_ms" << YAML::Value << t.mean_ms;
  out << YAML::Key << "std_ms" << YAML::Value << t.std_ms;
  out << YAML::Key << "max_ms" << YAML::Value << t.max_ms;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace pmpc
