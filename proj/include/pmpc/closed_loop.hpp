#pragma once

// Lockstep closed loop: measure, solve, hold the first GRFs over one control period, log.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pmpc/controller.hpp"
#include "pmpc/hocbf.hpp"
#include "pmpc/plant.hpp"
#include "pmpc/scenario.hpp"

namespace pmpc {

/// One control tick.
struct LogRow {
  double t = 0.0;
  GlobalState x = GlobalState::Zero();    // plant state at t
  GlobalState ref = GlobalState::Zero();  // reference at t
  Eigen::Matrix<double, 24, 1> grf = Eigen::Matrix<double, 24, 1>::Zero();
  Vector10d plant_lambda = Vector10d::Zero();
  Vector10d ctrl_lambda = Vector10d::Zero();
  Eigen::Vector2d phi = Eigen::Vector2d::Zero();  // max |residual component| per edge
  std::vector<double> h;                          // body-major: h[b * n_obs + l]
  int iterations = 0;
  SolveStatus status = SolveStatus::kConverged;
  double kkt_stationarity = 0.0;
  double kkt_equality = 0.0;
  double slack = 0.0;
  double cost = 0.0;
  int kkt_certified = 0;  // 1 certified, 0 failed, -1 not checked
  double solve_ms = 0.0;
  bool disturbance = false;
};

/// Everything needed to recompute the summary from a stored log.
struct RunMeta {
  std::string scenario;
  int horizon = 8;
  double ts = 0.01667;
  bool safety = true;
  HocbfParams hocbf;
  std::vector<Obstacle> obstacles;
  AnalysisSpec analysis;
  std::string termination = "completed";  // completed | constraint-blowup | error
  std::string message;
};

struct RunLog {
  RunMeta meta;
  std::vector<LogRow> rows;
  int num_obstacles() const { return static_cast<int>(meta.obstacles.size()); }
};

struct RunOptions {
  bool certify_kkt = false;
  std::function<void(const LogRow&)> on_tick;
};

inline RunMeta make_meta(const ScenarioSpec& spec) {
  RunMeta m;
  m.scenario = spec.name;
  m.horizon = spec.ocp.horizon;
  m.ts = spec.ocp.ts;
  m.safety = spec.ocp.safety;
  m.hocbf = spec.hocbf;
  m.obstacles = spec.obstacles;
  m.analysis = spec.analysis;
  return m;
}

inline std::vector<double> all_barriers(const GlobalState& x, const std::vector<Obstacle>& obstacles,
                                        const HocbfParams& params) {
  std::vector<double> h;
  for (int b = 0; b < 3; ++b) {
    for (const auto& o : obstacles) h.push_back(barrier<double>(x.segment<12>(12 * b), o, params));
  }
  return h;
}

inline RunLog run_closed_loop(const ScenarioSpec& spec, const RunOptions& opts = {}) {
  spec.validate();
  RunLog log;
  log.meta = make_meta(spec);

  ControllerConfig ccfg = spec.controller_config();
  ccfg.certify_kkt = opts.certify_kkt;
  NmpcController controller(spec.nominal, ccfg);
  const PlantConfig pcfg = spec.plant_config();
  pcfg.validate();
  std::mt19937_64 rng(spec.seed);

  const double ts = spec.ocp.ts;
  const long ticks = std::lround(spec.duration / ts);
  GlobalState x = initial_state(spec);
  for (long i = 0; i < ticks; ++i) {
    const double t = static_cast<double>(i) * ts;
    LogRow row;
    row.t = t;
    row.x = x;
    try {
      const GlobalState xm = measure(x, pcfg, &rng);
      const auto refs = generate_references(spec, t, spec.ocp.horizon, ts);
      const ControlOutput out = controller.step(xm, t, refs);
      GrfInput u1 = out.u1, u2 = out.u2;
      if (spec.zero_grf) u1.setZero(), u2.setZero();
      const PlantStepResult next = plant_step(x, u1, u2, pcfg, t, ts);

      row.ref = refs[0];
      row.grf << u1, u2;
      row.plant_lambda = next.lambda;
      row.ctrl_lambda << out.l1, out.l2;
      const Vector10d r = holonomic_residuals(spec.truth, x);
      row.phi << r.head<5>().cwiseAbs().maxCoeff(), r.tail<5>().cwiseAbs().maxCoeff();
      row.h = all_barriers(x, spec.obstacles, spec.hocbf);
      row.iterations = out.iterations;
      row.status = out.status;
      row.kkt_stationarity = out.kkt.stationarity;
      row.kkt_equality = out.kkt.equality;
      row.slack = out.slack.total;
      row.cost = out.cost;
      row.kkt_certified = (opts.certify_kkt && out.status == SolveStatus::kConverged) ? (out.kkt_certified ? 1 : 0) : -1;
      row.solve_ms = out.solve_ms;
      row.disturbance = disturbance_active(spec.disturbances, t);
      log.rows.push_back(row);
      if (opts.on_tick) opts.on_tick(row);
      x = next.x;
    } catch (const ConstraintBlowup& e) {
      log.meta.termination = "constraint-blowup";
      log.meta.message = e.what();
      break;
    } catch (const GimbalProximity& e) {
      log.meta.termination = "constraint-blowup";
      log.meta.message = e.what();
      break;
    } catch (const SingularCoupling& e) {
      log.meta.termination = "constraint-blowup";
      log.meta.message = e.what();
      break;
    }
  }
  return log;
}

}  // namespace pmpc
