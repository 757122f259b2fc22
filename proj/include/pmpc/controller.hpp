#pragma once

// Receding-horizon controller: builds the OCP at each tick, warm-starts from the shifted previous
// solution, falls back to the shifted previous inputs when a QP subproblem fails.

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "pmpc/sqp.hpp"

namespace pmpc {

struct ControllerConfig {
  OcpSettings ocp;
  OcpWeights weights;
  HocbfParams hocbf;
  std::vector<Obstacle> obstacles;
  std::array<GaitParams, kNumRobots> gait{};
  SqpSettings sqp;
  // Run the independent KKT checker on every converged solve.
  bool certify_kkt = false;
};

struct ControlOutput {
  GrfInput u1 = GrfInput::Zero();
  GrfInput u2 = GrfInput::Zero();
  Vector5d l1 = Vector5d::Zero();  // predicted first-step interaction wrenches
  Vector5d l2 = Vector5d::Zero();
  SolveStatus status = SolveStatus::kConverged;
  int iterations = 0;
  KktResiduals kkt;
  bool kkt_certified = false;
  double cost = 0.0;
  SlackUsage slack;
  double solve_ms = 0.0;
};

/// Friction-pyramid projection of one robot's stance forces; swing forces are zeroed.
inline GrfInput project_to_pyramid(const GrfInput& u, const StanceFlags& stance, double mu, double fz_max) {
  GrfInput out = GrfInput::Zero();
  for (int f = 0; f < kNumFeet; ++f) {
    if (!stance[f]) continue;
    const double fz = std::clamp(u(3 * f + 2), 0.0, fz_max);
    out(3 * f) = std::clamp(u(3 * f), -mu * fz, mu * fz);
    out(3 * f + 1) = std::clamp(u(3 * f + 1), -mu * fz, mu * fz);
    out(3 * f + 2) = fz;
  }
  return out;
}

/// Shift a trajectory forward by `steps` stages, repeating the last entries.
inline Trajectory shift_trajectory(const Trajectory& t, int steps, int rows_per_stage) {
  Trajectory s = t;
  const int n = static_cast<int>(t.w.size());
  for (int k = 0; k <= n; ++k) s.x[k] = t.x[std::min(k + steps, n)];
  for (int k = 0; k < n; ++k) s.w[k] = t.w[std::min(k + steps, n - 1)];
  if (rows_per_stage > 0) {
    for (int k = 0; k < n; ++k) {
      s.slack.segment(k * rows_per_stage, rows_per_stage) =
          t.slack.segment(std::min(k + steps, n - 1) * rows_per_stage, rows_per_stage);
    }
  }
  return s;
}

class NmpcController {
 public:
  NmpcController(SystemModel nominal, ControllerConfig config)
      : model_(std::move(nominal)), config_(std::move(config)) {
    model_.validate();
  }

  /// One control tick. `refs` holds horizon + 1 global reference states starting at t.
  ControlOutput step(const GlobalState& x_measured, double t, const std::vector<VectorXd>& refs) {
    const int n = config_.ocp.horizon;
    std::vector<ContactSchedule> schedules;
    for (int r = 0; r < kNumRobots; ++r) {
      schedules.push_back(trot_schedule(t, n, config_.ocp.ts, config_.gait[r], model_.feet));
    }
    problem_ = build_ocp(x_measured, refs, schedules, config_.obstacles, config_.weights, config_.hocbf, model_,
                         config_.ocp);

    Trajectory guess;
    Multipliers guess_mult;
    if (last_) {
      const int steps = static_cast<int>(std::lround((t - last_t_) / config_.ocp.ts));
      const int rows = problem_.dims.n_bodies * static_cast<int>(config_.obstacles.size());
      guess = shift_trajectory(last_->trajectory, std::max(steps, 0), config_.ocp.safety ? rows : 0);
      if (steps == 0) guess_mult = last_->multipliers;
    } else {
      guess = initial_guess(problem_);
    }

    ControlOutput out;
    const auto start = std::chrono::steady_clock::now();
    try {
      SolveResult res = solve_ocp(problem_, guess, guess_mult, config_.sqp);
      out.status = res.status;
      out.iterations = res.iterations;
      out.kkt = res.kkt;
      out.cost = res.cost;
      out.slack = res.slack;
      out.solve_ms = res.solve_ms;
      if (config_.certify_kkt && res.status == SolveStatus::kConverged) {
        out.kkt_certified = check_kkt(problem_, res.trajectory, res.multipliers).satisfied(config_.sqp.tolerances);
      }
      last_ = std::move(res);
    } catch (const QpSubproblemFailure&) {
      out = fallback(guess);
    } catch (const SingularCoupling&) {
      out = fallback(guess);
    } catch (const GimbalProximity&) {
      out = fallback(guess);
    }
    if (out.status == SolveStatus::kInfeasibleFallback) {
      out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    last_t_ = t;

    const VectorXd& w0 = last_ ? last_->trajectory.w[0] : guess.w[0];
    out.u1 = project_to_pyramid(w0.segment<12>(0), schedules[0].stance[0], config_.ocp.friction, config_.ocp.fz_max);
    out.u2 = project_to_pyramid(w0.segment<12>(12), schedules[1].stance[0], config_.ocp.friction, config_.ocp.fz_max);
    out.l1 = w0.segment<5>(24);
    out.l2 = w0.segment<5>(29);
    solve_times_.push_back(out.solve_ms);
    return out;
  }

  void reset() {
    last_.reset();
    solve_times_.clear();
  }

  const OcpProblem& problem() const { return problem_; }
  const std::optional<SolveResult>& last_result() const { return last_; }
  const std::vector<double>& solve_times() const { return solve_times_; }
  const ControllerConfig& config() const { return config_; }

 private:
  ControlOutput fallback(const Trajectory& shifted) {
    ControlOutput out;
    out.status = SolveStatus::kInfeasibleFallback;
    SolveResult res;
    res.trajectory = shifted;
    res.status = SolveStatus::kInfeasibleFallback;
    last_ = std::move(res);
    return out;
  }

  SystemModel model_;
  ControllerConfig config_;
  OcpProblem problem_;
  std::optional<SolveResult> last_;
  double last_t_ = 0.0;
  std::vector<double> solve_times_;
};

}  // namespace pmpc
