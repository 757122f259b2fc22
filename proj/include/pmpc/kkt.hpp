#pragma once

// First-order optimality residuals of the transcribed NLP, recomputed from the model functions.

#include <algorithm>
#include <cmath>

#include "pmpc/ocp.hpp"

namespace pmpc {

struct KktTolerances {
  double stationarity = 1e-4;  // relative
  double equality = 1e-6;
  double inequality = 1e-6;
  double complementarity = 1e-6;
};

struct KktResiduals {
  double stationarity = 0.0;  // |grad L|_inf / max(|grad f|_inf, |J_eq' y|_inf, |J_in' mu|_inf)
  double stationarity_abs = 0.0;
  double equality = 0.0;        // |c_eq|_inf
  double inequality = 0.0;      // max(0, -min c_in)
  double dual = 0.0;            // max(0, -min mu)
  double complementarity = 0.0; // max |mu_j c_j| / max(1, |mu_j|)

  bool satisfied(const KktTolerances& tol) const {
    return stationarity < tol.stationarity && equality < tol.equality && inequality < tol.inequality &&
           dual < tol.inequality && complementarity < tol.complementarity;
  }
};

inline double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

inline KktResiduals kkt_residuals(const VectorXd& grad_f, const NlpValues& values, const NlpJacobian& jac,
                                  const Multipliers& mult) {
  KktResiduals r;
  const VectorXd eq_term = jac.eq.transpose() * mult.eq;
  const VectorXd in_term = jac.ineq.transpose() * mult.ineq;
  const VectorXd grad_l = grad_f - eq_term - in_term;
  r.stationarity_abs = inf_norm(grad_l);
  const double denom = std::max({inf_norm(grad_f), inf_norm(eq_term), inf_norm(in_term), 1e-12});
  r.stationarity = r.stationarity_abs / denom;
  r.equality = inf_norm(values.eq);
  if (values.ineq.size() > 0) {
    r.inequality = std::max(0.0, -values.ineq.minCoeff());
    r.dual = std::max(0.0, -mult.ineq.minCoeff());
    // Scaled per row so that exact-penalty slack bounds, whose multipliers sit near the penalty
    // weight, are judged on the same footing as O(1) rows.
    const VectorXd scale = mult.ineq.cwiseAbs().cwiseMax(1.0);
    r.complementarity = inf_norm(values.ineq.cwiseProduct(mult.ineq).cwiseQuotient(scale));
  }
  return r;
}

/// Independent check of a claimed solution: re-evaluates values and Jacobians from scratch.
inline KktResiduals check_kkt(const OcpProblem& p, const Trajectory& t, const Multipliers& mult) {
  if (mult.eq.size() != p.num_eq() || mult.ineq.size() != p.num_ineq()) {
    throw Error("multiplier vector has wrong dimension");
  }
  return kkt_residuals(cost_gradient(p, t), evaluate_nlp(p, t), nlp_jacobian(p, t), mult);
}

}  // namespace pmpc
