// Cox proportional hazards model fit by Newton-Raphson on the log partial
// likelihood, Breslow convention for tied event times.
#pragma once

#include <span>
#include <vector>

#include "coxsg/dataset.hpp"

namespace coxsg {

struct CoxModel {
  std::vector<double> beta;
  double log_pl = 0.0;     // unpenalized log partial likelihood at beta
  bool converged = false;
  int iterations = 0;
  double ridge_used = 0.0;  // final ridge after any singular-Hessian bumps
  bool ridge_bumped = false;
};

struct FitOptions {
  double ridge = 0.0;
  int max_iter = 100;
  double grad_tol = 1e-9;    // max-norm of the penalized gradient
  double rel_tol = 1e-12;    // relative change of the penalized objective
};

// Breslow log partial likelihood: sum over events of x_i^T beta minus the
// log of sum_{j: t_j >= t_i} exp(x_j^T beta); tied failures share the full
// tie-block risk set.
double log_partial_likelihood(std::span<const double> beta,
                              const SurvivalDataset& data);

// Throws FitError::InsufficientEvents when the event count is < d1 + 1.
// A singular Hessian is retried with ridge bumped to max(ridge, 1e-8)
// (escalating if needed) and flagged via ridge_bumped.
CoxModel fit_cox(const SurvivalDataset& data, const FitOptions& opts = {});

// x_adjust * beta, one score per row.
std::vector<double> risk_scores(std::span<const double> beta,
                                const SurvivalDataset& data);

}  // namespace coxsg
