#include "coxsg/cox.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "coxsg/errors.hpp"
#include "coxsg/numerics.hpp"

namespace coxsg {

namespace {

void compute_eta(std::span<const double> beta, const SurvivalDataset& data,
                 std::vector<double>& eta) {
  const std::size_t n = data.size(), d = data.d_adjust();
  eta.resize(n);
  const double* x = data.x_adjust.data();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += x[i * d + j] * beta[j];
    eta[i] = s;
  }
}

// Breslow log partial likelihood given precomputed eta and tie blocks.
double lpl_from_eta(const std::vector<double>& eta,
                    const std::vector<std::uint8_t>& events,
                    const std::vector<std::int32_t>& first_tied) {
  const std::int32_t n = static_cast<std::int32_t>(eta.size());
  double lpl = 0.0;
  double log_s = kNegInf;  // log suffix sum of exp(eta)
  std::int32_t block_end = n;
  for (std::int32_t i = n - 1; i >= 0; --i) {
    log_s = log_add_exp(log_s, eta[i]);
    if (first_tied[i] == i) {
      // Whole tie block [i, block_end) is now in the suffix; its events all
      // use this denominator.
      for (std::int32_t k = i; k < block_end; ++k)
        if (events[k]) lpl += eta[k] - log_s;
      block_end = i;
    }
  }
  return lpl;
}

// Gradient and negated Hessian of the Breslow log partial likelihood.
// Suffix sums of exp(eta) * (1, x, x x^T) are kept rescaled by their running
// maximum so no intermediate value overflows.
void grad_neg_hess(const std::vector<double>& eta, const SurvivalDataset& data,
                   const std::vector<std::int32_t>& first_tied,
                   std::vector<double>& grad, std::vector<double>& neg_hess) {
  const std::int32_t n = static_cast<std::int32_t>(eta.size());
  const std::size_t d = data.d_adjust();
  const double* x = data.x_adjust.data();
  grad.assign(d, 0.0);
  neg_hess.assign(d * d, 0.0);

  double m = kNegInf;
  double s0 = 0.0;
  std::vector<double> s1(d, 0.0), s2(d * d, 0.0);
  std::vector<double> mean(d), ratio(d * d);

  std::int32_t block_end = n;
  for (std::int32_t i = n - 1; i >= 0; --i) {
    const double e = eta[i];
    if (e > m) {
      const double f = m == kNegInf ? 0.0 : std::exp(m - e);
      s0 *= f;
      for (std::size_t a = 0; a < d; ++a) s1[a] *= f;
      for (std::size_t a = 0; a < d * d; ++a) s2[a] *= f;
      m = e;
    }
    const double w = std::exp(e - m);
    const double* xi = x + static_cast<std::size_t>(i) * d;
    s0 += w;
    for (std::size_t a = 0; a < d; ++a) {
      s1[a] += w * xi[a];
      for (std::size_t b = 0; b <= a; ++b) s2[a * d + b] += w * xi[a] * xi[b];
    }
    if (first_tied[i] == i) {
      std::int32_t n_ev = 0;
      for (std::int32_t k = i; k < block_end; ++k) {
        if (!data.events[k]) continue;
        ++n_ev;
        const double* xk = x + static_cast<std::size_t>(k) * d;
        for (std::size_t a = 0; a < d; ++a) grad[a] += xk[a];
      }
      if (n_ev > 0) {
        for (std::size_t a = 0; a < d; ++a) mean[a] = s1[a] / s0;
        for (std::size_t a = 0; a < d; ++a) {
          grad[a] -= n_ev * mean[a];
          for (std::size_t b = 0; b <= a; ++b)
            neg_hess[a * d + b] +=
                n_ev * (s2[a * d + b] / s0 - mean[a] * mean[b]);
        }
      }
      block_end = i;
    }
  }
  (void)ratio;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a + 1; b < d; ++b) neg_hess[a * d + b] = neg_hess[b * d + a];
}

// In-place Cholesky solve of (A) x = b for small symmetric positive definite
// A; returns false when a pivot collapses.
bool cholesky_solve(std::vector<double> a, std::vector<double> b,
                    std::size_t d, std::vector<double>& x) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    max_diag = std::max(max_diag, std::abs(a[i * d + i]));
  const double tol = std::max(max_diag, 1.0) * 1e-13;
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (!(diag > tol)) return false;
    const double root = std::sqrt(diag);
    a[j * d + j] = root;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = v / root;
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < d; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * d + k] * b[k];
    b[i] = v / a[i * d + i];
  }
  x.assign(d, 0.0);
  for (std::size_t ii = d; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < d; ++k) v -= a[k * d + ii] * x[k];
    x[ii] = v / a[ii * d + ii];
  }
  return true;
}

}  // namespace

double log_partial_likelihood(std::span<const double> beta,
                              const SurvivalDataset& data) {
  if (beta.size() != data.d_adjust())
    throw std::invalid_argument("log_partial_likelihood: beta size mismatch");
  for (double b : beta)
    if (!std::isfinite(b))
      throw std::invalid_argument("log_partial_likelihood: non-finite beta");
  std::vector<double> eta;
  compute_eta(beta, data, eta);
  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);
  return lpl_from_eta(eta, data.events, first_tied);
}

std::vector<double> risk_scores(std::span<const double> beta,
                                const SurvivalDataset& data) {
  if (beta.size() != data.d_adjust())
    throw std::invalid_argument("risk_scores: beta size mismatch");
  std::vector<double> eta;
  compute_eta(beta, data, eta);
  return eta;
}

CoxModel fit_cox(const SurvivalDataset& data, const FitOptions& opts) {
  const std::size_t d = data.d_adjust();
  if (d == 0) throw std::invalid_argument("fit_cox: no adjustment covariates");
  if (opts.ridge < 0.0 || !std::isfinite(opts.ridge))
    throw std::invalid_argument("fit_cox: ridge must be finite and >= 0");
  const std::size_t n_ev = data.n_events();
  if (n_ev < d + 1)
    throw FitError(FitError::Code::InsufficientEvents,
                   "fit_cox: " + std::to_string(n_ev) + " events for d1 = " +
                       std::to_string(d) + " (need at least d1 + 1)");

  std::vector<std::int32_t> first_tied, strict_after;
  tie_structure(data.times, first_tied, strict_after);

  CoxModel model;
  model.beta.assign(d, 0.0);
  model.ridge_used = opts.ridge;

  std::vector<double> eta, grad, neg_hess, step, trial(d), trial_eta;
  compute_eta(model.beta, data, eta);
  double ridge = opts.ridge;
  auto penalized = [&](const std::vector<double>& beta_v, double lpl_v) {
    double pen = 0.0;
    for (double b : beta_v) pen += b * b;
    return lpl_v - 0.5 * ridge * pen;
  };
  double lpl = lpl_from_eta(eta, data.events, first_tied);
  double f = penalized(model.beta, lpl);

  for (int it = 0; it < opts.max_iter; ++it) {
    model.iterations = it + 1;
    grad_neg_hess(eta, data, first_tied, grad, neg_hess);
    for (std::size_t a = 0; a < d; ++a) grad[a] -= ridge * model.beta[a];
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < opts.grad_tol) {
      model.converged = true;
      model.iterations = it;
      break;
    }

    // Solve (neg_hess + ridge I) step = grad, escalating ridge while singular.
    bool solved = false;
    while (true) {
      std::vector<double> a = neg_hess;
      for (std::size_t j = 0; j < d; ++j) a[j * d + j] += ridge;
      if (cholesky_solve(std::move(a), grad, d, step)) {
        solved = true;
        break;
      }
      const double bumped = ridge < 1e-8 ? 1e-8 : ridge * 100.0;
      if (bumped > 1.0 || bumped == ridge) break;
      ridge = bumped;
      model.ridge_bumped = true;
      model.ridge_used = ridge;
      // Penalty changed; refresh the objective and gradient consistently.
      f = penalized(model.beta, lpl);
      grad_neg_hess(eta, data, first_tied, grad, neg_hess);
      for (std::size_t a2 = 0; a2 < d; ++a2) grad[a2] -= ridge * model.beta[a2];
    }
    if (!solved) break;

    double t = 1.0;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      for (std::size_t a = 0; a < d; ++a) trial[a] = model.beta[a] + t * step[a];
      compute_eta(trial, data, trial_eta);
      const double trial_lpl = lpl_from_eta(trial_eta, data.events, first_tied);
      const double trial_f = penalized(trial, trial_lpl);
      if (trial_f > f) {
        const double df = trial_f - f;
        model.beta = trial;
        eta.swap(trial_eta);
        lpl = trial_lpl;
        f = trial_f;
        improved = true;
        if (df <= opts.rel_tol * (std::abs(f) + 1.0)) {
          model.converged = true;
          it = opts.max_iter;  // objective has flattened out
        }
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      // No uphill step exists along the Newton direction at any length we
      // tried; treat the current point as the optimum.
      grad_neg_hess(eta, data, first_tied, grad, neg_hess);
      for (std::size_t a = 0; a < d; ++a) grad[a] -= ridge * model.beta[a];
      double g2 = 0.0;
      for (double g : grad) g2 = std::max(g2, std::abs(g));
      model.converged = g2 < 1e-4;
      break;
    }
  }

  model.log_pl = lpl;
  return model;
}

}  // namespace coxsg
