#include "coxsg/crs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coxsg/numerics.hpp"

namespace coxsg {

namespace {

std::vector<double> core_scores(std::span<const double> beta,
                                const SurvivalDataset& core) {
  if (beta.size() != core.d_adjust())
    throw std::invalid_argument("rank probs: beta size mismatch");
  for (double b : beta)
    if (!std::isfinite(b)) throw std::invalid_argument("rank probs: non-finite beta");
  const std::size_t n = core.size(), d = core.d_adjust();
  const double* x = core.x_adjust.data();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) v += x[i * d + j] * beta[j];
    s[i] = v;
  }
  return s;
}

double dot_star(std::span<const double> beta, std::span<const double> x_star) {
  if (x_star.size() != beta.size())
    throw std::invalid_argument("rank probs: x_star size mismatch");
  double v = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) {
    if (!std::isfinite(x_star[j]))
      throw std::invalid_argument("rank probs: non-finite x_star");
    v += beta[j] * x_star[j];
  }
  return v;
}

void softmax_into(const std::vector<double>& log_r, std::vector<double>& crs) {
  const double m = *std::max_element(log_r.begin(), log_r.end());
  crs.resize(log_r.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < log_r.size(); ++k) {
    crs[k] = std::exp(log_r[k] - m);
    sum += crs[k];
  }
  for (double& v : crs) v /= sum;
}

}  // namespace

namespace detail {

RankProbabilities rank_probs_from_scores(std::span<const double> s,
                                         std::span<const std::uint8_t> ev,
                                         double s_star) {
  const std::size_t n = s.size();
  if (n == 0) throw std::invalid_argument("rank probs: empty core");

  // Suffix sums of core hazards, entirely in log space.
  std::vector<double> log_suffix(n + 1);
  log_suffix[n] = kNegInf;
  for (std::size_t i = n; i-- > 0;)
    log_suffix[i] = log_add_exp(s[i], log_suffix[i + 1]);

  RankProbabilities out;
  out.log_r.resize(n + 1);

  // Rank 1: the test point fails before the whole core.
  double lr = s_star - log_add_exp(log_suffix[0], s_star);
  for (std::size_t i = 0; i < n; ++i)
    if (ev[i]) lr += s[i] - log_suffix[i];
  out.log_r[0] = lr;

  // Ratio recursion: moving the insertion point past core element k swaps
  // one numerator/denominator pair.
  for (std::size_t k = 0; k < n; ++k) {
    const double num = ev[k] ? log_suffix[k] : log_add_exp(log_suffix[k], s_star);
    const double den = log_add_exp(log_suffix[k + 1], s_star);
    out.log_r[k + 1] = out.log_r[k] + num - den;
  }

  softmax_into(out.log_r, out.crs);
  return out;
}

TailScore rank_tail_from_scores(std::span<const double> s,
                                std::span<const double> times,
                                std::span<const std::uint8_t> ev,
                                double s_star, double t_star, bool event_star) {
  if (!std::isfinite(t_star) || t_star < 0.0)
    throw std::invalid_argument("rank_tail_score: bad t_star");
  const RankProbabilities probs = rank_probs_from_scores(s, ev, s_star);
  const std::size_t n = s.size();
  // Insertion rank, the test point placed after equal core times.
  std::size_t k_star = 1;
  for (std::size_t i = 0; i < n && times[i] <= t_star; ++i) ++k_star;

  double left = 0.0, right = 0.0;
  for (std::size_t k = 1; k <= k_star; ++k) left += probs.crs[k - 1];
  for (std::size_t k = k_star; k <= n + 1; ++k) right += probs.crs[k - 1];

  TailScore out;
  out.rank = k_star;
  out.censored = !event_star;
  out.tau = event_star ? std::min(left, right) : right;
  return out;
}

}  // namespace detail

RankProbabilities fast_log_rank_probs(std::span<const double> beta,
                                      const SurvivalDataset& core,
                                      std::span<const double> x_star) {
  const std::vector<double> s = core_scores(beta, core);
  return detail::rank_probs_from_scores(s, core.events, dot_star(beta, x_star));
}

RankProbabilities naive_log_rank_probs(std::span<const double> beta,
                                       const SurvivalDataset& core,
                                       std::span<const double> x_star) {
  const std::vector<double> s = core_scores(beta, core);
  const double s_star = dot_star(beta, x_star);
  const std::size_t n = core.size();

  // Literal product form: for every insertion rank build the merged
  // sequence and recompute every risk-set denominator from scratch.
  RankProbabilities out;
  out.log_r.resize(n + 1);
  std::vector<double> seq_s(n + 1);
  std::vector<std::uint8_t> seq_ev(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    for (std::size_t i = 0; i < k; ++i) {
      seq_s[i] = s[i];
      seq_ev[i] = core.events[i];
    }
    seq_s[k] = s_star;
    seq_ev[k] = 1;
    for (std::size_t i = k; i < n; ++i) {
      seq_s[i + 1] = s[i];
      seq_ev[i + 1] = core.events[i];
    }
    double lr = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      if (!seq_ev[i]) continue;
      double denom = 0.0;
      for (std::size_t j = i; j <= n; ++j) denom += std::exp(seq_s[j]);
      lr += seq_s[i] - std::log(denom);
    }
    out.log_r[k] = lr;
  }
  softmax_into(out.log_r, out.crs);
  return out;
}

TailScore rank_tail_score(std::span<const double> beta,
                          const SurvivalDataset& core,
                          std::span<const double> x_star, double t_star,
                          bool event_star) {
  const std::vector<double> s = core_scores(beta, core);
  return detail::rank_tail_from_scores(s, core.times, core.events,
                                       dot_star(beta, x_star), t_star,
                                       event_star);
}

}  // namespace coxsg
