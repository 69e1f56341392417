#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"

#include "coxsg/crs.hpp"
#include "coxsg/synth.hpp"
#include "support/util.hpp"

using namespace coxsg;

namespace {

SurvivalDataset make_1d(std::vector<double> x, std::vector<double> times,
                        std::vector<std::uint8_t> events) {
  Matrix m(x.size(), 1, x);
  Matrix m2 = m;
  return make_dataset(std::move(m), std::move(m2), std::move(times),
                      std::move(events));
}

}  // namespace

TEST_CASE("fast recursion matches the literal product form") {
  const double censors[] = {0.0, 0.3, 0.8};
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double censor : censors) {
      const std::size_t n = 3 + (seed * 13) % 48;
      const std::size_t d1 = 1 + seed % 3;
      const SurvivalDataset core =
          testutil::random_dataset(seed * 3 + static_cast<std::uint64_t>(censor * 10),
                                   n, d1, censor, seed % 2 == 1);
      Rng rng(seed + 99);
      std::vector<double> beta(d1), x_star(d1);
      for (double& b : beta) b = 2.0 * rng.u01() - 1.0;
      for (double& v : x_star) v = 2.0 * rng.u01() - 1.0;

      const RankProbabilities fast = fast_log_rank_probs(beta, core, x_star);
      const RankProbabilities naive = naive_log_rank_probs(beta, core, x_star);
      REQUIRE(fast.log_r.size() == n + 1);
      REQUIRE(naive.log_r.size() == n + 1);
      for (std::size_t k = 0; k <= n; ++k)
        CHECK(std::fabs(fast.log_r[k] - naive.log_r[k]) <= 1e-8);
      double sum = 0.0;
      for (double p : fast.crs) {
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      ++checked;
    }
  }
  CHECK(checked == 60);
}

TEST_CASE("zero coefficients with all events give the uniform distribution") {
  for (std::size_t n : {1u, 2u, 7u, 25u}) {
    std::vector<double> x(n), times(n);
    std::vector<std::uint8_t> ev(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = 0.1 * static_cast<double>(i);
      times[i] = static_cast<double>(i + 1);  // distinct
    }
    const SurvivalDataset core = make_1d(x, times, ev);
    const std::vector<double> beta{0.0};
    const std::vector<double> x_star{0.5};
    const RankProbabilities rp = fast_log_rank_probs(beta, core, x_star);
    const double uniform = 1.0 / static_cast<double>(n + 1);
    for (double p : rp.crs) CHECK(p == doctest::Approx(uniform).epsilon(1e-12));
  }
}

TEST_CASE("insertion rank places the test point after equal core times") {
  // Core times 1, 2, 3, all events.
  const SurvivalDataset core =
      make_1d({0.2, -0.1, 0.4}, {1.0, 2.0, 3.0}, {1, 1, 1});
  const std::vector<double> beta{0.3};
  const std::vector<double> x_star{0.0};

  SUBCASE("strictly between core times") {
    const TailScore ts = rank_tail_score(beta, core, x_star, 2.5, true);
    CHECK(ts.rank == 3);  // after times 1 and 2
    CHECK_FALSE(ts.censored);
  }
  SUBCASE("tied with a core time goes after it") {
    const TailScore ts = rank_tail_score(beta, core, x_star, 2.0, true);
    CHECK(ts.rank == 3);
  }
  SUBCASE("before everything") {
    const TailScore ts = rank_tail_score(beta, core, x_star, 0.5, true);
    CHECK(ts.rank == 1);
  }
  SUBCASE("after everything") {
    const TailScore ts = rank_tail_score(beta, core, x_star, 9.0, true);
    CHECK(ts.rank == 4);
  }
}

TEST_CASE("tail score equals tails recomputed from the reference probabilities") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const std::size_t n = 4 + seed % 20;
    const SurvivalDataset core =
        testutil::random_dataset(seed + 500, n, 2, 0.3, seed % 2 == 0);
    Rng rng(seed);
    const std::vector<double> beta{2.0 * rng.u01() - 1.0, 2.0 * rng.u01() - 1.0};
    const std::vector<double> x_star{rng.u01(), rng.u01()};
    const double t_star = rng.exp1();
    const bool event_star = seed % 3 != 0;

    const TailScore ts = rank_tail_score(beta, core, x_star, t_star, event_star);
    const RankProbabilities rp = naive_log_rank_probs(beta, core, x_star);

    // Recompute the insertion rank: 1 + number of core times <= t_star.
    std::size_t k = 1;
    for (double t : core.times)
      if (t <= t_star) ++k;
    CHECK(ts.rank == k);
    CHECK(ts.censored == !event_star);

    double left = 0.0, right = 0.0;
    for (std::size_t r = 1; r <= k; ++r) left += rp.crs[r - 1];
    for (std::size_t r = k; r <= n + 1; ++r) right += rp.crs[r - 1];
    const double expected = event_star ? std::min(left, right) : right;
    CHECK(ts.tau == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("score-level wrappers agree with the dataset entry points") {
  const SurvivalDataset core = testutil::random_dataset(77, 30, 2, 0.3, true);
  const std::vector<double> beta{0.8, -0.5};
  const std::vector<double> x_star{0.25, -0.75};
  std::vector<double> s(core.size());
  for (std::size_t i = 0; i < core.size(); ++i)
    s[i] = beta[0] * core.x_adjust(i, 0) + beta[1] * core.x_adjust(i, 1);
  const double s_star = beta[0] * x_star[0] + beta[1] * x_star[1];

  const RankProbabilities a = fast_log_rank_probs(beta, core, x_star);
  const RankProbabilities b = detail::rank_probs_from_scores(s, core.events, s_star);
  REQUIRE(a.log_r.size() == b.log_r.size());
  for (std::size_t k = 0; k < a.log_r.size(); ++k)
    CHECK(a.log_r[k] == doctest::Approx(b.log_r[k]).epsilon(1e-14));

  const double t_star = 1.25;
  const TailScore ta = rank_tail_score(beta, core, x_star, t_star, true);
  const TailScore tb =
      detail::rank_tail_from_scores(s, core.times, core.events, s_star, t_star, true);
  CHECK(ta.tau == doctest::Approx(tb.tau).epsilon(1e-14));
  CHECK(ta.rank == tb.rank);
}

TEST_CASE("extreme test-point scores stay finite") {
  const SurvivalDataset core = testutil::random_dataset(5, 40, 1, 0.2, false);
  for (double scale : {40.0, -40.0}) {
    const std::vector<double> beta{scale};
    const std::vector<double> x_star{1.0};
    const RankProbabilities rp = fast_log_rank_probs(beta, core, x_star);
    double sum = 0.0;
    for (double p : rp.crs) {
      CHECK(std::isfinite(p));
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    const TailScore ts = rank_tail_score(beta, core, x_star, 0.9, true);
    CHECK(std::isfinite(ts.tau));
    CHECK(ts.tau >= 0.0);
  }
}
