#include <cmath>
#include <vector>

#include "doctest.h"

#include "coxsg/errors.hpp"
#include "coxsg/metrics.hpp"
#include "coxsg/synth.hpp"
#include "support/oracles.hpp"
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

TEST_CASE("empirical_epe matches the literal pairwise definition") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const std::size_t n = 4 + (seed * 11) % 120;
    const std::size_t d = 1 + seed % 3;
    const double censor = (seed % 3) * 0.25;
    const SurvivalDataset data =
        testutil::random_dataset(seed, n, d, censor, seed % 2 == 0);
    Rng rng(seed + 7);
    std::vector<double> beta(d);
    for (double& b : beta) b = 3.0 * (rng.u01() - 0.5);
    const double fast = empirical_epe(beta, data);
    const double ref = oracle::epe_literal(beta, data);
    CHECK(std::fabs(fast - ref) <= 1e-10);
  }
}

TEST_CASE("empirical_epe at beta=0 is exactly log 2") {
  const double log2 = std::log(2.0);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const double censor = (seed % 4) * 0.2;
    const SurvivalDataset data =
        testutil::random_dataset(seed + 40, 30 + seed * 17, 2, censor, true);
    const std::vector<double> beta{0.0, 0.0};
    CHECK(empirical_epe(beta, data) == doctest::Approx(log2).epsilon(1e-12));
  }
}

TEST_CASE("empirical_epe throws when no pair is comparable") {
  const std::vector<double> beta{0.0};
  SUBCASE("all times equal") {
    const SurvivalDataset d = make_1d({0.1, 0.2, 0.3}, {2.0, 2.0, 2.0}, {1, 1, 1});
    CHECK_THROWS_AS(empirical_epe(beta, d), MetricError);
  }
  SUBCASE("all censored") {
    const SurvivalDataset d = make_1d({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}, {0, 0, 0});
    CHECK_THROWS_AS(empirical_epe(beta, d), MetricError);
  }
  SUBCASE("only the last point is an event") {
    const SurvivalDataset d = make_1d({0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}, {0, 0, 1});
    try {
      empirical_epe(beta, d);
      FAIL("expected MetricError");
    } catch (const MetricError& e) {
      CHECK(e.code == MetricError::Code::NoComparablePairs);
    }
  }
}

TEST_CASE("c_index matches the brute-force definition") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 5 + (seed * 9) % 80;
    const SurvivalDataset data =
        testutil::random_dataset(seed + 300, n, 2, (seed % 3) * 0.25, seed % 2 == 1);
    Rng rng(seed);
    const std::vector<double> beta{2.0 * rng.u01() - 1.0, 2.0 * rng.u01() - 1.0};
    CHECK(c_index(beta, data) ==
          doctest::Approx(oracle::c_index_brute(beta, data)).epsilon(1e-12));
  }
}

TEST_CASE("c_index hits its extremes and its tie value") {
  // Score = -time: perfectly concordant (earlier failure has higher score).
  std::vector<double> x, times;
  std::vector<std::uint8_t> ev;
  for (int i = 0; i < 15; ++i) {
    times.push_back(static_cast<double>(i + 1));
    x.push_back(-static_cast<double>(i + 1));
    ev.push_back(1);
  }
  const SurvivalDataset d = make_1d(x, times, ev);
  CHECK(c_index(std::vector<double>{1.0}, d) == doctest::Approx(1.0));
  CHECK(c_index(std::vector<double>{-1.0}, d) == doctest::Approx(0.0));
  CHECK(c_index(std::vector<double>{0.0}, d) == doctest::Approx(0.5));
}

TEST_CASE("rejection_fraction is exact on exchangeable uncensored data") {
  // With beta = 0 and distinct uncensored times, the leave-one-out rank of
  // each point is uniform over 1..n and tau = min(k, n+1-k)/n, so the
  // rejected fraction at alpha is a deterministic count:
  //   n=200, alpha=0.1: ranks k<=19 or k>=182 -> 38/200
  //   n=50,  alpha=0.1: ranks k<=4  or k>=47  -> 8/50
  const std::vector<double> beta{0.0, 0.0};
  const SurvivalDataset d200 = testutil::random_dataset(900, 200, 2, 0.0, false);
  CHECK(rejection_fraction(beta, d200, 0.1) ==
        doctest::Approx(38.0 / 200.0).epsilon(1e-12));
  const SurvivalDataset d50 = testutil::random_dataset(901, 50, 2, 0.0, false);
  CHECK(rejection_fraction(beta, d50, 0.1) ==
        doctest::Approx(8.0 / 50.0).epsilon(1e-12));
}

TEST_CASE("rejection_fraction stays near twice alpha under censoring") {
  const std::vector<double> beta{0.0, 0.0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SurvivalDataset d =
        testutil::random_dataset(5000 + seed, 200, 2, 0.3, false);
    const double f = rejection_fraction(beta, d, 0.1);
    CHECK(f >= 0.04);
    CHECK(f <= 0.25);
  }
}

TEST_CASE("rejection_fraction is monotone in alpha and bounded") {
  const SurvivalDataset d = testutil::random_dataset(42, 120, 2, 0.2, true);
  const CoxModel fit = fit_cox(d);
  double prev = 0.0;
  for (double alpha : {0.02, 0.05, 0.1, 0.2, 0.4}) {
    const double f = rejection_fraction(fit.beta, d, alpha);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    CHECK(f >= prev - 1e-15);
    prev = f;
  }
}

TEST_CASE("rejection_fraction needs at least two points") {
  const SurvivalDataset d = make_1d({0.5}, {1.0}, {1});
  try {
    rejection_fraction(std::vector<double>{0.0}, d, 0.1);
    FAIL("expected MetricError");
  } catch (const MetricError& e) {
    CHECK(e.code == MetricError::Code::GroupTooSmall);
  }
}

TEST_CASE("region_f1 hand cases") {
  SUBCASE("half-overlapping unit intervals") {
    Region est{{0.0}, {0.5}};
    Region truth{{0.25}, {0.75}};
    Region bounds{{0.0}, {1.0}};
    const RegionScore s = region_f1(est, truth, bounds);
    CHECK(s.precision == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.recall == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.f1 == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("quarter-overlapping squares") {
    Region est{{0.0, 0.0}, {0.5, 0.5}};
    Region truth{{0.25, 0.25}, {0.75, 0.75}};
    Region bounds{{0.0, 0.0}, {1.0, 1.0}};
    const RegionScore s = region_f1(est, truth, bounds);
    CHECK(s.precision == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.recall == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(s.f1 == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("estimate outside the bounds is clipped first") {
    Region est{{-10.0}, {0.5}};
    Region truth{{0.25}, {0.75}};
    Region bounds{{0.0}, {1.0}};
    const RegionScore s = region_f1(est, truth, bounds);
    CHECK(s.precision == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.recall == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("exact recovery") {
    Region truth{{0.2, 0.3}, {0.6, 0.9}};
    Region bounds{{0.0, 0.0}, {1.0, 1.0}};
    const RegionScore s = region_f1(truth, truth, bounds);
    CHECK(s.f1 == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("disjoint boxes score zero") {
    Region est{{0.0}, {0.2}};
    Region truth{{0.5}, {0.9}};
    Region bounds{{0.0}, {1.0}};
    const RegionScore s = region_f1(est, truth, bounds);
    CHECK(s.precision == 0.0);
    CHECK(s.recall == 0.0);
    CHECK(s.f1 == 0.0);
  }
  SUBCASE("zero-volume estimate scores zero") {
    Region est{{0.4}, {0.4}};
    Region truth{{0.25}, {0.75}};
    Region bounds{{0.0}, {1.0}};
    const RegionScore s = region_f1(est, truth, bounds);
    CHECK(s.f1 == 0.0);
  }
}

TEST_CASE("region_f1 agrees with Monte Carlo volume estimates") {
  Rng rng(314);
  Region bounds{{0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}};
  for (int rep = 0; rep < 5; ++rep) {
    Region est, truth;
    for (int j = 0; j < 3; ++j) {
      double a = rng.u01(), b = rng.u01();
      est.lower.push_back(std::min(a, b));
      est.upper.push_back(std::max(a, b) + 0.05);
      a = rng.u01();
      b = rng.u01();
      truth.lower.push_back(std::min(a, b));
      truth.upper.push_back(std::max(a, b) + 0.05);
    }
    for (int j = 0; j < 3; ++j) {
      est.upper[j] = std::min(est.upper[j], 1.0);
      truth.upper[j] = std::min(truth.upper[j], 1.0);
    }
    const RegionScore s = region_f1(est, truth, bounds);
    const oracle::PrfEstimate mc =
        oracle::region_prf_mc(est, truth, bounds, 200000, 1234 + rep);
    CHECK(std::fabs(s.precision - mc.precision) < 0.01);
    CHECK(std::fabs(s.recall - mc.recall) < 0.01);
  }
}
