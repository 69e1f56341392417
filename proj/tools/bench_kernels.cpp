// Benchmark: OpenMP pair-sum kernels vs their serial reference
// implementations, and the O(n) CRS recursion vs the O(n^3) literal form,
// plus the fast-CRS wall-clock scaling across doubling n.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "coxsg/crs.hpp"
#include "coxsg/metrics.hpp"
#include "coxsg/synth.hpp"
#include "support/oracles.hpp"

namespace {

using namespace coxsg;

double time_median(int reps, const std::function<void()>& fn) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    t.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Region unit_box(std::size_t d) {
  Region b;
  b.lower.assign(d, 0.0);
  b.upper.assign(d, 1.0);
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  int reps = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--reps" && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--reps N]\n", argv[0]);
      return 2;
    }
  }
  std::printf("threads: %d, reps: %d (median reported)\n", omp_get_max_threads(),
              reps);

  std::printf("\n== empirical EPE: blocked OpenMP kernel vs serial literal ==\n");
  const std::vector<double> gen_beta2{1.0, -1.0};
  for (const std::size_t n : {2000u, 8000u, 32000u}) {
    const SyntheticData sd = gen_plain_cox(n, gen_beta2, unit_box(2), 0.0, 7);
    const std::vector<double> beta{0.8, -0.4};
    volatile double sink = 0.0;
    const double t_fast = time_median(
        reps, [&] { sink = empirical_epe(beta, sd.data); });
    const double fast_value = empirical_epe(beta, sd.data);
    const int serial_reps = n <= 8000 ? std::max(1, reps / 2) : 1;
    double serial_value = 0.0;
    const double t_serial = time_median(serial_reps, [&] {
      serial_value = oracle::epe_literal(beta, sd.data);
    });
    std::printf(
        "n=%6zu  kernel %8.2f ms  serial %9.2f ms  speedup %6.2fx  |diff| %.3g\n",
        n, t_fast * 1e3, t_serial * 1e3, t_serial / t_fast,
        std::fabs(fast_value - serial_value));
    (void)sink;
  }

  std::printf("\n== CRS rank probabilities: O(n) recursion vs O(n^3) literal ==\n");
  const std::vector<double> gen_beta1{0.5};
  for (const std::size_t n : {100u, 200u, 400u}) {
    const SyntheticData sd = gen_plain_cox(n, gen_beta1, unit_box(1), 0.3, 11);
    const std::vector<double> beta{0.5};
    const std::vector<double> x_star{0.5};
    RankProbabilities fast, naive;
    const double t_fast = time_median(
        reps, [&] { fast = fast_log_rank_probs(beta, sd.data, x_star); });
    const double t_naive = time_median(std::max(1, reps / 2), [&] {
      naive = naive_log_rank_probs(beta, sd.data, x_star);
    });
    double diff = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      diff = std::max(diff, std::fabs(fast.crs[k] - naive.crs[k]));
    std::printf(
        "n=%4zu  fast %8.4f ms  naive %10.2f ms  speedup %8.1fx  max|crs diff| %.3g\n",
        n, t_fast * 1e3, t_naive * 1e3, t_naive / t_fast, diff);
  }

  std::printf("\n== fast CRS wall-clock scaling (synthetic scores) ==\n");
  double prev = 0.0;
  for (const std::size_t n : {10000u, 20000u, 40000u}) {
    Rng rng(derive_seed(3, seed_tag::kData, n));
    std::vector<double> s(n);
    std::vector<std::uint8_t> ev(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = 2.0 * rng.u01() - 1.0;
      ev[i] = rng.u01() < 0.7 ? 1 : 0;
    }
    RankProbabilities rp;
    const double t = time_median(
        reps, [&] { rp = detail::rank_probs_from_scores(s, ev, 0.3); });
    if (prev > 0.0)
      std::printf("n=%6zu  %8.3f ms  ratio vs half size: %.3f\n", n, t * 1e3,
                  t / prev);
    else
      std::printf("n=%6zu  %8.3f ms\n", n, t * 1e3);
    prev = t;
  }
  return 0;
}
