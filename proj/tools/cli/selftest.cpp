#include "cli/selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "covtest/covmodels.hpp"
#include "covtest/parallel.hpp"
#include "covtest/sampling.hpp"
#include "covtest/statistics.hpp"

namespace covtest::cli {

namespace {

SelftestResult oracle_equivalence(Seed seed) {
  Engine rng = make_engine(derive_seed(seed, {1}));
  std::uniform_int_distribution<int> n_dist(2, 6);
  std::uniform_int_distribution<int> p_dist(2, 8);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int checked = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n = n_dist(rng);
    const int p = p_dist(rng);
    Eigen::MatrixXd y(n, p);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < p; ++i) y(k, i) = normal(rng);
    }
    for (int m = 1; m < p; ++m) {
      for (auto kind : {StatKind::General, StatKind::Toeplitz}) {
        const double fast = kind == StatKind::General ? stat_general(y, 1.0, m).value : stat_toeplitz(y, 1.0, m).value;
        const double slow = kind == StatKind::General ? stat_general_bruteforce(y, 1.0, m).value
                                                      : stat_toeplitz_bruteforce(y, 1.0, m).value;
        const double scale = std::max({std::abs(fast), std::abs(slow), 1e-300});
        worst = std::max(worst, std::abs(fast - slow) / scale);
        ++checked;
      }
    }
  }
  std::ostringstream os;
  os << checked << " comparisons, max relative difference " << worst;
  return {"oracle_equivalence", worst <= 1e-10, os.str()};
}

SelftestResult null_moments_check(StatKind kind, Seed seed, int threads) {
  constexpr int n = 20, p = 50, m = 8, reps = 4000;
  constexpr double a = 0.7;
  const auto model = CovarianceModel::identity(p);
  std::vector<double> values(reps);
  parallel_for(reps, threads, [&](std::size_t r) {
    const auto s = sample(model, n, a, derive_seed(seed, {2, static_cast<std::uint64_t>(kind), r}));
    values[r] = compute_statistic(kind, s, m).value;
  });
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= reps - 1;
  const auto exact = null_moments_exact(kind, n, p, m, a);
  const bool centered = std::abs(mean) <= 4.0 * std::sqrt(exact.variance / reps);
  const bool variance_ok = std::abs(var / exact.variance - 1.0) <= 0.1;
  std::ostringstream os;
  os << "mean " << mean << ", variance " << var << " vs exact " << exact.variance;
  return {std::string("null_moments_") + std::string(to_string(kind)), centered && variance_ok, os.str()};
}

}  // namespace

std::vector<SelftestResult> run_selftest(Seed seed, int threads) {
  return {oracle_equivalence(seed), null_moments_check(StatKind::General, seed, threads),
          null_moments_check(StatKind::Toeplitz, seed, threads)};
}

}  // namespace covtest::cli
