#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/sampling.hpp"
#include "covtest/statistics.hpp"

namespace covtest {

enum class ThresholdMode { Theory, GaussianQuantile };

std::string_view to_string(ThresholdMode mode) noexcept;

// Which null variance calibrates GaussianQuantile thresholds.
enum class NullVariance { Exact, Asymptotic };

struct ThresholdSpec {
  ThresholdMode mode = ThresholdMode::GaussianQuantile;
  // c (General) or kappa (Toeplitz) in t = c a^4 phi^{2 + 1/(2 alpha)}.
  double c_const = 0.1;
  // Target type I error in GaussianQuantile mode.
  double level = 0.05;
  double D_const = 2.0;
  double K_const = 1.0;
  NullVariance variance = NullVariance::Exact;
};

// B = K (1 - D^{-2}) / sqrt(2).
double theory_constant_bound(double D_const, double K_const);

struct BandwidthChoice {
  int m = 1;
  // m^alpha phi <= K^{-2 alpha}
  bool upper_condition = false;
  bool below_dimension = false;
};

// Smallest m >= 1 with m^alpha phi >= D. Throws
// PreconditionError("bandwidth exceeds dimension ...") when m >= p.
BandwidthChoice choose_m(double alpha, double phi, double D_const, double K_const, int p);

// (a^2 n sqrt(p))^{-2 alpha/(4 alpha + 1)}
double rate_general(double alpha, double a, int n, int p);
// (a^2 n p)^{-2 alpha/(4 alpha + 1)}
double rate_toeplitz(double alpha, double a, int n, int p);
// (sqrt(ln ln N) / N)^{2 alpha/(4 alpha + 1)} with N = a^2 n sqrt(p)
double adaptive_rate_general(double alpha, double a, int n, int p);
// same with N = a^2 n p
double adaptive_rate_toeplitz(double alpha, double a, int n, int p);

double rate(StatKind kind, double alpha, double a, int n, int p);
double adaptive_rate(StatKind kind, double alpha, double a, int n, int p);

// a^4 B phi^{2 + 1/(2 alpha)}, the guaranteed mean of the statistic over the
// alternative when m satisfies the bandwidth condition.
double min_energy_lower_bound(double alpha, double phi, int m, double a, double D_const = 2.0,
                              double K_const = 1.0);

struct LevelOutcome {
  int level = 0;
  int m = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;
};

struct TestOutcome {
  bool reject = false;
  StatisticResult statistic;
  double threshold = 0.0;
  std::string mode;
  // Adaptive tests only, ascending in level.
  std::vector<LevelOutcome> per_level;
};

// Threshold of the fixed test at bandwidth m.
double fixed_threshold(const ThresholdSpec& spec, StatKind kind, double alpha, double phi, int n,
                       int p, int m, double a);

// Reject iff statistic > threshold (strict).
TestOutcome test_at_bandwidth(const MaskedSample& sample, int m, double threshold, StatKind kind);

TestOutcome test_fixed(const MaskedSample& sample, double alpha, double phi, const ThresholdSpec& spec,
                       StatKind kind);

struct GridParams {
  double alpha_star = 1.0;
  // Defaults to ln N / ln ln N.
  std::optional<double> alpha_star_np;
  double a = 1.0;
  int n = 0;
  int p = 0;
  double c_star = 4.5;
  StatKind kind = StatKind::General;
};

struct AdaptiveGrid {
  double alpha_star = 0.0;
  double alpha_star_np = 0.0;
  double c_star = 0.0;
  double a = 1.0;
  int n = 0;
  int p = 0;
  StatKind kind = StatKind::General;
  std::vector<int> levels;
  std::vector<double> thresholds;

  std::vector<int> bandwidths() const;
};

AdaptiveGrid build_grid(const GridParams& params);

double default_alpha_star_np(StatKind kind, double a, int n, int p);

// Reject iff some level's statistic exceeds its threshold.
TestOutcome test_adaptive(const MaskedSample& sample, const AdaptiveGrid& grid);

// One CSV row: kind, mode, n, p, a, alpha, phi, m_or_grid, statistic,
// threshold, reject.
std::string outcome_csv_header();
std::string outcome_csv_row(const TestOutcome& outcome, double alpha, double phi);

}  // namespace covtest
