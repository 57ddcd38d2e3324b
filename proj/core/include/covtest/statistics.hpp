#pragma once

#include <cmath>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "covtest/covmodels.hpp"
#include "covtest/sampling.hpp"

namespace covtest {

enum class StatKind { General, Toeplitz };

std::string_view to_string(StatKind kind) noexcept;

struct StatisticResult {
  double value = 0.0;
  // value scaled by the inverse asymptotic null standard deviation:
  // n sqrt(p) / a^2 (General) or n (p - m) / a^2 (Toeplitz).
  double standardized = 0.0;
  int n = 0;
  int p = 0;
  int m = 0;
  double a = 1.0;
  StatKind kind = StatKind::General;
};

// U-statistic over the pairs i < j with |i - j| < m, weight 1/sqrt(2m).
// Runs in O(n p m) using sum_{k != l} z_k z_l = (sum z)^2 - sum z^2.
StatisticResult stat_general(const MaskedSample& sample, int m);
StatisticResult stat_general(const Eigen::MatrixXd& y, double a, int m);

// Literal O(n^2 p m) evaluation; oracle for stat_general.
StatisticResult stat_general_bruteforce(const MaskedSample& sample, int m);
StatisticResult stat_general_bruteforce(const Eigen::MatrixXd& y, double a, int m);

// Diagonal-sharing U-statistic over lags 1..m and positions m+1..p.
StatisticResult stat_toeplitz(const MaskedSample& sample, int m);
StatisticResult stat_toeplitz(const Eigen::MatrixXd& y, double a, int m);

StatisticResult stat_toeplitz_bruteforce(const MaskedSample& sample, int m);
StatisticResult stat_toeplitz_bruteforce(const Eigen::MatrixXd& y, double a, int m);

StatisticResult compute_statistic(StatKind kind, const MaskedSample& sample, int m);

// Values of the statistic at several bandwidths from one pass over the data.
// bandwidths must be strictly increasing, each in [1, p-1]. Results agree
// with the single-bandwidth functions.
std::vector<StatisticResult> statistic_ladder(StatKind kind, const MaskedSample& sample,
                                              std::span<const int> bandwidths);

// Per-offset totals c_d = sum_{i} [(sum_k z_k)^2 - sum_k z_k^2] with
// z_k = Y_{k,i} Y_{k,i+d}, for d = 1..max_offset (index 0 unused).
std::vector<double> general_offset_sums(const Eigen::MatrixXd& y, int max_offset);

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Null moments as stated for the statistics: variance a^4/(n(n-1)p) for
// General and a^4/(n(n-1)(p-m)^2) for Toeplitz.
Moments null_moments(StatKind kind, int n, int p, int m, double a);

// Exact finite-sample null moments. For General the variance is
// a^4 N_m / (n(n-1) p^2 m) with N_m = #{i<j : j-i < m}, which tends to the
// stated formula as m grows with m/p -> 0. For Toeplitz it equals
// null_moments.
Moments null_moments_exact(StatKind kind, int n, int p, int m, double a);

// (a^4 / (p sqrt(2m))) sum_{i<j, |i-j|<m} sigma_ij^2.
double alt_mean_general(const CovarianceModel& model, int m, double a, int p);

// (a^4 / sqrt(2m)) sum_{j=1}^{m} sigma_j^2; throws for non-Toeplitz models.
double alt_mean_toeplitz(const CovarianceModel& model, int m, double a);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace covtest
