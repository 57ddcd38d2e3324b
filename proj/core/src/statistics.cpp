#include "covtest/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "covtest/error.hpp"

namespace covtest {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void validate(const Eigen::MatrixXd& y, double a, int m) {
  if (y.rows() < 2) throw PreconditionError("statistic needs n >= 2 observations");
  if (m < 1 || m >= y.cols()) {
    std::ostringstream os;
    os << "bandwidth m=" << m << " must satisfy 1 <= m <= p-1 (p=" << y.cols() << ")";
    throw PreconditionError(os.str());
  }
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
}

void validate_sizes(int n, int p, int m, double a) {
  if (n < 2) throw PreconditionError("moments need n >= 2");
  if (m < 1 || m >= p) throw PreconditionError("moments need 1 <= m <= p-1");
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
}

double nn1(Eigen::Index n) { return static_cast<double>(n) * static_cast<double>(n - 1); }

StatisticResult make_result(StatKind kind, double value, Eigen::Index n, Eigen::Index p, int m,
                            double a) {
  StatisticResult r;
  r.value = value;
  r.n = static_cast<int>(n);
  r.p = static_cast<int>(p);
  r.m = m;
  r.a = a;
  r.kind = kind;
  const double scale = kind == StatKind::General
                           ? static_cast<double>(n) * std::sqrt(static_cast<double>(p))
                           : static_cast<double>(n) * static_cast<double>(p - m);
  r.standardized = value * scale / (a * a);
  return r;
}

double general_normalizer(Eigen::Index n, Eigen::Index p, int m) {
  return nn1(n) * static_cast<double>(p) * std::sqrt(2.0 * m);
}

double toeplitz_normalizer(Eigen::Index n, Eigen::Index p, int m) {
  const double pm = static_cast<double>(p - m);
  return nn1(n) * pm * pm * std::sqrt(2.0 * m);
}

// sum_{k != l} s_k s_l for the values in s.
double ordered_cross_sum(std::span<const double> s) {
  CompensatedSum sum;
  CompensatedSum sq;
  for (double v : s) {
    sum.add(v);
    sq.add(v * v);
  }
  const double total = sum.value();
  return total * total - sq.value();
}

// Lag-j diagonal sums s_{k,j}(m) = sum_{i=m}^{p-1} y(k,i) y(k,i-j) (0-based)
// at every bandwidth in `levels` with m >= j, from segment dot products.
// Output: per[l * n + k].
void toeplitz_lag_sums(const RowMajorMatrix& yr, int j, std::span<const int> levels,
                       std::vector<double>& per) {
  const Eigen::Index n = yr.rows();
  const Eigen::Index p = yr.cols();
  std::size_t first = 0;
  while (first < levels.size() && levels[first] < j) ++first;
  if (first == levels.size()) return;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto row = yr.row(k);
    // Segment dot products between consecutive levels, accumulated from the top.
    CompensatedSum acc;
    Eigen::Index end = p;
    for (std::size_t l = levels.size(); l-- > first;) {
      const Eigen::Index start = levels[l];
      const Eigen::Index len = end - start;
      if (len > 0) acc.add(row.segment(start, len).dot(row.segment(start - j, len)));
      per[l * static_cast<std::size_t>(n) + static_cast<std::size_t>(k)] = acc.value();
      end = start;
    }
  }
}

void validate_ladder(std::span<const int> bandwidths, Eigen::Index p) {
  if (bandwidths.empty()) throw PreconditionError("bandwidth list is empty");
  for (std::size_t i = 0; i < bandwidths.size(); ++i) {
    if (bandwidths[i] < 1 || bandwidths[i] >= p) {
      throw PreconditionError("every bandwidth must satisfy 1 <= m <= p-1");
    }
    if (i > 0 && bandwidths[i] <= bandwidths[i - 1]) {
      throw PreconditionError("bandwidths must be strictly increasing");
    }
  }
}

std::vector<StatisticResult> general_ladder(const Eigen::MatrixXd& y, double a,
                                            std::span<const int> bandwidths) {
  const auto offsets = general_offset_sums(y, bandwidths.back() - 1);
  std::vector<StatisticResult> out;
  CompensatedSum prefix;
  int d = 1;
  for (int m : bandwidths) {
    for (; d < m; ++d) prefix.add(offsets[static_cast<std::size_t>(d)]);
    out.push_back(make_result(StatKind::General, prefix.value() / general_normalizer(y.rows(), y.cols(), m),
                              y.rows(), y.cols(), m, a));
  }
  return out;
}

std::vector<StatisticResult> toeplitz_ladder(const Eigen::MatrixXd& y, double a,
                                             std::span<const int> bandwidths) {
  const RowMajorMatrix yr = y;
  const Eigen::Index n = y.rows();
  const std::size_t levels = bandwidths.size();
  std::vector<double> per(levels * static_cast<std::size_t>(n), 0.0);
  std::vector<CompensatedSum> totals(levels);
  for (int j = 1; j <= bandwidths.back(); ++j) {
    toeplitz_lag_sums(yr, j, bandwidths, per);
    for (std::size_t l = 0; l < levels; ++l) {
      if (bandwidths[l] < j) continue;
      totals[l].add(ordered_cross_sum(
          std::span<const double>(per.data() + l * static_cast<std::size_t>(n), static_cast<std::size_t>(n))));
    }
  }
  std::vector<StatisticResult> out;
  for (std::size_t l = 0; l < levels; ++l) {
    const int m = bandwidths[l];
    out.push_back(make_result(StatKind::Toeplitz, totals[l].value() / toeplitz_normalizer(n, y.cols(), m),
                              n, y.cols(), m, a));
  }
  return out;
}

}  // namespace

std::string_view to_string(StatKind kind) noexcept {
  return kind == StatKind::General ? "general" : "toeplitz";
}

std::vector<double> general_offset_sums(const Eigen::MatrixXd& y, int max_offset) {
  const Eigen::Index n = y.rows();
  const Eigen::Index p = y.cols();
  max_offset = static_cast<int>(std::min<Eigen::Index>(max_offset, p - 1));
  std::vector<double> c(static_cast<std::size_t>(std::max(max_offset, 0)) + 1, 0.0);
  Eigen::ArrayXd z(n);
  for (int d = 1; d <= max_offset; ++d) {
    CompensatedSum total;
    for (Eigen::Index i = 0; i + d < p; ++i) {
      z = y.col(i).array() * y.col(i + d).array();
      const double sv = z.sum();
      total.add(sv * sv - z.square().sum());
    }
    c[static_cast<std::size_t>(d)] = total.value();
  }
  return c;
}

StatisticResult stat_general(const Eigen::MatrixXd& y, double a, int m) {
  validate(y, a, m);
  const int bw[] = {m};
  return general_ladder(y, a, bw).front();
}

StatisticResult stat_general(const MaskedSample& sample, int m) { return stat_general(sample.y, sample.a, m); }

StatisticResult stat_general_bruteforce(const Eigen::MatrixXd& y, double a, int m) {
  validate(y, a, m);
  const Eigen::Index n = y.rows();
  const Eigen::Index p = y.cols();
  CompensatedSum sum;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k == l) continue;
      for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = i + 1; j < p && j - i < m; ++j) {
          sum.add(y(k, i) * y(k, j) * y(l, i) * y(l, j));
        }
      }
    }
  }
  return make_result(StatKind::General, sum.value() / general_normalizer(n, p, m), n, p, m, a);
}

StatisticResult stat_general_bruteforce(const MaskedSample& sample, int m) {
  return stat_general_bruteforce(sample.y, sample.a, m);
}

StatisticResult stat_toeplitz(const Eigen::MatrixXd& y, double a, int m) {
  validate(y, a, m);
  const int bw[] = {m};
  return toeplitz_ladder(y, a, bw).front();
}

StatisticResult stat_toeplitz(const MaskedSample& sample, int m) { return stat_toeplitz(sample.y, sample.a, m); }

StatisticResult stat_toeplitz_bruteforce(const Eigen::MatrixXd& y, double a, int m) {
  validate(y, a, m);
  const Eigen::Index n = y.rows();
  const Eigen::Index p = y.cols();
  CompensatedSum sum;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k == l) continue;
      for (int j = 1; j <= m; ++j) {
        // 1-based i1, i2 in m+1..p become 0-based m..p-1.
        for (Eigen::Index i1 = m; i1 < p; ++i1) {
          for (Eigen::Index i2 = m; i2 < p; ++i2) {
            sum.add(y(k, i1) * y(k, i1 - j) * y(l, i2) * y(l, i2 - j));
          }
        }
      }
    }
  }
  return make_result(StatKind::Toeplitz, sum.value() / toeplitz_normalizer(n, p, m), n, p, m, a);
}

StatisticResult stat_toeplitz_bruteforce(const MaskedSample& sample, int m) {
  return stat_toeplitz_bruteforce(sample.y, sample.a, m);
}

StatisticResult compute_statistic(StatKind kind, const MaskedSample& sample, int m) {
  return kind == StatKind::General ? stat_general(sample, m) : stat_toeplitz(sample, m);
}

std::vector<StatisticResult> statistic_ladder(StatKind kind, const MaskedSample& sample,
                                              std::span<const int> bandwidths) {
  validate_ladder(bandwidths, sample.y.cols());
  validate(sample.y, sample.a, bandwidths.front());
  return kind == StatKind::General ? general_ladder(sample.y, sample.a, bandwidths)
                                   : toeplitz_ladder(sample.y, sample.a, bandwidths);
}

Moments null_moments(StatKind kind, int n, int p, int m, double a) {
  validate_sizes(n, p, m, a);
  const double a4 = a * a * a * a;
  if (kind == StatKind::General) return {0.0, a4 / (nn1(n) * p)};
  const double pm = static_cast<double>(p - m);
  return {0.0, a4 / (nn1(n) * pm * pm)};
}

Moments null_moments_exact(StatKind kind, int n, int p, int m, double a) {
  if (kind == StatKind::Toeplitz) return null_moments(kind, n, p, m, a);
  validate_sizes(n, p, m, a);
  const double a4 = a * a * a * a;
  // Number of pairs i < j with j - i < m.
  const double pairs = static_cast<double>(m - 1) * p - 0.5 * static_cast<double>(m) * (m - 1);
  const double pd = static_cast<double>(p);
  return {0.0, a4 * pairs / (nn1(n) * pd * pd * m)};
}

double alt_mean_general(const CovarianceModel& model, int m, double a, int p) {
  if (model.dim() != p) throw PreconditionError("dimension mismatch between model and p");
  if (m < 1) throw PreconditionError("bandwidth m must be >= 1");
  CompensatedSum s;
  for (int i = 0; i < p; ++i) {
    for (int j = i + 1; j < p && j - i < m; ++j) s.add(model(i, j) * model(i, j));
  }
  const double a4 = a * a * a * a;
  return a4 / (p * std::sqrt(2.0 * m)) * s.value();
}

double alt_mean_toeplitz(const CovarianceModel& model, int m, double a) {
  if (m < 1) throw PreconditionError("bandwidth m must be >= 1");
  const auto d = model.toeplitz_diagonals();
  CompensatedSum s;
  for (int j = 1; j <= m && j < static_cast<int>(d.size()); ++j) s.add(d[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(j)]);
  const double a4 = a * a * a * a;
  return a4 / std::sqrt(2.0 * m) * s.value();
}

}  // namespace covtest
