#include "covtest/testing.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "covtest/error.hpp"

namespace covtest {

namespace {

void require_rate_inputs(double alpha, double a, int n, int p) {
  if (!(alpha > 0.0)) throw PreconditionError("alpha must be > 0");
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
  if (n < 1 || p < 1) throw PreconditionError("n and p must be positive");
}

double effective_size(StatKind kind, double a, int n, int p) {
  const double base = a * a * static_cast<double>(n);
  return kind == StatKind::General ? base * std::sqrt(static_cast<double>(p)) : base * p;
}

double rate_exponent(double alpha) { return 2.0 * alpha / (4.0 * alpha + 1.0); }

double plain_rate(StatKind kind, double alpha, double a, int n, int p) {
  require_rate_inputs(alpha, a, n, p);
  const double size = effective_size(kind, a, n, p);
  if (!(size > 1.0)) {
    std::ostringstream os;
    os << "rate needs effective sample size > 1, got " << size;
    throw PreconditionError(os.str());
  }
  return std::pow(size, -rate_exponent(alpha));
}

double loglog_rate(StatKind kind, double alpha, double a, int n, int p) {
  require_rate_inputs(alpha, a, n, p);
  const double size = effective_size(kind, a, n, p);
  if (!(size > std::numbers::e)) {
    std::ostringstream os;
    os << "adaptive rate needs ln ln(N) > 0, i.e. N > e; got N = " << size;
    throw PreconditionError(os.str());
  }
  return std::pow(std::sqrt(std::log(std::log(size))) / size, rate_exponent(alpha));
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string_view to_string(ThresholdMode mode) noexcept {
  return mode == ThresholdMode::Theory ? "theory" : "gaussian";
}

double theory_constant_bound(double D_const, double K_const) {
  return K_const * (1.0 - 1.0 / (D_const * D_const)) / std::numbers::sqrt2;
}

BandwidthChoice choose_m(double alpha, double phi, double D_const, double K_const, int p) {
  if (!(alpha > 0.0)) throw PreconditionError("alpha must be > 0");
  if (!(phi > 0.0 && phi < 1.0)) throw PreconditionError("phi must lie in (0,1)");
  if (!(D_const > 1.0)) throw PreconditionError("D must be > 1");
  if (!(K_const > 0.0)) throw PreconditionError("K must be > 0");
  const double raw = std::pow(D_const / phi, 1.0 / alpha);
  const long long m = std::max<long long>(1, ceil_tolerant(raw));
  BandwidthChoice c;
  c.below_dimension = m < p;
  if (!c.below_dimension) {
    std::ostringstream os;
    os << "bandwidth exceeds dimension: m=" << m << " >= p=" << p;
    throw PreconditionError(os.str());
  }
  c.m = static_cast<int>(m);
  c.upper_condition = std::pow(static_cast<double>(m), alpha) * phi <= std::pow(K_const, -2.0 * alpha);
  return c;
}

double rate_general(double alpha, double a, int n, int p) { return plain_rate(StatKind::General, alpha, a, n, p); }
double rate_toeplitz(double alpha, double a, int n, int p) { return plain_rate(StatKind::Toeplitz, alpha, a, n, p); }
double adaptive_rate_general(double alpha, double a, int n, int p) {
  return loglog_rate(StatKind::General, alpha, a, n, p);
}
double adaptive_rate_toeplitz(double alpha, double a, int n, int p) {
  return loglog_rate(StatKind::Toeplitz, alpha, a, n, p);
}
double rate(StatKind kind, double alpha, double a, int n, int p) { return plain_rate(kind, alpha, a, n, p); }
double adaptive_rate(StatKind kind, double alpha, double a, int n, int p) {
  return loglog_rate(kind, alpha, a, n, p);
}

double min_energy_lower_bound(double alpha, double phi, int m, double a, double D_const, double K_const) {
  if (!(alpha > 0.0) || !(phi >= 0.0)) throw PreconditionError("need alpha > 0 and phi >= 0");
  if (phi > 0.0 && std::pow(static_cast<double>(m), alpha) * phi < D_const * (1.0 - 1e-12)) {
    throw PreconditionError("m does not satisfy m^alpha phi >= D");
  }
  const double a4 = a * a * a * a;
  return a4 * theory_constant_bound(D_const, K_const) * std::pow(phi, 2.0 + 1.0 / (2.0 * alpha));
}

double fixed_threshold(const ThresholdSpec& spec, StatKind kind, double alpha, double phi, int n, int p,
                       int m, double a) {
  if (spec.mode == ThresholdMode::Theory) {
    const double bound = theory_constant_bound(spec.D_const, spec.K_const);
    const bool ok = kind == StatKind::General ? spec.c_const < bound : spec.c_const <= bound;
    if (!ok) {
      std::ostringstream os;
      os << "threshold constant c=" << spec.c_const << " violates the bound B=" << bound
         << (kind == StatKind::General ? " (need c < B)" : " (need c <= B)");
      throw PreconditionError(os.str());
    }
    if (!(spec.c_const > 0.0)) throw PreconditionError("threshold constant c must be > 0");
    const double a4 = a * a * a * a;
    return spec.c_const * a4 * std::pow(phi, 2.0 + 1.0 / (2.0 * alpha));
  }
  if (!(spec.level > 0.0 && spec.level < 1.0)) throw PreconditionError("level must lie in (0,1)");
  const Moments mom = spec.variance == NullVariance::Exact ? null_moments_exact(kind, n, p, m, a)
                                                           : null_moments(kind, n, p, m, a);
  const double z = boost::math::quantile(boost::math::complement(boost::math::normal(), spec.level));
  return z * std::sqrt(mom.variance);
}

TestOutcome test_at_bandwidth(const MaskedSample& sample, int m, double threshold, StatKind kind) {
  TestOutcome out;
  out.statistic = compute_statistic(kind, sample, m);
  out.threshold = threshold;
  out.reject = out.statistic.value > threshold;
  return out;
}

TestOutcome test_fixed(const MaskedSample& sample, double alpha, double phi, const ThresholdSpec& spec,
                       StatKind kind) {
  const auto choice = choose_m(alpha, phi, spec.D_const, spec.K_const, sample.p());
  const double t = fixed_threshold(spec, kind, alpha, phi, sample.n(), sample.p(), choice.m, sample.a);
  auto out = test_at_bandwidth(sample, choice.m, t, kind);
  out.mode = std::string(to_string(spec.mode));
  return out;
}

double default_alpha_star_np(StatKind kind, double a, int n, int p) {
  const double size = effective_size(kind, a, n, p);
  if (!(size > std::numbers::e)) throw PreconditionError("adaptive grid needs N > e");
  const double ln = std::log(size);
  return ln / std::log(ln);
}

std::vector<int> AdaptiveGrid::bandwidths() const {
  std::vector<int> m;
  m.reserve(levels.size());
  for (int l : levels) m.push_back(1 << l);
  return m;
}

AdaptiveGrid build_grid(const GridParams& params) {
  if (!(params.a > 0.0 && params.a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
  if (params.n < 2 || params.p < 2) throw PreconditionError("adaptive grid needs n >= 2 and p >= 2");
  if (!(params.c_star > 4.0)) throw PreconditionError("C* must be > 4");
  const double lower_alpha = params.kind == StatKind::General ? 0.5 : 0.25;
  if (!(params.alpha_star > lower_alpha)) {
    std::ostringstream os;
    os << "alpha_star must exceed " << lower_alpha;
    throw PreconditionError(os.str());
  }
  const double size = effective_size(params.kind, params.a, params.n, params.p);
  if (!(size > std::numbers::e)) {
    std::ostringstream os;
    os << "adaptive grid needs N > e, got N = " << size;
    throw PreconditionError(os.str());
  }
  AdaptiveGrid g;
  g.alpha_star = params.alpha_star;
  g.alpha_star_np = params.alpha_star_np.value_or(default_alpha_star_np(params.kind, params.a, params.n, params.p));
  if (!(g.alpha_star < g.alpha_star_np)) throw PreconditionError("alpha_star must be below alpha_star_np");
  g.c_star = params.c_star;
  g.a = params.a;
  g.n = params.n;
  g.p = params.p;
  g.kind = params.kind;

  const double ln_size = std::log(size);
  const double lo = 2.0 * ln_size / ((4.0 * g.alpha_star_np + 1.0) * std::numbers::ln2);
  const double hi = 2.0 * ln_size / ((4.0 * g.alpha_star + 1.0) * std::numbers::ln2);
  const long long l_lo = std::max<long long>(2, ceil_tolerant(lo));
  const long long l_hi = static_cast<long long>(std::floor(hi));
  if (l_lo > l_hi) {
    std::ostringstream os;
    os << "adaptive grid is empty: L_* = " << l_lo << " > L^* = " << l_hi;
    throw PreconditionError(os.str());
  }
  if (l_hi >= 31 || (1LL << l_hi) >= params.p) {
    std::ostringstream os;
    os << "grid exceeds dimension, reduce alpha range or increase p: 2^" << l_hi << " >= p=" << params.p;
    throw PreconditionError(os.str());
  }
  const double a2 = params.a * params.a;
  for (long long l = l_lo; l <= l_hi; ++l) {
    const double numer = a2 * std::sqrt(g.c_star * std::log(static_cast<double>(l)));
    const double denom = g.kind == StatKind::General
                             ? params.n * std::sqrt(static_cast<double>(params.p))
                             : static_cast<double>(params.n) * static_cast<double>(params.p - (1LL << l));
    g.levels.push_back(static_cast<int>(l));
    g.thresholds.push_back(numer / denom);
  }
  return g;
}

TestOutcome test_adaptive(const MaskedSample& sample, const AdaptiveGrid& grid) {
  if (sample.n() != grid.n || sample.p() != grid.p) {
    throw PreconditionError("adaptive grid was built for different sample dimensions");
  }
  const auto ms = grid.bandwidths();
  const auto stats = statistic_ladder(grid.kind, sample, ms);
  TestOutcome out;
  out.mode = "adaptive";
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ms.size(); ++i) {
    LevelOutcome lv;
    lv.level = grid.levels[i];
    lv.m = ms[i];
    lv.statistic = stats[i].value;
    lv.threshold = grid.thresholds[i];
    lv.reject = lv.statistic > lv.threshold;
    out.reject = out.reject || lv.reject;
    out.per_level.push_back(lv);
    // Report the level closest to (or furthest past) its threshold.
    const double ratio = lv.statistic / lv.threshold;
    if (ratio > best_ratio) {
      best_ratio = ratio;
      out.statistic = stats[i];
      out.threshold = lv.threshold;
    }
  }
  return out;
}

std::string outcome_csv_header() { return "kind,mode,n,p,a,alpha,phi,m_or_grid,statistic,threshold,reject"; }

std::string outcome_csv_row(const TestOutcome& outcome, double alpha, double phi) {
  std::ostringstream os;
  os << to_string(outcome.statistic.kind) << ',' << outcome.mode << ',' << outcome.statistic.n << ','
     << outcome.statistic.p << ',' << format_double(outcome.statistic.a) << ',' << format_double(alpha) << ','
     << format_double(phi) << ',';
  if (outcome.per_level.empty()) {
    os << outcome.statistic.m;
  } else {
    os << "L" << outcome.per_level.front().level << "-" << outcome.per_level.back().level;
  }
  os << ',' << format_double(outcome.statistic.value) << ',' << format_double(outcome.threshold) << ','
     << (outcome.reject ? 1 : 0);
  return os.str();
}

}  // namespace covtest
