#include "covtest/sampling.hpp"

#include <random>
#include <vector>

#include "covtest/error.hpp"

namespace covtest {

namespace {

void require_a(double a) {
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
}

}  // namespace

MaskedSample make_sample(Eigen::MatrixXd values, MaskMatrix mask, double a, Seed source_seed) {
  require_a(a);
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw PreconditionError("sample values and mask must have the same shape");
  }
  for (Eigen::Index j = 0; j < mask.cols(); ++j) {
    for (Eigen::Index k = 0; k < mask.rows(); ++k) {
      if (mask(k, j) > 1) throw PreconditionError("mask entries must be 0 or 1");
      if (mask(k, j) == 0) values(k, j) = 0.0;
    }
  }
  return MaskedSample{std::move(values), std::move(mask), a, source_seed};
}

SampleStreams split_streams(Seed seed) noexcept {
  return {derive_seed(seed, {0x6761757373ULL}), derive_seed(seed, {0x6d61736bULL})};
}

MaskedSample sample(const CovarianceModel& model, int n, double a, Seed seed) {
  if (n < 1) throw PreconditionError("n must be a positive integer");
  require_a(a);
  const int p = model.dim();
  const auto streams = split_streams(seed);
  Engine gauss = make_engine(streams.gaussian);
  Engine coin = make_engine(streams.mask);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution observed(a);

  MaskedSample out;
  out.y.resize(n, p);
  out.mask.resize(n, p);
  out.a = a;
  out.source_seed = seed;

  std::vector<double> z(static_cast<std::size_t>(p));
  std::vector<double> x(static_cast<std::size_t>(p));
  const bool identity = model.bandwidth() == 0;
  for (int k = 0; k < n; ++k) {
    for (auto& v : z) v = normal(gauss);
    if (identity) {
      x = z;
    } else {
      model.cholesky().multiply(z, x);
    }
    for (int i = 0; i < p; ++i) {
      const bool seen = observed(coin);
      out.mask(k, i) = seen ? 1 : 0;
      out.y(k, i) = seen ? x[static_cast<std::size_t>(i)] : 0.0;
    }
  }
  return out;
}

double estimate_a(const MaskedSample& sample) {
  const auto total = static_cast<double>(sample.mask.size());
  if (total == 0.0) throw PreconditionError("estimate_a needs a nonempty mask");
  return sample.mask.cast<double>().sum() / total;
}

}  // namespace covtest
