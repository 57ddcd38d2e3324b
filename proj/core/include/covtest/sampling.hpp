#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "covtest/covmodels.hpp"
#include "covtest/seeding.hpp"

namespace covtest {

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// n observations of a p-vector with Bernoulli(a) missingness. Masked entries
// of y are exactly zero.
struct MaskedSample {
  Eigen::MatrixXd y;
  MaskMatrix mask;
  double a = 1.0;
  Seed source_seed = 0;

  int n() const noexcept { return static_cast<int>(y.rows()); }
  int p() const noexcept { return static_cast<int>(y.cols()); }
};

// Builds a sample from raw values and a mask, zeroing masked values.
// Throws PreconditionError on shape mismatch or a outside (0,1].
MaskedSample make_sample(Eigen::MatrixXd values, MaskMatrix mask, double a, Seed source_seed = 0);

// A master seed splits into independent Gaussian and mask streams, so the
// mask drawn for a seed does not depend on the covariance model.
struct SampleStreams {
  Seed gaussian;
  Seed mask;
};
SampleStreams split_streams(Seed seed) noexcept;

// Rows X_k ~ N(0, Sigma) via the model's Cholesky factor, masked by i.i.d.
// Bernoulli(a) indicators. Deterministic in seed.
MaskedSample sample(const CovarianceModel& model, int n, double a, Seed seed);

// Fraction of observed entries.
double estimate_a(const MaskedSample& sample);

}  // namespace covtest
