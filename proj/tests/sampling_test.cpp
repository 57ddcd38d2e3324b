#include <gtest/gtest.h>

#include <cmath>

#include "covtest/error.hpp"
#include "covtest/sampling.hpp"

using namespace covtest;

TEST(Sample, FullObservationHasAllOnesMask) {
  const auto s = sample(CovarianceModel::identity(6), 50, 1.0, 4);
  EXPECT_EQ(s.n(), 50);
  EXPECT_EQ(s.p(), 6);
  EXPECT_EQ(s.mask.cast<int>().sum(), 300);
  EXPECT_DOUBLE_EQ(estimate_a(s), 1.0);
}

TEST(Sample, ObservedFractionNearA) {
  const auto s = sample(CovarianceModel::identity(5), 10000, 0.5, 21);
  EXPECT_NEAR(estimate_a(s), 0.5, 0.02);
}

TEST(Sample, MaskedEntriesAreExactlyZero) {
  const auto s = sample(CovarianceModel::identity(8), 200, 0.3, 8);
  for (int k = 0; k < s.n(); ++k) {
    for (int i = 0; i < s.p(); ++i) {
      ASSERT_LE(s.mask(k, i), 1);
      if (s.mask(k, i) == 0) ASSERT_EQ(s.y(k, i), 0.0);
      else ASSERT_NE(s.y(k, i), 0.0);
    }
  }
}

TEST(Sample, SameSeedIsBitIdentical) {
  const std::vector<double> diag{1.0, 0.3, 0.1, 0.0, 0.0};
  const auto model = CovarianceModel::from_toeplitz(diag);
  const auto a = sample(model, 30, 0.7, 123);
  const auto b = sample(model, 30, 0.7, 123);
  const auto c = sample(model, 30, 0.7, 124);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_NE(a.y, c.y);
  EXPECT_EQ(a.source_seed, 123u);
}

TEST(Sample, MaskDoesNotDependOnModel) {
  const std::vector<double> diag{1.0, 0.4, 0.0, 0.2, 0.0, 0.0};
  const auto a = sample(CovarianceModel::identity(6), 100, 0.6, 77);
  const auto b = sample(CovarianceModel::from_toeplitz(diag), 100, 0.6, 77);
  EXPECT_EQ(a.mask, b.mask);
  EXPECT_NE(a.y, b.y);
}

TEST(Sample, StreamsAreDistinct) {
  const auto s = split_streams(5);
  EXPECT_NE(s.gaussian, s.mask);
  EXPECT_EQ(split_streams(5).mask, s.mask);
}

TEST(Sample, IdentityEmpiricalCovariance) {
  const int n = 100000;
  const auto s = sample(CovarianceModel::identity(4), n, 1.0, 9);
  const Eigen::MatrixXd c = s.y.transpose() * s.y / n;
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(c(i, i), 1.0, 0.03);
    for (int j = 0; j < i; ++j) EXPECT_NEAR(c(i, j), 0.0, 4.0 / std::sqrt(n));
  }
}

TEST(Sample, BandedEmpiricalCovarianceMatchesModel) {
  const int n = 60000;
  const std::vector<double> diag{1.0, 0.3, -0.1, 0.05, 0.0, 0.0, 0.0};
  const auto model = CovarianceModel::from_toeplitz(diag);
  const auto s = sample(model, n, 1.0, 10);
  const Eigen::MatrixXd c = s.y.transpose() * s.y / n;
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) EXPECT_NEAR(c(i, j), model(i, j), 0.03);
  }
}

TEST(Sample, RejectsBadArguments) {
  const auto id = CovarianceModel::identity(3);
  EXPECT_THROW(sample(id, 0, 0.5, 1), PreconditionError);
  EXPECT_THROW(sample(id, 5, 0.0, 1), PreconditionError);
  EXPECT_THROW(sample(id, 5, 1.5, 1), PreconditionError);
}

TEST(EstimateA, Trivial) {
  EXPECT_DOUBLE_EQ(estimate_a(make_sample(Eigen::MatrixXd::Ones(2, 2), MaskMatrix::Ones(2, 2), 1.0)), 1.0);
  EXPECT_DOUBLE_EQ(estimate_a(make_sample(Eigen::MatrixXd::Ones(2, 2), MaskMatrix::Zero(2, 2), 1.0)), 0.0);
  MaskMatrix half(2, 2);
  half << 1, 0, 0, 1;
  const auto s = make_sample(Eigen::MatrixXd::Constant(2, 2, 3.0), half, 0.5);
  EXPECT_DOUBLE_EQ(estimate_a(s), 0.5);
  EXPECT_EQ(s.y(0, 1), 0.0);
  EXPECT_EQ(s.y(0, 0), 3.0);
}

TEST(MakeSample, ShapeMismatch) {
  EXPECT_THROW(make_sample(Eigen::MatrixXd::Ones(2, 3), MaskMatrix::Ones(2, 2), 1.0), PreconditionError);
}
