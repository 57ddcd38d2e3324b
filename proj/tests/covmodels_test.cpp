#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "covtest/covmodels.hpp"
#include "covtest/error.hpp"

using namespace covtest;

namespace {

ClassParams params_for(int p, double alpha, double phi) {
  ClassParams cp;
  cp.alpha = alpha;
  cp.phi = phi;
  cp.p = p;
  return cp;
}

// min sum_d x_d^2 subject to sum_d x_d >= phi^2, sum_d x_d d^{2 alpha} <= 1,
// x >= 0, over offsets d = 1..dmax. The minimizer has the form
// x_d = (lambda - mu d^{2 alpha})_+; lambda is set by the first constraint
// for each mu, and mu by the second. Returns sqrt(min / 2).
double extremal_qp(double alpha, double phi, int dmax) {
  std::vector<double> w(static_cast<std::size_t>(dmax));
  for (int d = 1; d <= dmax; ++d) w[static_cast<std::size_t>(d - 1)] = std::pow(d, 2.0 * alpha);
  const double target = phi * phi;
  auto solve_lambda = [&](double mu) {
    double lo = 0.0;
    double hi = target + mu * w.back();
    for (int it = 0; it < 200; ++it) {
      const double lam = 0.5 * (lo + hi);
      double s = 0.0;
      for (double wd : w) s += std::max(lam - mu * wd, 0.0);
      (s < target ? lo : hi) = lam;
    }
    return 0.5 * (lo + hi);
  };
  auto energy_weight = [&](double mu, double& sq) {
    const double lam = solve_lambda(mu);
    double weighted = 0.0;
    sq = 0.0;
    for (double wd : w) {
      const double x = std::max(lam - mu * wd, 0.0);
      weighted += x * wd;
      sq += x * x;
    }
    return weighted;
  };
  double lo = 1e-24;
  double hi = 1.0;
  double sq = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mu = std::sqrt(lo * hi);
    (energy_weight(mu, sq) > 1.0 ? lo : hi) = mu;
  }
  energy_weight(std::sqrt(lo * hi), sq);
  return std::sqrt(0.5 * sq);
}

}  // namespace

TEST(CovarianceModel, IdentityIsValid) {
  const auto m = CovarianceModel::identity(5);
  EXPECT_EQ(m.dim(), 5);
  EXPECT_EQ(m.kind(), ModelKind::Identity);
  EXPECT_EQ(m.bandwidth(), 0);
  EXPECT_TRUE(m.is_toeplitz());
}

TEST(CovarianceModel, RejectsNonPositiveDefinite) {
  Eigen::MatrixXd s(2, 2);
  s << 1.0, 1.5, 1.5, 1.0;
  try {
    CovarianceModel::from_matrix(s);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("not positive definite"), std::string::npos);
  }
  EXPECT_THROW(membership_general(s, params_for(2, 1.0, 0.1)), PreconditionError);
}

TEST(CovarianceModel, RejectsAsymmetricAndNonUnitDiagonal) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(0, 1) = 0.2;
  EXPECT_THROW(CovarianceModel::from_matrix(s), PreconditionError);
  EXPECT_THROW(membership_general(s, params_for(3, 1.0, 0.1)), PreconditionError);
  Eigen::MatrixXd d = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  EXPECT_THROW(CovarianceModel::from_matrix(d), PreconditionError);
  EXPECT_FALSE(membership_general(d, params_for(3, 1.0, 0.1)).in_ellipsoid);
}

TEST(CovarianceModel, ToeplitzKindChecksStructure) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
  s(0, 1) = s(1, 0) = 0.2;
  s(1, 2) = s(2, 1) = 0.1;
  try {
    CovarianceModel::from_matrix(s, ModelKind::Toeplitz);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("not Toeplitz"), std::string::npos);
  }
  const auto general = CovarianceModel::from_matrix(s);
  EXPECT_THROW(membership_toeplitz(general, params_for(4, 1.0, 0.1)), PreconditionError);
  EXPECT_THROW(general.toeplitz_diagonals(), PreconditionError);
}

TEST(CovarianceModel, BandCholeskyReproducesMatrix) {
  const std::vector<double> diag{1.0, 0.3, -0.1, 0.05, 0.0, 0.0};
  const auto m = CovarianceModel::from_toeplitz(diag);
  EXPECT_EQ(m.bandwidth(), 3);
  const auto& l = m.cholesky();
  for (int i = 0; i < m.dim(); ++i) {
    for (int j = 0; j < m.dim(); ++j) {
      double s = 0.0;
      for (int k = 0; k < m.dim(); ++k) s += l(i, k) * l(j, k);
      EXPECT_NEAR(s, m(i, j), 1e-14);
    }
  }
}

TEST(Membership, IdentityHasZeroEnergy) {
  for (int p : {1, 2, 7, 40}) {
    for (double alpha : {0.5, 1.0, 3.0}) {
      const auto id = CovarianceModel::identity(p);
      const auto g = membership_general(id, params_for(p, alpha, 0.1));
      EXPECT_TRUE(g.in_ellipsoid);
      EXPECT_EQ(g.ellipsoid_value, 0.0);
      EXPECT_EQ(g.energy, 0.0);
      EXPECT_FALSE(g.in_alternative);
      const auto t = membership_toeplitz(id, params_for(p, alpha, 0.1));
      EXPECT_EQ(t.ellipsoid_value, 0.0);
      EXPECT_EQ(t.energy, 0.0);
      EXPECT_FALSE(t.in_alternative);
    }
  }
}

TEST(Membership, GeneralWorkedExample) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(3, 3);
  s(0, 1) = s(1, 0) = 0.1;
  s(1, 2) = s(2, 1) = 0.1;
  const auto r = membership_general(CovarianceModel::from_matrix(s), params_for(3, 1.0, 0.05));
  // Both pairs sit at distance 1, so the weights |i-j|^{2 alpha} are 1.
  EXPECT_NEAR(r.ellipsoid_value, 0.02 / 3.0, 1e-15);
  EXPECT_NEAR(r.energy, 0.02 / 3.0, 1e-15);
  EXPECT_NEAR(r.half_sum_energy, 0.01, 1e-15);
  EXPECT_TRUE(r.in_ellipsoid);
  EXPECT_TRUE(r.in_alternative);
}

TEST(Membership, ToeplitzWorkedExample) {
  const std::vector<double> diag{1.0, 0.3, 0.0, 0.0};
  const auto r = membership_toeplitz(CovarianceModel::from_toeplitz(diag), params_for(4, 1.0, 0.2));
  EXPECT_NEAR(r.ellipsoid_value, 0.09, 1e-15);
  EXPECT_NEAR(r.energy, 0.09, 1e-15);
  EXPECT_TRUE(r.in_alternative);
  EXPECT_FALSE(membership_toeplitz(CovarianceModel::from_toeplitz(diag), params_for(4, 1.0, 0.31)).in_alternative);
}

TEST(Membership, TransposeLeavesReportUnchanged) {
  Engine rng = make_engine(11);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 6;
    Eigen::MatrixXd g(p, 2 * p);
    for (int i = 0; i < g.size(); ++i) g.data()[i] = z(rng);
    Eigen::MatrixXd s = g * g.transpose();
    const Eigen::VectorXd inv = s.diagonal().cwiseSqrt().cwiseInverse();
    s = inv.asDiagonal() * s * inv.asDiagonal();
    s.diagonal().setOnes();
    const auto a = membership_general(s, params_for(p, 1.0, 0.1));
    const auto b = membership_general(Eigen::MatrixXd(s.transpose()), params_for(p, 1.0, 0.1));
    EXPECT_EQ(a.ellipsoid_value, b.ellipsoid_value);
    EXPECT_EQ(a.energy, b.energy);
    EXPECT_EQ(a.in_ellipsoid, b.in_ellipsoid);
    EXPECT_EQ(a.in_alternative, b.in_alternative);
  }
}

TEST(Extremal, SpecArithmetic) {
  const auto s = extremal_spec(params_for(30, 1.0, 0.1), 1);
  EXPECT_NEAR(s.sigma_offdiag, std::pow(0.1, 1.5), 1e-15);
  EXPECT_NEAR(s.sigma_offdiag, 0.031623, 5e-7);
  EXPECT_EQ(s.band_halfwidth, 10);
  const auto wide = extremal_spec(params_for(30, 1.0, 0.5), 1);
  EXPECT_NEAR(wide.sigma_offdiag, 0.35355, 5e-6);
  EXPECT_EQ(wide.band_halfwidth, 2);
}

TEST(Extremal, EmptyBandGivesIdentity) {
  const auto g = construct_extremal_general(params_for(12, 1.0, 0.5), 3);
  const auto t = construct_extremal_toeplitz(params_for(12, 1.0, 0.5), 3);
  EXPECT_TRUE(g.entries().isIdentity(0.0));
  EXPECT_TRUE(t.entries().isIdentity(0.0));
}

TEST(Extremal, PhiTooLargeIsAnError) {
  // sigma = 0.6^3.5 ~ 0.167, T = ceil(0.6^-5) = 13.
  try {
    construct_extremal_general(params_for(50, 0.2, 0.6), 1);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("phi too large for extremal construction"), std::string::npos);
  }
}

TEST(Extremal, GeneralBandAndMagnitudes) {
  const int p = 25;
  const auto params = params_for(p, 1.0, 0.1);
  const auto m = construct_extremal_general(params, 99);
  const double sigma = std::pow(0.1, 1.5);
  int plus = 0;
  int minus = 0;
  for (int i = 0; i < p; ++i) {
    EXPECT_EQ(m(i, i), 1.0);
    for (int j = 0; j < p; ++j) {
      const int d = std::abs(i - j);
      if (d > 1 && d < 10) {
        EXPECT_DOUBLE_EQ(std::abs(m(i, j)), sigma);
        if (i < j) (m(i, j) > 0 ? plus : minus)++;
      } else if (d != 0) {
        EXPECT_EQ(m(i, j), 0.0);
      }
    }
  }
  EXPECT_GT(plus, 0);
  EXPECT_GT(minus, 0);
  EXPECT_EQ(m.kind(), ModelKind::ExtremalGeneral);
}

TEST(Extremal, ToeplitzHasEightSignedDiagonals) {
  const auto m = construct_extremal_toeplitz(params_for(20, 1.0, 0.1), 5);
  const auto d = m.toeplitz_diagonals();
  int nonzero = 0;
  for (int j = 1; j < 20; ++j) {
    if (j >= 2 && j <= 9) {
      EXPECT_NEAR(std::abs(d[static_cast<std::size_t>(j)]), 0.031623, 5e-7);
      ++nonzero;
    } else {
      EXPECT_EQ(d[static_cast<std::size_t>(j)], 0.0);
    }
  }
  EXPECT_EQ(nonzero, 8);
  EXPECT_NO_THROW(membership_toeplitz(m, params_for(20, 1.0, 0.1)));
}

TEST(Extremal, DeterministicAndSeedOnlyFlipsSigns) {
  const auto params = params_for(40, 0.75, 0.08);
  for (auto build : {&construct_extremal_general, &construct_extremal_toeplitz}) {
    const auto a = build(params, 17);
    const auto b = build(params, 17);
    const auto c = build(params, 18);
    EXPECT_EQ(a.entries(), b.entries());
    EXPECT_EQ(a.entries().cwiseAbs(), c.entries().cwiseAbs());
    EXPECT_NE(a.entries(), c.entries());
  }
}

TEST(Extremal, ConstructionsFactorAndStayInsideEllipsoid) {
  for (double alpha : {0.75, 1.0, 2.0}) {
    for (double phi : {0.02, 0.05, 0.1}) {
      const auto params = params_for(64, alpha, phi);
      const auto g = construct_extremal_general(params, 1);
      const auto t = construct_extremal_toeplitz(params, 1);
      EXPECT_GT(g.cholesky()(0, 0), 0.0);
      for (int i = 0; i < 64; ++i) EXPECT_EQ(g(i, i), 1.0);
      EXPECT_TRUE(membership_general(g, params).in_ellipsoid) << alpha << ' ' << phi;
    }
  }
}

TEST(ExtremalValue, WorkedExample) {
  EXPECT_NEAR(extremal_constant(1.0), 3.0 / std::pow(5.0, 1.5), 1e-15);
  EXPECT_NEAR(extremal_constant(1.0), 0.268328, 5e-7);
  EXPECT_NEAR(extremal_value(params_for(10, 1.0, 0.1)), 0.0016381, 5e-8);
}

TEST(ExtremalValue, PowerLawInPhi) {
  const double r = extremal_value(params_for(10, 1.0, 0.2)) / extremal_value(params_for(10, 1.0, 0.1));
  EXPECT_NEAR(r, std::pow(2.0, 2.5), 1e-12);
  for (double alpha : {0.6, 1.0, 3.0}) {
    const double phi = 1e-4;
    EXPECT_NEAR(extremal_value(params_for(10, alpha, phi)) / std::pow(phi, 2.0 + 0.5 / alpha),
                std::sqrt(extremal_constant(alpha)), 1e-12);
  }
}

// The closed form is the continuum limit of a finite quadratic program;
// the program's optimum approaches it from above as phi shrinks.
TEST(ExtremalValue, MatchesQuadraticProgram) {
  for (double alpha : {0.75, 1.0, 2.0}) {
    double previous = 1e9;
    for (double phi : {0.05, 0.02, 0.01}) {
      const double ratio = extremal_qp(alpha, phi, 5000) / extremal_value(params_for(10, alpha, phi));
      EXPECT_GE(ratio, 1.0 - 1e-6) << alpha << ' ' << phi;
      EXPECT_LT(ratio, previous) << alpha << ' ' << phi;
      previous = ratio;
    }
    EXPECT_NEAR(previous, 1.0, 0.03) << alpha;
  }
}

TEST(CeilTolerant, AbsorbsRepresentationError) {
  EXPECT_EQ(ceil_tolerant(1.5 / 0.1), 15);
  EXPECT_EQ(ceil_tolerant(15.2), 16);
  EXPECT_EQ(ceil_tolerant(3.0), 3);
  EXPECT_EQ(ceil_tolerant(2.0000001), 3);
}

TEST(ModelKind, RoundTrip) {
  for (auto k : {ModelKind::Identity, ModelKind::GeneralEllipsoid, ModelKind::Toeplitz, ModelKind::ExtremalGeneral,
                 ModelKind::ExtremalToeplitz}) {
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_model_kind("banana").has_value());
}
