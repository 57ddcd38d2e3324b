#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "covtest/seeding.hpp"

namespace covtest {

enum class ModelKind { Identity, GeneralEllipsoid, Toeplitz, ExtremalGeneral, ExtremalToeplitz };

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept;

// Lower Cholesky factor of a banded SPD matrix, stored row by row inside the
// band. A dense matrix is the special case bandwidth = dim - 1.
class BandCholesky {
 public:
  // Returns std::nullopt when the matrix is not positive definite.
  static std::optional<BandCholesky> factor(const Eigen::MatrixXd& a, int bandwidth);

  int dim() const noexcept { return dim_; }
  int bandwidth() const noexcept { return bandwidth_; }

  // L(i, j); zero outside the band and above the diagonal.
  double operator()(int i, int j) const noexcept;

  // x = L z. Both spans have length dim().
  void multiply(std::span<const double> z, std::span<double> x) const noexcept;

 private:
  BandCholesky(int dim, int bandwidth);
  double& at(int i, int j) noexcept { return band_[static_cast<std::size_t>(i) * width() + (j - i + bandwidth_)]; }
  double at(int i, int j) const noexcept { return band_[static_cast<std::size_t>(i) * width() + (j - i + bandwidth_)]; }
  std::size_t width() const noexcept { return static_cast<std::size_t>(bandwidth_) + 1; }

  int dim_ = 0;
  int bandwidth_ = 0;
  std::vector<double> band_;
};

// A normalized covariance matrix: symmetric, unit diagonal, positive
// definite. The invariants are checked on construction and the Cholesky
// factor used to certify positive definiteness is kept for sampling.
class CovarianceModel {
 public:
  static CovarianceModel identity(int p);

  // Throws PreconditionError if the matrix is not square, not symmetric, has
  // a diagonal entry other than 1, or is not positive definite. Toeplitz
  // kinds are additionally checked to be constant along every diagonal.
  static CovarianceModel from_matrix(Eigen::MatrixXd entries, ModelKind kind = ModelKind::GeneralEllipsoid);

  // Builds the symmetric Toeplitz matrix with first row sigma_0..sigma_{p-1}.
  static CovarianceModel from_toeplitz(std::span<const double> diagonals,
                                       ModelKind kind = ModelKind::Toeplitz);

  int dim() const noexcept { return static_cast<int>(entries_.rows()); }
  ModelKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  double operator()(int i, int j) const noexcept { return entries_(i, j); }

  // Largest |i - j| with a nonzero entry.
  int bandwidth() const noexcept { return cholesky_.bandwidth(); }
  const BandCholesky& cholesky() const noexcept { return cholesky_; }

  bool is_toeplitz() const noexcept;

  // sigma_0..sigma_{p-1}; throws PreconditionError for non-Toeplitz matrices.
  std::vector<double> toeplitz_diagonals() const;

 private:
  CovarianceModel(Eigen::MatrixXd entries, ModelKind kind, BandCholesky chol)
      : entries_(std::move(entries)), kind_(kind), cholesky_(std::move(chol)) {}

  Eigen::MatrixXd entries_;
  ModelKind kind_;
  BandCholesky cholesky_;
};

// Smoothness, separation radius, observation probability and sizes that
// define a class and its alternative.
struct ClassParams {
  double alpha = 1.0;
  double phi = 0.0;
  double a = 1.0;
  int n = 1;
  int p = 1;

  // Throws PreconditionError naming the offending field.
  void validate() const;
};

struct MembershipReport {
  bool in_ellipsoid = false;
  double ellipsoid_value = 0.0;
  // (1/p) sum_{i<j} sigma_ij^2 for the general class, sum_{j>=1} sigma_j^2
  // for the Toeplitz class.
  double energy = 0.0;
  // (1/2) sum_{i<j} sigma_ij^2, the normalization used by the adaptive
  // alternative.
  double half_sum_energy = 0.0;
  bool in_alternative = false;
};

MembershipReport membership_general(const CovarianceModel& model, const ClassParams& params);

// Same report for a raw matrix. A diagonal other than 1 is reported as
// outside the ellipsoid; asymmetry and failure of positive definiteness are
// errors.
MembershipReport membership_general(const Eigen::MatrixXd& matrix, const ClassParams& params);

MembershipReport membership_toeplitz(const CovarianceModel& model, const ClassParams& params);

// Parameters of the banded Rademacher construction: magnitude
// sigma = phi^{1 + 1/(2 alpha)} on offsets 1 < |i - j| < T with
// T = ceil(phi^{-1/alpha}).
struct ExtremalSpec {
  double sigma_offdiag = 0.0;
  int band_halfwidth = 0;
  Seed sign_seed = 0;
};

// Throws PreconditionError("phi too large for extremal construction ...")
// unless 2 (T - 1) sigma < 1.
ExtremalSpec extremal_spec(const ClassParams& params, Seed seed);

// Independent signs u_ij = u_ji for every pair in the band.
CovarianceModel construct_extremal_general(const ClassParams& params, Seed seed);

// One sign per diagonal.
CovarianceModel construct_extremal_toeplitz(const ClassParams& params, Seed seed);

// C(alpha) = (2 alpha + 1) / (4 alpha + 1)^{1 + 1/(2 alpha)}.
double extremal_constant(double alpha);

// Asymptotic value of the extremal problem, C(alpha)^{1/2} phi^{2 + 1/(2 alpha)}.
double extremal_value(const ClassParams& params);

// ceil() that ignores representation error just above an integer, so that
// e.g. 1.5 / 0.1 maps to 15.
long long ceil_tolerant(double x) noexcept;

}  // namespace covtest
