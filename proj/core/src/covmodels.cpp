#include "covtest/covmodels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "covtest/error.hpp"

namespace covtest {

namespace {

constexpr double kSymmetryTol = 1e-12;

std::string describe_size(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

void require_square_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw PreconditionError("covariance matrix must be square and nonempty, got " +
                            describe_size(m.rows(), m.cols()));
  }
  const Eigen::Index p = m.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = i + 1; j < p; ++j) {
      const double scale = std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
      if (std::abs(m(i, j) - m(j, i)) > kSymmetryTol * scale) {
        std::ostringstream os;
        os << "covariance matrix is not symmetric at (" << i << "," << j << ")";
        throw PreconditionError(os.str());
      }
    }
  }
}

int detect_bandwidth(const Eigen::MatrixXd& m) {
  const int p = static_cast<int>(m.rows());
  int bw = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = p - 1; j > i + bw; --j) {
      if (m(i, j) != 0.0 || m(j, i) != 0.0) {
        bw = j - i;
        break;
      }
    }
  }
  return bw;
}

bool toeplitz_structure(const Eigen::MatrixXd& m) {
  const Eigen::Index p = m.rows();
  for (Eigen::Index i = 1; i < p; ++i) {
    for (Eigen::Index j = 1; j < p; ++j) {
      if (m(i, j) != m(i - 1, j - 1)) return false;
    }
  }
  return true;
}

bool is_toeplitz_kind(ModelKind kind) {
  return kind == ModelKind::Toeplitz || kind == ModelKind::ExtremalToeplitz;
}

void require_dim(const Eigen::MatrixXd& m, int p) {
  if (m.rows() != p) {
    std::ostringstream os;
    os << "dimension mismatch: model has p=" << m.rows() << " but params.p=" << p;
    throw PreconditionError(os.str());
  }
}

// Sums over i<j of sigma_ij^2 and sigma_ij^2 |i-j|^{2 alpha}.
struct OffDiagonalSums {
  double plain = 0.0;
  double weighted = 0.0;
};

OffDiagonalSums off_diagonal_sums(const Eigen::MatrixXd& m, double alpha) {
  OffDiagonalSums s;
  const Eigen::Index p = m.rows();
  for (Eigen::Index j = 1; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double v = m(i, j) * m(i, j);
      if (v == 0.0) continue;
      s.plain += v;
      s.weighted += v * std::pow(static_cast<double>(j - i), 2.0 * alpha);
    }
  }
  return s;
}

bool unit_diagonal(const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 1.0) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::Identity: return "identity";
    case ModelKind::GeneralEllipsoid: return "general";
    case ModelKind::Toeplitz: return "toeplitz";
    case ModelKind::ExtremalGeneral: return "extremal_general";
    case ModelKind::ExtremalToeplitz: return "extremal_toeplitz";
  }
  return "unknown";
}

std::optional<ModelKind> parse_model_kind(std::string_view text) noexcept {
  for (ModelKind k : {ModelKind::Identity, ModelKind::GeneralEllipsoid, ModelKind::Toeplitz,
                      ModelKind::ExtremalGeneral, ModelKind::ExtremalToeplitz}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

long long ceil_tolerant(double x) noexcept {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<long long>(r);
  return static_cast<long long>(std::ceil(x));
}

// --- BandCholesky ---------------------------------------------------------

BandCholesky::BandCholesky(int dim, int bandwidth)
    : dim_(dim), bandwidth_(bandwidth), band_(static_cast<std::size_t>(dim) * (bandwidth + 1), 0.0) {}

std::optional<BandCholesky> BandCholesky::factor(const Eigen::MatrixXd& a, int bandwidth) {
  const int p = static_cast<int>(a.rows());
  bandwidth = std::clamp(bandwidth, 0, std::max(0, p - 1));
  BandCholesky l(p, bandwidth);
  for (int i = 0; i < p; ++i) {
    const int j0 = std::max(0, i - bandwidth);
    for (int j = j0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = std::max(j0, j - bandwidth); k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (!(s > 0.0) || !std::isfinite(s)) return std::nullopt;
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  return l;
}

double BandCholesky::operator()(int i, int j) const noexcept {
  if (j > i || i - j > bandwidth_) return 0.0;
  return at(i, j);
}

void BandCholesky::multiply(std::span<const double> z, std::span<double> x) const noexcept {
  for (int i = 0; i < dim_; ++i) {
    const int j0 = std::max(0, i - bandwidth_);
    const double* row = &band_[static_cast<std::size_t>(i) * width() + (j0 - i + bandwidth_)];
    double acc = 0.0;
    for (int j = j0; j <= i; ++j) acc += row[j - j0] * z[j];
    x[i] = acc;
  }
}

// --- CovarianceModel ------------------------------------------------------

CovarianceModel CovarianceModel::identity(int p) {
  if (p < 1) throw PreconditionError("identity model needs p >= 1");
  return from_matrix(Eigen::MatrixXd::Identity(p, p), ModelKind::Identity);
}

CovarianceModel CovarianceModel::from_matrix(Eigen::MatrixXd entries, ModelKind kind) {
  require_square_symmetric(entries);
  const Eigen::Index p = entries.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (std::abs(entries(i, i) - 1.0) > kSymmetryTol) {
      std::ostringstream os;
      os << "covariance matrix must have unit diagonal, entry (" << i << "," << i
         << ") = " << entries(i, i);
      throw PreconditionError(os.str());
    }
    entries(i, i) = 1.0;
  }
  // Symmetrize exactly so later sums do not depend on which triangle is read.
  entries = (0.5 * (entries + entries.transpose())).eval();
  if (is_toeplitz_kind(kind) && !toeplitz_structure(entries)) {
    throw PreconditionError("matrix is not Toeplitz: entries vary along a diagonal");
  }
  auto chol = BandCholesky::factor(entries, detect_bandwidth(entries));
  if (!chol) throw PreconditionError("matrix not positive definite (Cholesky factorization failed)");
  return CovarianceModel(std::move(entries), kind, std::move(*chol));
}

CovarianceModel CovarianceModel::from_toeplitz(std::span<const double> diagonals, ModelKind kind) {
  if (diagonals.empty()) throw PreconditionError("Toeplitz model needs at least sigma_0");
  const int p = static_cast<int>(diagonals.size());
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) m(i, j) = diagonals[static_cast<std::size_t>(std::abs(i - j))];
  }
  return from_matrix(std::move(m), kind);
}

bool CovarianceModel::is_toeplitz() const noexcept { return toeplitz_structure(entries_); }

std::vector<double> CovarianceModel::toeplitz_diagonals() const {
  if (!is_toeplitz()) throw PreconditionError("matrix is not Toeplitz: entries vary along a diagonal");
  std::vector<double> d(static_cast<std::size_t>(dim()));
  for (int j = 0; j < dim(); ++j) d[static_cast<std::size_t>(j)] = entries_(0, j);
  return d;
}

// --- ClassParams ----------------------------------------------------------

void ClassParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw PreconditionError("alpha must be > 0");
  if (!(phi >= 0.0) || !std::isfinite(phi)) throw PreconditionError("phi must be >= 0");
  if (!(a > 0.0 && a <= 1.0)) throw PreconditionError("a must lie in (0,1]");
  if (n < 1) throw PreconditionError("n must be a positive integer");
  if (p < 1) throw PreconditionError("p must be a positive integer");
}

// --- membership -----------------------------------------------------------

MembershipReport membership_general(const CovarianceModel& model, const ClassParams& params) {
  return membership_general(model.entries(), params);
}

MembershipReport membership_general(const Eigen::MatrixXd& matrix, const ClassParams& params) {
  params.validate();
  require_square_symmetric(matrix);
  require_dim(matrix, params.p);
  const Eigen::MatrixXd sym = 0.5 * (matrix + matrix.transpose());
  if (!BandCholesky::factor(sym, detect_bandwidth(sym))) {
    throw PreconditionError("matrix not positive definite (Cholesky factorization failed)");
  }
  const auto sums = off_diagonal_sums(sym, params.alpha);
  const double p = static_cast<double>(params.p);
  MembershipReport r;
  r.ellipsoid_value = sums.weighted / p;
  r.energy = sums.plain / p;
  r.half_sum_energy = 0.5 * sums.plain;
  r.in_ellipsoid = r.ellipsoid_value <= 1.0 && unit_diagonal(sym);
  r.in_alternative = r.in_ellipsoid && r.energy >= params.phi * params.phi;
  return r;
}

MembershipReport membership_toeplitz(const CovarianceModel& model, const ClassParams& params) {
  params.validate();
  require_dim(model.entries(), params.p);
  const auto d = model.toeplitz_diagonals();
  MembershipReport r;
  for (std::size_t j = 1; j < d.size(); ++j) {
    const double v = d[j] * d[j];
    r.energy += v;
    r.ellipsoid_value += v * std::pow(static_cast<double>(j), 2.0 * params.alpha);
  }
  r.half_sum_energy = 0.5 * off_diagonal_sums(model.entries(), params.alpha).plain;
  // The model is positive definite with sigma_0 = 1 by construction.
  r.in_ellipsoid = r.ellipsoid_value <= 1.0 && d.front() == 1.0;
  r.in_alternative = r.in_ellipsoid && r.energy >= params.phi * params.phi;
  return r;
}

// --- extremal constructions -----------------------------------------------

ExtremalSpec extremal_spec(const ClassParams& params, Seed seed) {
  params.validate();
  if (!(params.phi > 0.0)) throw PreconditionError("extremal construction needs phi > 0");
  ExtremalSpec s;
  s.sigma_offdiag = std::pow(params.phi, 1.0 + 1.0 / (2.0 * params.alpha));
  const long long t = ceil_tolerant(std::pow(params.phi, -1.0 / params.alpha));
  s.band_halfwidth = static_cast<int>(std::clamp<long long>(t, 1, 1LL << 30));
  s.sign_seed = seed;
  if (!(2.0 * (s.band_halfwidth - 1) * s.sigma_offdiag < 1.0)) {
    std::ostringstream os;
    os << "phi too large for extremal construction: 2(T-1)sigma = "
       << 2.0 * (s.band_halfwidth - 1) * s.sigma_offdiag << " >= 1 (T=" << s.band_halfwidth
       << ", sigma=" << s.sigma_offdiag << ")";
    throw PreconditionError(os.str());
  }
  return s;
}

CovarianceModel construct_extremal_general(const ClassParams& params, Seed seed) {
  const ExtremalSpec spec = extremal_spec(params, seed);
  const int p = params.p;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p);
  Engine rng = make_engine(spec.sign_seed);
  for (int i = 0; i < p; ++i) {
    for (int j = i + 2; j < std::min(p, i + spec.band_halfwidth); ++j) {
      const double v = (rng() >> 63) ? spec.sigma_offdiag : -spec.sigma_offdiag;
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return CovarianceModel::from_matrix(std::move(m), ModelKind::ExtremalGeneral);
}

CovarianceModel construct_extremal_toeplitz(const ClassParams& params, Seed seed) {
  const ExtremalSpec spec = extremal_spec(params, seed);
  std::vector<double> diag(static_cast<std::size_t>(params.p), 0.0);
  diag[0] = 1.0;
  Engine rng = make_engine(spec.sign_seed);
  for (int d = 2; d < std::min(params.p, spec.band_halfwidth); ++d) {
    diag[static_cast<std::size_t>(d)] = (rng() >> 63) ? spec.sigma_offdiag : -spec.sigma_offdiag;
  }
  return CovarianceModel::from_toeplitz(diag, ModelKind::ExtremalToeplitz);
}

double extremal_constant(double alpha) {
  if (!(alpha > 0.0)) throw PreconditionError("alpha must be > 0");
  return (2.0 * alpha + 1.0) / std::pow(4.0 * alpha + 1.0, 1.0 + 1.0 / (2.0 * alpha));
}

double extremal_value(const ClassParams& params) {
  if (!(params.phi > 0.0)) throw PreconditionError("phi must be > 0");
  const double c = extremal_constant(params.alpha);
  return std::sqrt(c) * std::pow(params.phi, 2.0 + 1.0 / (2.0 * params.alpha));
}

}  // namespace covtest
