#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/covmodels.hpp"
#include "covtest/sampling.hpp"
#include "covtest/testing.hpp"

namespace covtest {

// A test procedure reduced to its decision.
using Decision = std::function<bool(const MaskedSample&)>;

struct AlternativeFamily {
  std::string name;
  // Draws the alternative covariance for one replication.
  std::function<CovarianceModel(Seed)> draw;
};

struct MonteCarloSetup {
  int n = 0;
  int p = 0;
  double a = 1.0;
  int replications = 1000;
  Seed master_seed = 0;
  std::uint64_t entry_index = 0;
  int threads = 1;
};

// Per-replication decisions. Replication r under the null and under every
// alternative uses the same sample seed, so masks and Gaussian draws are
// paired across hypotheses.
struct ReplicationOutcomes {
  std::vector<std::uint8_t> null_rejects;
  std::vector<std::vector<std::uint8_t>> alt_rejects;
};

struct ErrorEstimates {
  double eta_hat = 0.0;
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
  int replications = 0;
  double se_eta = 0.0;
  double se_beta = 0.0;
  // Index of the alternative family attaining beta_hat.
  std::size_t worst_alternative = 0;
};

Seed replication_seed(const MonteCarloSetup& setup, std::uint64_t replication) noexcept;
Seed alternative_seed(const MonteCarloSetup& setup, std::uint64_t replication, std::uint64_t family) noexcept;

ReplicationOutcomes run_replications(const MonteCarloSetup& setup, const std::vector<AlternativeFamily>& alternatives,
                                     const Decision& decision);

ErrorEstimates summarize(const ReplicationOutcomes& outcomes);

// eta_hat is the null rejection frequency; beta_hat the largest
// non-rejection frequency over the alternative families.
ErrorEstimates estimate_errors(const MonteCarloSetup& setup, const std::vector<AlternativeFamily>& alternatives,
                               const Decision& decision);

enum class AlternativeKind { ExtremalGeneral, ExtremalToeplitz, UserMatrix };

std::string_view to_string(AlternativeKind kind) noexcept;
std::optional<AlternativeKind> parse_alternative_kind(std::string_view text) noexcept;

// Fresh Rademacher signs per replication for extremal kinds; the fixed
// matrix for UserMatrix.
AlternativeFamily make_alternative(AlternativeKind kind, const ClassParams& params,
                                   const std::optional<CovarianceModel>& user_matrix = std::nullopt);

enum class Procedure { Fixed, Adaptive, AlwaysReject, NeverReject };

std::string_view to_string(Procedure procedure) noexcept;
std::optional<Procedure> parse_procedure(std::string_view text) noexcept;

struct TestConfig {
  Procedure procedure = Procedure::Fixed;
  StatKind kind = StatKind::General;
  ThresholdSpec threshold;
  // Adaptive grid.
  double alpha_star = 0.75;
  std::optional<double> alpha_star_np;
  double c_star = 4.5;
  // Fixed test: use m = p - 1 when the bandwidth condition asks for m >= p.
  bool clamp_bandwidth = false;
};

// Precomputes bandwidth and threshold(s) for one scenario. alpha and phi
// are the values the fixed test is tuned for; the adaptive test ignores them.
Decision make_decision(const TestConfig& config, double alpha, double phi, int n, int p, double a);

struct SweepEntry {
  int n = 0;
  int p = 0;
  double a = 1.0;
  double alpha = 1.0;
  // phi = multiplier * rate; the starting point is ignored by bisection.
  double phi_multiplier = 1.0;
};

struct SweepPlan {
  std::vector<SweepEntry> entries;
  AlternativeKind alternative = AlternativeKind::ExtremalGeneral;
  std::optional<CovarianceModel> user_matrix;
  TestConfig test;
  int replications = 2000;
  Seed master_seed = 0;
  double target_gamma = 0.25;
  double c_lo = 0.25;
  double c_hi = 8.0;
  int bisection_steps = 10;
  int threads = 1;
  bool record_wall_time = false;
  // Rates use the adaptive (log log) form instead of the minimax one.
  bool adaptive_rate = false;
};

struct SweepRow {
  std::string scenario_id;
  StatKind kind = StatKind::General;
  int n = 0;
  int p = 0;
  double a = 1.0;
  double alpha = 1.0;
  double phi = 0.0;
  double C = 0.0;
  int R = 0;
  ErrorEstimates errors;
  double wall_ms = 0.0;
  bool flagged = false;
  std::string note;
  // a^2 n sqrt(p) or a^2 n p.
  double effective_size = 0.0;
  // p / (a^2 n)^{4 alpha - 1}; probe rows only, NaN otherwise.
  double regime_ratio = 0.0;
};

// Errors at phi = multiplier * rate for every entry, no search.
std::vector<SweepRow> evaluate_plan(const SweepPlan& plan);

// For each entry, the smallest multiplier C in [c_lo, c_hi] (geometric
// bisection) with gamma_hat(C * rate) <= target_gamma. For extremal
// alternatives c_hi is first lowered to the largest multiplier at which the
// construction is positive definite with a nonempty band.
std::vector<SweepRow> rate_sweep(const SweepPlan& plan);

struct ProbeParams {
  double alpha = 1.0;
  double a = 1.0;
  int n = 0;
  int p = 0;
  std::vector<double> shrink_factors{0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  StatKind kind = StatKind::General;
  TestConfig test;
  int replications = 1000;
  Seed master_seed = 0;
  int threads = 1;
  bool record_wall_time = false;
};

// gamma_hat of the fixed test tuned to (alpha, phi) at phi = s * rate against
// extremal alternatives, for every shrink factor s.
std::vector<SweepRow> power_collapse_probe(const ProbeParams& params);

// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

std::string sweep_csv_header();
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void write_sweep_jsonl(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace covtest
