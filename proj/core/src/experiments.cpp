#include "covtest/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "covtest/error.hpp"
#include "covtest/parallel.hpp"

namespace covtest {

// --- parallel -------------------------------------------------------------

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(count);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

int threads_from_env() {
  const char* env = std::getenv("COVTEST_THREADS");
  if (env == nullptr) return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 1024) return 1;
  return static_cast<int>(v);
}

// --- replications ---------------------------------------------------------

Seed replication_seed(const MonteCarloSetup& setup, std::uint64_t replication) noexcept {
  return derive_seed(setup.master_seed, {setup.entry_index, replication});
}

Seed alternative_seed(const MonteCarloSetup& setup, std::uint64_t replication, std::uint64_t family) noexcept {
  return derive_seed(setup.master_seed, {setup.entry_index, replication, family + 1, 0x7369676eULL});
}

ReplicationOutcomes run_replications(const MonteCarloSetup& setup, const std::vector<AlternativeFamily>& alternatives,
                                     const Decision& decision) {
  if (setup.replications < 1) throw PreconditionError("replications must be >= 1");
  const auto reps = static_cast<std::size_t>(setup.replications);
  ReplicationOutcomes out;
  out.null_rejects.assign(reps, 0);
  out.alt_rejects.assign(alternatives.size(), std::vector<std::uint8_t>(reps, 0));
  const CovarianceModel null_model = CovarianceModel::identity(setup.p);
  parallel_for(reps, setup.threads, [&](std::size_t r) {
    const Seed seed = replication_seed(setup, r);
    out.null_rejects[r] = decision(sample(null_model, setup.n, setup.a, seed)) ? 1 : 0;
    for (std::size_t f = 0; f < alternatives.size(); ++f) {
      const CovarianceModel alt = alternatives[f].draw(alternative_seed(setup, r, f));
      out.alt_rejects[f][r] = decision(sample(alt, setup.n, setup.a, seed)) ? 1 : 0;
    }
  });
  return out;
}

ErrorEstimates summarize(const ReplicationOutcomes& outcomes) {
  const auto freq = [](const std::vector<std::uint8_t>& v) {
    std::size_t hits = 0;
    for (auto x : v) hits += x;
    return static_cast<double>(hits) / static_cast<double>(v.size());
  };
  const auto se = [](double q, std::size_t r) { return std::sqrt(q * (1.0 - q) / static_cast<double>(r)); };
  ErrorEstimates e;
  e.replications = static_cast<int>(outcomes.null_rejects.size());
  e.eta_hat = freq(outcomes.null_rejects);
  e.se_eta = se(e.eta_hat, outcomes.null_rejects.size());
  e.beta_hat = 0.0;
  for (std::size_t f = 0; f < outcomes.alt_rejects.size(); ++f) {
    const double beta = 1.0 - freq(outcomes.alt_rejects[f]);
    if (f == 0 || beta > e.beta_hat) {
      e.beta_hat = beta;
      e.worst_alternative = f;
    }
  }
  if (!outcomes.alt_rejects.empty()) e.se_beta = se(e.beta_hat, outcomes.alt_rejects[e.worst_alternative].size());
  e.gamma_hat = e.eta_hat + e.beta_hat;
  return e;
}

ErrorEstimates estimate_errors(const MonteCarloSetup& setup, const std::vector<AlternativeFamily>& alternatives,
                               const Decision& decision) {
  return summarize(run_replications(setup, alternatives, decision));
}

// --- alternatives and decisions -------------------------------------------

std::string_view to_string(AlternativeKind kind) noexcept {
  switch (kind) {
    case AlternativeKind::ExtremalGeneral: return "extremal_general";
    case AlternativeKind::ExtremalToeplitz: return "extremal_toeplitz";
    case AlternativeKind::UserMatrix: return "user_matrix";
  }
  return "unknown";
}

std::optional<AlternativeKind> parse_alternative_kind(std::string_view text) noexcept {
  for (auto k : {AlternativeKind::ExtremalGeneral, AlternativeKind::ExtremalToeplitz, AlternativeKind::UserMatrix}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

AlternativeFamily make_alternative(AlternativeKind kind, const ClassParams& params,
                                   const std::optional<CovarianceModel>& user_matrix) {
  switch (kind) {
    case AlternativeKind::ExtremalGeneral:
      extremal_spec(params, 0);  // fail fast on an invalid phi
      return {"extremal_general", [params](Seed s) { return construct_extremal_general(params, s); }};
    case AlternativeKind::ExtremalToeplitz:
      extremal_spec(params, 0);
      return {"extremal_toeplitz", [params](Seed s) { return construct_extremal_toeplitz(params, s); }};
    case AlternativeKind::UserMatrix:
      if (!user_matrix) throw PreconditionError("user_matrix alternative needs a model");
      if (user_matrix->dim() != params.p) throw PreconditionError("user matrix dimension differs from p");
      return {"user_matrix", [m = *user_matrix](Seed) { return m; }};
  }
  throw PreconditionError("unknown alternative kind");
}

std::string_view to_string(Procedure procedure) noexcept {
  switch (procedure) {
    case Procedure::Fixed: return "fixed";
    case Procedure::Adaptive: return "adaptive";
    case Procedure::AlwaysReject: return "always_reject";
    case Procedure::NeverReject: return "never_reject";
  }
  return "unknown";
}

std::optional<Procedure> parse_procedure(std::string_view text) noexcept {
  for (auto p : {Procedure::Fixed, Procedure::Adaptive, Procedure::AlwaysReject, Procedure::NeverReject}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

Decision make_decision(const TestConfig& config, double alpha, double phi, int n, int p, double a) {
  switch (config.procedure) {
    case Procedure::AlwaysReject: return [](const MaskedSample&) { return true; };
    case Procedure::NeverReject: return [](const MaskedSample&) { return false; };
    case Procedure::Adaptive: {
      GridParams gp;
      gp.alpha_star = config.alpha_star;
      gp.alpha_star_np = config.alpha_star_np;
      gp.a = a;
      gp.n = n;
      gp.p = p;
      gp.c_star = config.c_star;
      gp.kind = config.kind;
      AdaptiveGrid grid = build_grid(gp);
      return [grid = std::move(grid)](const MaskedSample& s) { return test_adaptive(s, grid).reject; };
    }
    case Procedure::Fixed: break;
  }
  int m = 0;
  try {
    m = choose_m(alpha, phi, config.threshold.D_const, config.threshold.K_const, p).m;
  } catch (const PreconditionError&) {
    if (!config.clamp_bandwidth || !(phi > 0.0 && phi < 1.0) || p < 2) throw;
    m = p - 1;
  }
  const double t = fixed_threshold(config.threshold, config.kind, alpha, phi, n, p, m, a);
  return [m, t, kind = config.kind](const MaskedSample& s) { return compute_statistic(kind, s, m).value > t; };
}

// --- sweeps ---------------------------------------------------------------

namespace {

double effective_size(StatKind kind, double a, int n, int p) {
  const double base = a * a * n;
  return kind == StatKind::General ? base * std::sqrt(static_cast<double>(p)) : base * p;
}

double entry_rate(const SweepPlan& plan, const SweepEntry& e) {
  return plan.adaptive_rate ? adaptive_rate(plan.test.kind, e.alpha, e.a, e.n, e.p)
                            : rate(plan.test.kind, e.alpha, e.a, e.n, e.p);
}

struct Evaluation {
  ErrorEstimates errors;
  double wall_ms = 0.0;
};

Evaluation evaluate_at(const SweepPlan& plan, std::size_t index, double phi) {
  const SweepEntry& e = plan.entries[index];
  const auto start = std::chrono::steady_clock::now();
  ClassParams params{e.alpha, phi, e.a, e.n, e.p};
  MonteCarloSetup setup{e.n, e.p, e.a, plan.replications, plan.master_seed, index, plan.threads};
  const auto alt = make_alternative(plan.alternative, params, plan.user_matrix);
  const auto decision = make_decision(plan.test, e.alpha, phi, e.n, e.p, e.a);
  Evaluation ev;
  ev.errors = estimate_errors(setup, {alt}, decision);
  if (plan.record_wall_time) {
    ev.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return ev;
}

SweepRow base_row(const SweepPlan& plan, std::size_t index, std::string_view prefix) {
  const SweepEntry& e = plan.entries[index];
  SweepRow row;
  row.scenario_id = std::string(prefix) + "-" + std::to_string(index);
  row.kind = plan.test.kind;
  row.n = e.n;
  row.p = e.p;
  row.a = e.a;
  row.alpha = e.alpha;
  row.R = plan.replications;
  row.effective_size = effective_size(plan.test.kind, e.a, e.n, e.p);
  row.regime_ratio = std::numeric_limits<double>::quiet_NaN();
  return row;
}

void flag(SweepRow& row, std::string note) {
  row.flagged = true;
  row.scenario_id += ":flagged";
  row.note = std::move(note);
}

bool extremal_valid(const SweepEntry& e, double phi) {
  if (!(phi > 0.0 && phi < 1.0)) return false;
  try {
    // T = 2 leaves the band 1 < |i-j| < T empty and the alternative is the null.
    return extremal_spec(ClassParams{e.alpha, phi, e.a, e.n, e.p}, 0).band_halfwidth >= 3;
  } catch (const PreconditionError&) {
    return false;
  }
}

// c_hi, lowered geometrically until the extremal construction exists and
// has a nonempty band at phi = c * rate. Never below c_lo.
double upper_multiplier(const SweepPlan& plan, const SweepEntry& e, double base_rate) {
  double hi = plan.c_hi;
  if (plan.alternative == AlternativeKind::UserMatrix) return hi;
  while (hi * 0.97 > plan.c_lo && !extremal_valid(e, hi * base_rate)) hi *= 0.97;
  return hi;
}

void validate_plan(const SweepPlan& plan) {
  if (plan.entries.empty()) throw PreconditionError("sweep plan has no entries");
  if (plan.replications < 1) throw PreconditionError("replications must be >= 1");
  for (const auto& e : plan.entries) {
    ClassParams{e.alpha, 0.0, e.a, e.n, e.p}.validate();
    if (e.n < 2 || e.p < 2) throw PreconditionError("sweep entries need n >= 2 and p >= 2");
    entry_rate(plan, e);
  }
}

}  // namespace

std::vector<SweepRow> evaluate_plan(const SweepPlan& plan) {
  validate_plan(plan);
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    SweepRow row = base_row(plan, i, "eval");
    row.C = plan.entries[i].phi_multiplier;
    row.phi = row.C * entry_rate(plan, plan.entries[i]);
    try {
      const auto ev = evaluate_at(plan, i, row.phi);
      row.errors = ev.errors;
      row.wall_ms = ev.wall_ms;
    } catch (const PreconditionError& err) {
      flag(row, err.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> rate_sweep(const SweepPlan& plan) {
  validate_plan(plan);
  if (!(plan.c_lo > 0.0 && plan.c_lo < plan.c_hi)) throw PreconditionError("need 0 < c_lo < c_hi");
  if (!(plan.target_gamma > 0.0 && plan.target_gamma < 2.0)) throw PreconditionError("target_gamma must lie in (0,2)");
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < plan.entries.size(); ++i) {
    SweepRow row = base_row(plan, i, "rate");
    const double base_rate = entry_rate(plan, plan.entries[i]);
    double total_ms = 0.0;
    std::vector<std::pair<double, ErrorEstimates>> seen;
    auto gamma_at = [&](double c) {
      const auto ev = evaluate_at(plan, i, c * base_rate);
      total_ms += ev.wall_ms;
      seen.emplace_back(c, ev.errors);
      return ev.errors;
    };
    try {
      double lo = plan.c_lo;
      double hi = upper_multiplier(plan, plan.entries[i], base_rate);
      ErrorEstimates at_hi = gamma_at(hi);
      if (at_hi.gamma_hat > plan.target_gamma) {
        row.C = hi;
        row.errors = at_hi;
        flag(row, "gamma_hat above target at c_hi");
      } else {
        const ErrorEstimates at_lo = gamma_at(lo);
        if (at_lo.gamma_hat <= plan.target_gamma) {
          hi = lo;
          at_hi = at_lo;
        } else {
          for (int step = 0; step < plan.bisection_steps; ++step) {
            const double mid = std::sqrt(lo * hi);
            const ErrorEstimates at_mid = gamma_at(mid);
            if (at_mid.gamma_hat <= plan.target_gamma) {
              hi = mid;
              at_hi = at_mid;
            } else {
              lo = mid;
            }
          }
        }
        row.C = hi;
        row.errors = at_hi;
        for (const auto& [c, est] : seen) {
          const double noise = 3.0 * std::hypot(est.se_eta, est.se_beta);
          if (c > hi && est.gamma_hat > plan.target_gamma + noise) {
            flag(row, "gamma_hat not monotone in C beyond Monte Carlo noise");
            break;
          }
        }
      }
    } catch (const PreconditionError& err) {
      flag(row, err.what());
    }
    row.phi = row.C * base_rate;
    row.wall_ms = total_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> power_collapse_probe(const ProbeParams& params) {
  if (params.shrink_factors.empty()) throw PreconditionError("probe needs at least one shrink factor");
  SweepPlan plan;
  plan.entries.push_back({params.n, params.p, params.a, params.alpha, 1.0});
  plan.alternative = params.kind == StatKind::General ? AlternativeKind::ExtremalGeneral
                                                      : AlternativeKind::ExtremalToeplitz;
  plan.test = params.test;
  plan.test.kind = params.kind;
  plan.test.clamp_bandwidth = true;
  plan.replications = params.replications;
  plan.master_seed = params.master_seed;
  plan.threads = params.threads;
  plan.record_wall_time = params.record_wall_time;
  validate_plan(plan);

  const double base_rate = entry_rate(plan, plan.entries.front());
  const double regime = params.p / std::pow(params.a * params.a * params.n, 4.0 * params.alpha - 1.0);
  std::vector<SweepRow> rows;
  for (std::size_t s = 0; s < params.shrink_factors.size(); ++s) {
    SweepRow row = base_row(plan, 0, "probe");
    row.scenario_id = "probe-" + std::to_string(s);
    row.C = params.shrink_factors[s];
    row.phi = row.C * base_rate;
    row.regime_ratio = regime;
    try {
      // Same seeds at every factor: the curve is estimated with common random numbers.
      const auto ev = evaluate_at(plan, 0, row.phi);
      row.errors = ev.errors;
      row.wall_ms = ev.wall_ms;
    } catch (const PreconditionError& err) {
      flag(row, err.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw PreconditionError("slope needs two or more points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw PreconditionError("log-log slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw PreconditionError("log-log slope needs distinct x values");
  return sxy / sxx;
}

// --- output ---------------------------------------------------------------

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string sweep_csv_header() {
  return "scenario_id,kind,n,p,a,alpha,phi,C,R,eta_hat,beta_hat,gamma_hat,se_eta,se_beta,wall_ms";
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << sweep_csv_header() << '\n';
  for (const auto& r : rows) {
    os << r.scenario_id << ',' << to_string(r.kind) << ',' << r.n << ',' << r.p << ',' << fmt(r.a) << ','
       << fmt(r.alpha) << ',' << fmt(r.phi) << ',' << fmt(r.C) << ',' << r.R << ',' << fmt(r.errors.eta_hat) << ','
       << fmt(r.errors.beta_hat) << ',' << fmt(r.errors.gamma_hat) << ',' << fmt(r.errors.se_eta) << ','
       << fmt(r.errors.se_beta) << ',' << fmt(r.wall_ms) << '\n';
  }
}

void write_sweep_jsonl(std::ostream& os, const std::vector<SweepRow>& rows) {
  for (const auto& r : rows) {
    nlohmann::json j;
    j["scenario_id"] = r.scenario_id;
    j["kind"] = std::string(to_string(r.kind));
    j["n"] = r.n;
    j["p"] = r.p;
    j["a"] = r.a;
    j["alpha"] = r.alpha;
    j["phi"] = r.phi;
    j["C"] = r.C;
    j["R"] = r.R;
    j["eta_hat"] = r.errors.eta_hat;
    j["beta_hat"] = r.errors.beta_hat;
    j["gamma_hat"] = r.errors.gamma_hat;
    j["se_eta"] = r.errors.se_eta;
    j["se_beta"] = r.errors.se_beta;
    j["wall_ms"] = r.wall_ms;
    j["flagged"] = r.flagged;
    if (!r.note.empty()) j["note"] = r.note;
    j["effective_size"] = r.effective_size;
    if (std::isfinite(r.regime_ratio)) j["lower_bound_regime_ratio"] = r.regime_ratio;
    os << j.dump() << '\n';
  }
}

}  // namespace covtest
