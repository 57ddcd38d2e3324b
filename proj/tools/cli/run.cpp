#include "cli/run.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli/selftest.hpp"
#include "covtest/covtest.hpp"

namespace covtest::cli {

namespace {

// --- field validation -----------------------------------------------------

double require_a(const ConfigFile& cfg, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const double a = cfg.get_double(key, fallback);
  if (!(a > 0.0 && a <= 1.0)) {
    std::ostringstream os;
    os << "must lie in (0,1], got " << a;
    throw ConfigError(key, os.str());
  }
  return a;
}

double require_positive(const ConfigFile& cfg, const std::string& key, std::optional<double> fallback = std::nullopt) {
  const double v = cfg.get_double(key, fallback);
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "must be > 0, got " << v;
    throw ConfigError(key, os.str());
  }
  return v;
}

int require_at_least(const ConfigFile& cfg, const std::string& key, int lo, std::optional<int> fallback = std::nullopt) {
  const int v = cfg.get_int(key, fallback);
  if (v < lo) throw ConfigError(key, "must be >= " + std::to_string(lo) + ", got " + std::to_string(v));
  return v;
}

StatKind parse_kind(const ConfigFile& cfg, const std::string& key) {
  const auto text = cfg.get_string(key, std::string("general"));
  if (text == "general") return StatKind::General;
  if (text == "toeplitz") return StatKind::Toeplitz;
  throw ConfigError(key, "expected general or toeplitz, got '" + text + "'");
}

ThresholdSpec parse_threshold(const ConfigFile& cfg, const std::string& section,
                              const std::string& mode_key = "mode") {
  ThresholdSpec spec;
  const std::string mode_field = section + "." + mode_key;
  const auto mode = cfg.get_string(mode_field, std::string("gaussian"));
  if (mode == "gaussian") {
    spec.mode = ThresholdMode::GaussianQuantile;
  } else if (mode == "theory") {
    spec.mode = ThresholdMode::Theory;
  } else {
    throw ConfigError(mode_field, "expected gaussian or theory, got '" + mode + "'");
  }
  spec.level = cfg.get_double(section + ".level", 0.05);
  if (!(spec.level > 0.0 && spec.level < 1.0)) throw ConfigError(section + ".level", "must lie in (0,1)");
  spec.c_const = require_positive(cfg, section + ".c", 0.1);
  spec.D_const = cfg.get_double(section + ".D", 2.0);
  if (!(spec.D_const > 1.0)) throw ConfigError(section + ".D", "must be > 1");
  spec.K_const = require_positive(cfg, section + ".K", 1.0);
  const auto variance = cfg.get_string(section + ".variance", std::string("exact"));
  if (variance == "exact") {
    spec.variance = NullVariance::Exact;
  } else if (variance == "asymptotic") {
    spec.variance = NullVariance::Asymptotic;
  } else {
    throw ConfigError(section + ".variance", "expected exact or asymptotic, got '" + variance + "'");
  }
  return spec;
}

TestConfig parse_test_config(const ConfigFile& cfg, const std::string& section) {
  TestConfig tc;
  const auto proc = cfg.get_string(section + ".procedure", std::string("fixed"));
  const auto parsed = parse_procedure(proc);
  if (!parsed) throw ConfigError(section + ".procedure", "expected fixed, adaptive, always_reject or never_reject");
  tc.procedure = *parsed;
  tc.kind = parse_kind(cfg, section + ".kind");
  // [sweep] mode selects bisect/evaluate, so the threshold mode has its own key.
  tc.threshold = parse_threshold(cfg, section, "threshold_mode");
  tc.alpha_star = require_positive(cfg, section + ".alpha_star", 0.75);
  tc.alpha_star_np = cfg.get_optional_double(section + ".alpha_star_np");
  tc.c_star = cfg.get_double(section + ".c_star", 4.5);
  if (!(tc.c_star > 4.0)) throw ConfigError(section + ".c_star", "must be > 4");
  tc.clamp_bandwidth = cfg.get_bool(section + ".clamp_bandwidth", false);
  return tc;
}

CovarianceModel build_model(const ConfigFile& cfg, Seed seed) {
  const auto source = cfg.get_string("model.source", std::string("identity"));
  if (source == "file") return read_model_file(cfg.get_string("model.path"));
  if (source == "toeplitz") return CovarianceModel::from_toeplitz(cfg.get_doubles("model.diagonals"));
  const int p = require_at_least(cfg, "model.p", 1);
  if (source == "identity") return CovarianceModel::identity(p);
  if (source == "extremal_general" || source == "extremal_toeplitz") {
    ClassParams params;
    params.alpha = require_positive(cfg, "model.alpha");
    params.phi = require_positive(cfg, "model.phi");
    params.p = p;
    const Seed sign_seed = cfg.get_u64("model.sign_seed", derive_seed(seed, {0x6d6f64656cULL}));
    return source == "extremal_general" ? construct_extremal_general(params, sign_seed)
                                        : construct_extremal_toeplitz(params, sign_seed);
  }
  throw ConfigError("model.source",
                    "expected identity, toeplitz, file, extremal_general or extremal_toeplitz, got '" + source + "'");
}

// Reads [sample] path when given, otherwise simulates from [model].
MaskedSample obtain_sample(const ConfigFile& cfg, Seed seed) {
  if (cfg.has("sample.path")) {
    std::optional<double> a;
    if (cfg.has("sample.a")) a = require_a(cfg, "sample.a");
    return read_sample_file(cfg.get_string("sample.path"), a);
  }
  const double a = require_a(cfg, "sample.a", 1.0);
  const int n = require_at_least(cfg, "sample.n", 1);
  const auto model = build_model(cfg, seed);
  return sample(model, n, a, derive_seed(seed, {0x73616d706c65ULL}));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// --- commands -------------------------------------------------------------

using Emit = std::function<void(std::ostream&)>;

Emit cmd_simulate(const RunConfig& rc) {
  const auto& cfg = rc.values;
  const double a = require_a(cfg, "sample.a", 1.0);
  const int n = require_at_least(cfg, "sample.n", 1);
  const auto model = build_model(cfg, rc.seed);
  if (cfg.has("model.out")) {
    const auto form = cfg.get_string("model.out_form", std::string("dense"));
    if (form != "dense" && form != "toeplitz") throw ConfigError("model.out_form", "expected dense or toeplitz");
    write_model_file(cfg.get_string("model.out"), model, form == "toeplitz");
  }
  auto s = sample(model, n, a, derive_seed(rc.seed, {0x73616d706c65ULL}));
  return [s = std::move(s)](std::ostream& os) { write_sample(os, s); };
}

Emit cmd_stat(const RunConfig& rc) {
  const auto& cfg = rc.values;
  const auto kind = parse_kind(cfg, "stat.kind");
  const int m = require_at_least(cfg, "stat.m", 1);
  const auto s = obtain_sample(cfg, rc.seed);
  const auto r = compute_statistic(kind, s, m);
  const auto format = rc.format;
  return [r, format](std::ostream& os) {
    if (format == OutputFormat::Jsonl) {
      nlohmann::json j{{"kind", std::string(to_string(r.kind))}, {"n", r.n}, {"p", r.p}, {"m", r.m},
                       {"a", r.a}, {"value", r.value}, {"standardized", r.standardized}};
      os << j.dump() << '\n';
      return;
    }
    os << "kind,n,p,m,a,value,standardized\n"
       << to_string(r.kind) << ',' << r.n << ',' << r.p << ',' << r.m << ',' << fmt(r.a) << ',' << fmt(r.value) << ','
       << fmt(r.standardized) << '\n';
  };
}

Emit emit_outcome(const TestOutcome& outcome, double alpha, double phi, OutputFormat format) {
  return [outcome, alpha, phi, format](std::ostream& os) {
    if (format == OutputFormat::Jsonl) {
      nlohmann::json j{{"kind", std::string(to_string(outcome.statistic.kind))},
                       {"mode", outcome.mode},
                       {"n", outcome.statistic.n},
                       {"p", outcome.statistic.p},
                       {"a", outcome.statistic.a},
                       {"alpha", alpha},
                       {"phi", phi},
                       {"m", outcome.statistic.m},
                       {"statistic", outcome.statistic.value},
                       {"threshold", outcome.threshold},
                       {"reject", outcome.reject ? 1 : 0}};
      if (!outcome.per_level.empty()) {
        auto levels = nlohmann::json::array();
        for (const auto& lv : outcome.per_level) {
          levels.push_back({{"l", lv.level}, {"m", lv.m}, {"statistic", lv.statistic}, {"threshold", lv.threshold},
                            {"reject", lv.reject ? 1 : 0}});
        }
        j["per_level"] = std::move(levels);
      }
      os << j.dump() << '\n';
      return;
    }
    os << outcome_csv_header() << '\n' << outcome_csv_row(outcome, alpha, phi) << '\n';
  };
}

Emit cmd_test(const RunConfig& rc) {
  const auto& cfg = rc.values;
  const auto kind = parse_kind(cfg, "test.kind");
  const double alpha = require_positive(cfg, "test.alpha");
  const double phi = cfg.get_double("test.phi");
  if (!(phi > 0.0 && phi < 1.0)) throw ConfigError("test.phi", "must lie in (0,1)");
  const auto spec = parse_threshold(cfg, "test");
  const auto s = obtain_sample(cfg, rc.seed);
  return emit_outcome(test_fixed(s, alpha, phi, spec, kind), alpha, phi, rc.format);
}

Emit cmd_adapt(const RunConfig& rc) {
  const auto& cfg = rc.values;
  GridParams gp;
  gp.kind = parse_kind(cfg, "adaptive.kind");
  gp.alpha_star = require_positive(cfg, "adaptive.alpha_star", 0.75);
  gp.alpha_star_np = cfg.get_optional_double("adaptive.alpha_star_np");
  gp.c_star = cfg.get_double("adaptive.c_star", 4.5);
  if (!(gp.c_star > 4.0)) throw ConfigError("adaptive.c_star", "must be > 4");
  const auto s = obtain_sample(cfg, rc.seed);
  gp.a = s.a;
  gp.n = s.n();
  gp.p = s.p();
  const auto grid = build_grid(gp);
  return emit_outcome(test_adaptive(s, grid), gp.alpha_star, std::numeric_limits<double>::quiet_NaN(), rc.format);
}

Emit emit_rows(std::vector<SweepRow> rows, OutputFormat format) {
  return [rows = std::move(rows), format](std::ostream& os) {
    if (format == OutputFormat::Jsonl) {
      write_sweep_jsonl(os, rows);
    } else {
      write_sweep_csv(os, rows);
    }
  };
}

Emit cmd_sweep(const RunConfig& rc) {
  const auto& cfg = rc.values;
  SweepPlan plan;
  plan.test = parse_test_config(cfg, "sweep");
  const auto alt_text = cfg.get_string("sweep.alternative",
                                       std::string(plan.test.kind == StatKind::General ? "extremal_general"
                                                                                       : "extremal_toeplitz"));
  const auto alt = parse_alternative_kind(alt_text);
  if (!alt) throw ConfigError("sweep.alternative", "expected extremal_general, extremal_toeplitz or user_matrix");
  plan.alternative = *alt;
  if (plan.alternative == AlternativeKind::UserMatrix) plan.user_matrix = read_model_file(cfg.get_string("sweep.user_matrix"));
  plan.replications = require_at_least(cfg, "sweep.R", 1, 2000);
  plan.master_seed = rc.seed;
  plan.threads = rc.threads;
  plan.target_gamma = cfg.get_double("sweep.target_gamma", 0.25);
  plan.c_lo = require_positive(cfg, "sweep.c_lo", 0.25);
  plan.c_hi = require_positive(cfg, "sweep.c_hi", 8.0);
  if (!(plan.c_lo < plan.c_hi)) throw ConfigError("sweep.c_hi", "must exceed sweep.c_lo");
  plan.bisection_steps = require_at_least(cfg, "sweep.steps", 0, 10);
  plan.record_wall_time = cfg.get_bool("sweep.record_wall_time", false);
  plan.adaptive_rate = cfg.get_bool("sweep.adaptive_rate", false);

  const auto ns = cfg.get_ints("sweep.n");
  const auto ps = cfg.get_ints("sweep.p");
  const auto as = cfg.get_doubles("sweep.a", std::vector<double>{1.0});
  const auto alphas = cfg.get_doubles("sweep.alpha", std::vector<double>{1.0});
  const auto cs = cfg.get_doubles("sweep.C", std::vector<double>{1.0});
  for (int n : ns) {
    if (n < 2) throw ConfigError("sweep.n", "every n must be >= 2");
  }
  for (int p : ps) {
    if (p < 2) throw ConfigError("sweep.p", "every p must be >= 2");
  }
  for (double a : as) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("sweep.a", "every a must lie in (0,1], got " + fmt(a));
  }
  for (double alpha : alphas) {
    if (!(alpha > 0.0)) throw ConfigError("sweep.alpha", "every alpha must be > 0");
  }
  for (double c : cs) {
    if (!(c > 0.0)) throw ConfigError("sweep.C", "every C must be > 0");
  }
  for (int n : ns)
    for (int p : ps)
      for (double a : as)
        for (double alpha : alphas)
          for (double c : cs) plan.entries.push_back({n, p, a, alpha, c});

  const auto mode = cfg.get_string("sweep.mode", std::string("bisect"));
  if (mode == "bisect") return emit_rows(rate_sweep(plan), rc.format);
  if (mode == "evaluate") return emit_rows(evaluate_plan(plan), rc.format);
  throw ConfigError("sweep.mode", "expected bisect or evaluate, got '" + mode + "'");
}

Emit cmd_probe(const RunConfig& rc) {
  const auto& cfg = rc.values;
  ProbeParams pp;
  pp.test = parse_test_config(cfg, "probe");
  pp.kind = pp.test.kind;
  pp.alpha = require_positive(cfg, "probe.alpha", 1.0);
  pp.a = require_a(cfg, "probe.a", 1.0);
  pp.n = require_at_least(cfg, "probe.n", 2);
  pp.p = require_at_least(cfg, "probe.p", 2);
  pp.shrink_factors = cfg.get_doubles("probe.shrink", pp.shrink_factors);
  for (double s : pp.shrink_factors) {
    if (!(s > 0.0)) throw ConfigError("probe.shrink", "every factor must be > 0");
  }
  pp.replications = require_at_least(cfg, "probe.R", 1, 1000);
  pp.master_seed = rc.seed;
  pp.threads = rc.threads;
  pp.record_wall_time = cfg.get_bool("probe.record_wall_time", false);
  return emit_rows(power_collapse_probe(pp), rc.format);
}

int cmd_selftest(const RunConfig& rc, std::ostream& out) {
  const auto results = run_selftest(rc.seed, rc.threads);
  bool all = true;
  std::ostringstream report;
  for (const auto& r : results) {
    report << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    all = all && r.passed;
  }
  if (rc.out) {
    std::ofstream os(*rc.out);
    if (!os) throw IoError("cannot open '" + rc.out->string() + "' for writing");
    os << report.str();
  }
  out << report.str();
  return all ? kExitOk : kExitFailure;
}

void report_error(std::ostream& err, int code, const std::string& field, const std::string& reason) {
  nlohmann::json line{{"code", code}, {"reason", reason}};
  if (!field.empty()) line["field"] = field;
  err << "error: " << line.dump() << '\n';
}

}  // namespace

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  try {
    if (rc.command == Command::Selftest) return cmd_selftest(rc, out);
    Emit emit;
    switch (rc.command) {
      case Command::Simulate: emit = cmd_simulate(rc); break;
      case Command::Stat: emit = cmd_stat(rc); break;
      case Command::Test: emit = cmd_test(rc); break;
      case Command::Adapt: emit = cmd_adapt(rc); break;
      case Command::Sweep: emit = cmd_sweep(rc); break;
      case Command::Probe: emit = cmd_probe(rc); break;
      case Command::Selftest: break;
    }
    if (rc.out) {
      std::ofstream os(*rc.out);
      if (!os) throw IoError("cannot open '" + rc.out->string() + "' for writing");
      emit(os);
      os.flush();
      if (!os) throw IoError("failed writing '" + rc.out->string() + "'");
    } else {
      emit(out);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    report_error(err, kExitConfig, e.field(), e.reason());
    return kExitConfig;
  } catch (const IoError& e) {
    report_error(err, kExitIo, "", e.what());
    return kExitIo;
  } catch (const PreconditionError& e) {
    report_error(err, kExitPrecondition, "", e.what());
    return kExitPrecondition;
  }
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identity tests for large covariance matrices with missing observations"};
  FlagOverrides flags;
  std::string command;
  std::string config;
  std::string out_path;
  app.add_option("command", command, "simulate, stat, test, adapt, sweep, probe or selftest");
  app.add_option("--config", config, "Config file (key = value with [section] headers)");
  app.add_option("--seed", flags.seed, "Master seed (u64), overrides run.seed");
  app.add_option("--out", out_path, "Output path; stdout when omitted");
  app.add_option("--threads", flags.threads, "Worker threads; results do not depend on it");
  app.add_option("--format", flags.format, "csv or jsonl");
  app.add_option("--set", flags.assignments, "Override a config key, e.g. --set sample.a=0.5");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, kExitConfig, "argv", e.what());
    return kExitConfig;
  }
  if (!command.empty()) flags.command = command;
  if (!config.empty()) flags.config = config;
  if (!out_path.empty()) flags.out = out_path;
  try {
    return run(make_run_config(flags), out, err);
  } catch (const ConfigError& e) {
    report_error(err, kExitConfig, e.field(), e.reason());
    return kExitConfig;
  } catch (const IoError& e) {
    report_error(err, kExitIo, "", e.what());
    return kExitIo;
  } catch (const PreconditionError& e) {
    report_error(err, kExitPrecondition, "", e.what());
    return kExitPrecondition;
  }
}

}  // namespace covtest::cli
