#include "cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "covtest/parallel.hpp"

namespace covtest::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(key, "expected a real number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  if (v < -2147483647LL || v > 2147483647LL) throw ConfigError(key, "integer out of range: " + text);
  return static_cast<int>(v);
}

}  // namespace

ConfigError::ConfigError(std::string field, std::string reason)
    : Error(field + ": " + reason), field_(std::move(field)), reason_(std::move(reason)) {}

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::Simulate: return "simulate";
    case Command::Stat: return "stat";
    case Command::Test: return "test";
    case Command::Adapt: return "adapt";
    case Command::Sweep: return "sweep";
    case Command::Probe: return "probe";
    case Command::Selftest: return "selftest";
  }
  return "unknown";
}

std::optional<Command> parse_command(std::string_view text) noexcept {
  for (auto c : {Command::Simulate, Command::Stat, Command::Test, Command::Adapt, Command::Sweep, Command::Probe,
                 Command::Selftest}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

ConfigFile ConfigFile::parse(std::istream& is) {
  // '#' comment lines are accepted alongside the ';' comments of the INI reader.
  std::ostringstream cleaned;
  std::string line;
  while (std::getline(is, line)) {
    const auto t = trim(line);
    cleaned << (!t.empty() && t.front() == '#' ? std::string() : line) << '\n';
  }
  std::istringstream in(cleaned.str());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    std::ostringstream os;
    os << "line " << e.line() << ": " << e.message();
    throw ConfigError("config", os.str());
  }
  ConfigFile cfg;
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      cfg.values_[name] = trim(node.data());
      continue;
    }
    for (const auto& [key, leaf] : node) cfg.values_[name + "." + key] = trim(leaf.data());
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  return parse(is);
}

const std::string* ConfigFile::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

std::string ConfigFile::get_string(const std::string& key, std::optional<std::string> fallback) const {
  if (const auto* v = find(key)) return *v;
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

double ConfigFile::get_double(const std::string& key, std::optional<double> fallback) const {
  if (const auto* v = find(key)) return to_double(key, *v);
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

std::optional<double> ConfigFile::get_optional_double(const std::string& key) const {
  if (const auto* v = find(key)) return to_double(key, *v);
  return std::nullopt;
}

int ConfigFile::get_int(const std::string& key, std::optional<int> fallback) const {
  if (const auto* v = find(key)) return to_int(key, *v);
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (const auto* v = find(key)) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size()) {
      throw ConfigError(key, "expected an unsigned 64-bit integer, got '" + *v + "'");
    }
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

bool ConfigFile::get_bool(const std::string& key, std::optional<bool> fallback) const {
  if (const auto* v = find(key)) {
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + *v + "'");
  }
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

std::vector<double> ConfigFile::get_doubles(const std::string& key, std::optional<std::vector<double>> fallback) const {
  if (const auto* v = find(key)) {
    std::vector<double> out;
    for (const auto& item : split_list(*v)) out.push_back(to_double(key, item));
    if (out.empty()) throw ConfigError(key, "list is empty");
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

std::vector<int> ConfigFile::get_ints(const std::string& key, std::optional<std::vector<int>> fallback) const {
  if (const auto* v = find(key)) {
    std::vector<int> out;
    for (const auto& item : split_list(*v)) out.push_back(to_int(key, item));
    if (out.empty()) throw ConfigError(key, "list is empty");
    return out;
  }
  if (fallback) return *fallback;
  throw ConfigError(key, "required key is missing");
}

RunConfig make_run_config(const FlagOverrides& flags) {
  RunConfig rc;
  if (flags.config) rc.values = ConfigFile::load(*flags.config);
  for (const auto& assignment : flags.assignments) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set", "expected key=value, got '" + assignment + "'");
    rc.values.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  const std::string command = flags.command.value_or(rc.values.get_string("run.command", std::string()));
  if (command.empty()) throw ConfigError("run.command", "no command given");
  const auto parsed = parse_command(command);
  if (!parsed) {
    throw ConfigError("run.command",
                      "unknown command '" + command + "' (expected simulate, stat, test, adapt, sweep, probe, selftest)");
  }
  rc.command = *parsed;

  if (flags.seed) {
    rc.values.set("run.seed", *flags.seed);
    rc.seed = rc.values.get_u64("run.seed");
  } else {
    rc.seed = rc.values.get_u64("run.seed", 0);
  }

  if (flags.out) {
    rc.out = *flags.out;
  } else if (rc.values.has("run.out")) {
    rc.out = rc.values.get_string("run.out");
  }

  if (flags.threads) {
    rc.threads = *flags.threads;
    if (rc.threads < 1) throw ConfigError("--threads", "must be >= 1");
  } else if (rc.values.has("run.threads")) {
    rc.threads = rc.values.get_int("run.threads");
    if (rc.threads < 1) throw ConfigError("run.threads", "must be >= 1");
  } else {
    rc.threads = threads_from_env();
  }

  const std::string format = flags.format.value_or(rc.values.get_string("run.format", std::string("csv")));
  if (format == "csv") {
    rc.format = OutputFormat::Csv;
  } else if (format == "jsonl") {
    rc.format = OutputFormat::Jsonl;
  } else {
    throw ConfigError(flags.format ? "--format" : "run.format", "expected csv or jsonl, got '" + format + "'");
  }
  return rc;
}

}  // namespace covtest::cli
