#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/error.hpp"
#include "covtest/seeding.hpp"

namespace covtest::cli {

// Invalid configuration. field() is the dotted key ("sample.a") or a flag
// name ("--threads").
class ConfigError : public Error {
 public:
  ConfigError(std::string field, std::string reason);
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

enum class Command { Simulate, Stat, Test, Adapt, Sweep, Probe, Selftest };

std::string_view to_string(Command command) noexcept;
std::optional<Command> parse_command(std::string_view text) noexcept;

// Flat key = value text with [section] headers. Keys are addressed as
// "section.key"; keys before the first header have no prefix.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& is);
  static ConfigFile load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt) const;
  std::optional<double> get_optional_double(const std::string& key) const;
  int get_int(const std::string& key, std::optional<int> fallback = std::nullopt) const;
  std::uint64_t get_u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt) const;
  // Comma-separated list; a single value is a list of one.
  std::vector<double> get_doubles(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) const;
  std::vector<int> get_ints(const std::string& key, std::optional<std::vector<int>> fallback = std::nullopt) const;

 private:
  const std::string* find(const std::string& key) const;
  std::map<std::string, std::string> values_;
};

enum class OutputFormat { Csv, Jsonl };

struct RunConfig {
  Command command = Command::Selftest;
  ConfigFile values;
  std::optional<std::filesystem::path> out;
  Seed seed = 0;
  int threads = 1;
  OutputFormat format = OutputFormat::Csv;
};

struct FlagOverrides {
  std::optional<std::string> command;
  std::optional<std::filesystem::path> config;
  std::optional<std::string> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> threads;
  std::optional<std::string> format;
  // key=value pairs applied on top of the config file.
  std::vector<std::string> assignments;
};

// Merges the config file with command-line flags. Precedence: flags, then
// [run] keys, then COVTEST_THREADS for the thread count, then defaults.
RunConfig make_run_config(const FlagOverrides& flags);

}  // namespace covtest::cli
