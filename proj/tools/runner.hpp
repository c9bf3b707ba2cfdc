#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mutforest::cli {

/// Resolved command line. Types and targets are 1-based here, as on the
/// command line; the library uses 0-based indices.
struct RunOptions {
  std::string command;     // mutation-law, simulate-discrete, direction-asymptotics, simulate-ct, growth, emergence
  std::string subcommand;  // emergence: tau, theta, bound, ladder, laplace, expectation
  std::filesystem::path model;
  std::uint64_t seed = 1;
  std::optional<std::int64_t> reps;
  int workers = 1;
  double eps = 1e-8;
  std::optional<double> horizon;
  std::int64_t budget = 10'000'000;

  std::string engine;
  std::vector<std::int64_t> roots;
  std::vector<std::int64_t> direction;
  std::vector<std::int64_t> scales;
  std::vector<double> times;
  std::vector<double> alphas;
  std::optional<int> type;
  std::optional<int> target;
  std::optional<std::int64_t> exact_until;
};

/// Bad options or an unusable combination of model and command.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The model file could not be read or failed validation.
struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A simulated path broke a structural identity it must satisfy.
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunOutput {
  std::vector<OutputFile> files;
  /// Short human-readable lines printed to stdout.
  std::vector<std::string> summary;
};

/// Runs one command entirely in memory. Throws ConfigError, ModelError or
/// InvariantError.
RunOutput run(const RunOptions& opts);

/// Canonical configuration (everything that affects results; not workers or
/// the output directory).
nlohmann::json canonical_config(const RunOptions& opts);

/// 64-bit FNV-1a of the canonical configuration, as 16 hex digits.
std::string config_hash(const RunOptions& opts);

/// Manifest accompanying the output files.
nlohmann::json manifest(const RunOptions& opts, const RunOutput& out, double runtime_seconds);

/// Writes the files and manifest.json into `dir` (created if needed).
void write_outputs(const std::filesystem::path& dir, const RunOptions& opts, const RunOutput& out, double runtime_seconds);

std::string format_double(double v);

}  // namespace mutforest::cli
