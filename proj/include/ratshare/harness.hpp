#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "ratshare/simnet.hpp"
#include "ratshare/threshold_groups.hpp"
#include "ratshare/utility.hpp"

namespace ratshare {

enum class Mode { n_of_n, m_of_n };
enum class TranscriptPolicy { none, failures, all };

const char* to_string(Mode m);
const char* to_string(TranscriptPolicy p);

// Configuration problem at a JSON path such as "utilities.players.3.u".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct ActiveSpec {
  std::optional<double> fraction;
  std::optional<std::uint64_t> seed;  // fixed set for every trial; otherwise drawn per trial
  std::optional<std::vector<std::uint32_t>> players;
};

struct Assertions {
  std::optional<double> recovery_rate_min;
  std::optional<double> recovery_rate_max;
  std::optional<double> utility_gap_max_se;  // deviant <= honest + k SE
  bool reconstruction_consistent = false;
  bool no_round_cap = false;
};

struct ExperimentConfig {
  Mode mode = Mode::n_of_n;
  std::uint32_t n = 8;
  std::uint64_t secret = 0;
  std::uint64_t secret_alphabet = 2;
  UtilityProfile utilities;
  std::optional<double> beta_override;
  ThresholdParams threshold;
  ActiveSpec active;
  std::string strategy = "honest";
  std::uint32_t deviator = 0;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  std::string out;
  TranscriptPolicy emit = TranscriptPolicy::none;
  unsigned threads = 1;
  Assertions assertions;

  // Derived at load time.
  Rational u_ratio{1};
  FieldSpec field;
  double beta = 0.0;

  GameParameters game() const;
  MofnParameters mofn() const;
  nlohmann::ordered_json to_json() const;
};

// Throws ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct AssertionResult {
  std::string name;
  double expected = 0.0;
  double observed = 0.0;
  bool passed = false;
};

struct RunStats {
  std::uint64_t trials = 0;
  Estimate recovery;
  Estimate rounds;
  Estimate latency;
  Estimate max_bits;   // per-run max over players
  Estimate mean_bits;  // per-run mean over (active) players
  std::uint64_t max_bits_overall = 0;
  std::uint64_t round_cap_hits = 0;
  std::optional<DeviationReport> deviation;
  // m-of-n only
  Estimate reconstructible;
  std::uint64_t reconstruction_disagreements = 0;
  std::optional<Estimate> tamper_detection;

  std::vector<AssertionResult> assertions;
  bool passed = true;
};

struct ExperimentResult {
  RunStats stats;
  std::string report_json;
  std::string summary_csv;
};

// Runs every trial, writes summary.csv, report.json and transcripts under
// config.out when it is set.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace ratshare
