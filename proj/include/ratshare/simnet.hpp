#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ratshare/dealer.hpp"
#include "ratshare/player.hpp"
#include "ratshare/utility.hpp"

namespace ratshare {

enum class StrategyKind : std::uint8_t {
  honest,
  quit_and_guess,      // leave right after learning s_t in round t*
  fake_one_child,      // from round t* on, forge the value sent to one child once
  fake_both_children,  // same, to every non-self child
  forge_final_tag,     // on the partial block, push s_t down with made-up tags
  spurious_flood,      // extra messages on edges nobody expects
};

struct Strategy {
  StrategyKind kind = StrategyKind::honest;
  std::uint32_t round = 1;   // t* for the round-triggered strategies
  std::uint32_t volume = 4;  // spurious messages per acting slot

  bool honest() const { return kind == StrategyKind::honest; }
  friend bool operator==(const Strategy&, const Strategy&) = default;
};

const char* to_string(StrategyKind kind);
std::string to_string(const Strategy& s);
// "name" or "name:param", e.g. "quit_and_guess:2", "spurious_flood:8".
// Throws std::invalid_argument on unknown names or malformed parameters.
Strategy parse_strategy(std::string_view text);
std::span<const StrategyKind> deviation_kinds();

struct MessageRecord {
  Message msg;
  std::uint32_t slot = 0;
  std::optional<bool> verified;  // empty if no receiver checked it
};

struct PlayerRecord {
  Element output;
  HaltCause cause = HaltCause::none;
  std::uint32_t halt_round = 0;
  Stage halt_stage = Stage::up;
  std::uint32_t learned_round = 0;
  std::uint32_t input_length = 0;
  std::uint64_t messages = 0;
  std::uint64_t bits = 0;
  bool short_player = false;
  bool deviator = false;
};

struct ForgeryRecord {
  std::uint64_t message_id = 0;
  std::uint32_t round = 0;
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  std::optional<bool> accepted;
};

struct Transcript {
  std::uint64_t seed = 0;
  GameParameters params;
  std::uint32_t definitive_round = 0;
  std::uint32_t padding = 0;
  Element secret;
  std::vector<Strategy> strategies;
  std::vector<PlayerRecord> players;
  std::vector<MessageRecord> messages;  // empty unless recorded
  std::vector<ForgeryRecord> forgeries;
  std::uint32_t rounds = 0;          // last round whose value reached anyone
  std::uint32_t rounds_started = 0;
  std::uint64_t slots = 0;           // hop latency: delivery slots consumed
  std::uint64_t total_messages = 0;
  bool round_cap_hit = false;
  std::optional<std::uint32_t> deviator;
  std::uint32_t deviation_round = 0;  // 0 if the deviation never fired

  bool all_learned() const;
  // Some non-deviating player stopped on a fault before it had learned s_X.
  bool deviation_detected() const;
};

struct RunOptions {
  bool record_messages = true;
  bool shuffle_delivery = false;  // permute each inbox before handing it over
  std::uint32_t round_cap = 0;    // 0: ceil(100 / beta)
};

// Strategies must cover every player. The seed drives strategy coins and
// delivery shuffling only; the deal is fixed by `game`.
Transcript run_game(const DealtGame& game, std::span<const Strategy> strategies, std::uint64_t seed,
                    const RunOptions& options = {});

std::vector<Strategy> honest_strategies(std::uint32_t n);
std::vector<Strategy> with_deviator(std::uint32_t n, std::uint32_t deviator, Strategy s);

// Mean and standard error of the mean.
struct Estimate {
  std::uint64_t samples = 0;
  double mean = 0.0;
  double se = 0.0;
};

class MeanAccumulator {
 public:
  void add(double x);
  Estimate estimate() const;

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct CostSummary {
  std::uint64_t runs = 0;
  std::uint32_t n = 0;
  std::uint32_t bit_width = 0;
  std::uint64_t max_bits = 0;     // over runs and players
  Estimate max_player_bits;       // per-run max over players
  Estimate mean_player_bits;      // per-run mean over players
  Estimate rounds;
  Estimate latency;
  std::uint32_t max_messages_per_round = 0;  // needs recorded messages
};

class CostAccumulator {
 public:
  void add(const Transcript& t);
  CostSummary summary() const;

 private:
  CostSummary s_;
  MeanAccumulator max_bits_, mean_bits_, rounds_, latency_;
};

// Throws std::invalid_argument on an empty set.
CostSummary measure_costs(std::span<const Transcript> transcripts);

// Realized utility of `player` in a finished run.
double realized_utility(const Transcript& t, std::uint32_t player, const UtilityProfile& utilities);

struct DeviationReport {
  Strategy strategy;
  std::uint32_t deviator = 0;
  std::uint64_t trials = 0;
  std::uint64_t attempted = 0;  // runs where the deviation fired
  Estimate success;             // p-hat: learned, or never caught
  Estimate bound_utility;       // p U+ + (1 - p) U-, per-run accounting
  Estimate deviant_utility;     // realized outcome utility
  Estimate honest_utility;      // same deals, everyone honest
  Estimate utility_gap;         // paired deviant minus honest
  Estimate detection;           // over attempted runs
  std::uint64_t forged = 0;
  std::uint64_t forged_accepted = 0;
  Estimate undetected_forgery;  // accepted fraction of forged messages
  double cheat_threshold = 0.0;
  // Runs that reached round t*: fraction with X = t*. Empty if not applicable.
  std::optional<Estimate> definitive_round;
};

// One seeded trial of a deviation experiment: the deal for trial `index`,
// the run under `strategies`, and the all-honest run on the same deal when
// someone deviates. Seeds derive from (seed, index) only.
struct DeviationTrial {
  std::uint32_t definitive_round = 0;
  Transcript deviant;
  std::optional<Transcript> baseline;
};

DeviationTrial run_trial(const GameParameters& params, std::span<const Strategy> strategies, std::uint64_t seed,
                         std::uint64_t index, const RunOptions& options = {});

// Folds trials in index order into a DeviationReport.
class DeviationAccumulator {
 public:
  // Throws std::invalid_argument for several deviators.
  DeviationAccumulator(std::span<const Strategy> strategies, const UtilityProfile& utilities);
  void add(const DeviationTrial& trial);
  DeviationReport report() const;
  std::uint32_t observed() const { return rep_.deviator; }

 private:
  UtilityProfile utilities_;
  DeviationReport rep_;
  double u_plus_ = 0, u_minus_ = 0;
  MeanAccumulator success_, bound_, deviant_, baseline_, gap_, detection_, undetected_, definitive_;
};

// Exactly one non-honest strategy, or none (the observed player is then 0).
// Throws std::invalid_argument for several deviators or fewer than 1000 trials.
DeviationReport estimate_deviation_payoff(const GameParameters& params, std::span<const Strategy> strategies,
                                          const UtilityProfile& utilities, std::uint64_t trials,
                                          std::uint64_t seed);

// Over dealer randomness: among (deal, player) pairs where the player's
// input length is k, it holds an even label in round t and X >= t, the
// frequency of X = t. Standard error clusters by deal.
struct FrequencyEstimate {
  std::uint64_t deals = 0;
  std::uint64_t samples = 0;
  std::uint64_t hits = 0;
  double frequency = 0.0;
  double se = 0.0;
};

class DefinitiveRoundCounter {
 public:
  DefinitiveRoundCounter(std::uint32_t t, std::uint32_t k) : t_(t), k_(k) {}
  void add(const DealtGame& game);
  FrequencyEstimate estimate() const;
  std::uint32_t t() const { return t_; }
  std::uint32_t k() const { return k_; }

 private:
  std::uint32_t t_, k_;
  std::uint64_t deals_ = 0, samples_ = 0, hits_ = 0;
  double sum_h2_ = 0, sum_m2_ = 0, sum_hm_ = 0;
};

// JSON lines: a manifest record, then one record per message.
void write_transcript(std::ostream& out, const Transcript& t);
std::string transcript_to_jsonl(const Transcript& t);
// Inverse of write_transcript. Throws std::invalid_argument on malformed input.
Transcript read_transcript(std::istream& in);

}  // namespace ratshare
