#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ratshare/dealer.hpp"
#include "ratshare/player.hpp"
#include "ratshare/simnet.hpp"

namespace ratshare {

// m-out-of-n variant: players are grouped into Q supernodes that run the
// tree protocol over a Q-leaf tree; each group leaf value is further split
// with a threshold Shamir scheme among the group members.

struct ThresholdParams {
  double tau = 0.5;     // fraction of a group needed to rebuild its leaf value
  double lambda = 0.25;  // margin
  double k = 1.0;        // failure exponent

  double c() const { return 2.0 * (k + 1.0) / (lambda * lambda); }
  // ceil(c log2 n)
  std::uint32_t group_size(std::uint32_t n) const;
  // floor(n / group_size)
  std::uint32_t group_count(std::uint32_t n) const;
  // ceil(tau * members)
  std::uint32_t threshold(std::uint32_t members) const;

  // Throws std::invalid_argument on tau outside (0,1), lambda outside
  // (0, min(tau, 1 - tau)], k <= 0, or fewer than 3 groups.
  void validate(std::uint32_t n) const;
};

struct GroupAssignment {
  std::uint32_t nominal_size = 0;
  std::vector<std::uint32_t> permutation;
  std::vector<std::vector<std::uint32_t>> members;  // by group
  std::vector<std::uint32_t> group_of;              // by player
  std::vector<std::uint32_t> slot_of;               // index within its group

  std::uint32_t count() const { return static_cast<std::uint32_t>(members.size()); }
};

// Contiguous blocks of a uniform permutation; the n mod g leftover players
// are dealt round-robin onto the groups.
GroupAssignment assign_groups(std::uint32_t n, const ThresholdParams& params, Rng& rng);

struct ActiveSet {
  std::vector<bool> flags;

  std::uint32_t size() const { return static_cast<std::uint32_t>(flags.size()); }
  std::uint32_t count() const;
  bool active(std::uint32_t player) const { return flags.at(player); }

  static ActiveSet all(std::uint32_t n);
  // Exactly round(fraction * n) players, uniformly chosen.
  static ActiveSet random(std::uint32_t n, double fraction, Rng& rng);
  // Throws std::invalid_argument on duplicates or out-of-range indices.
  static ActiveSet from_list(std::uint32_t n, std::span<const std::uint32_t> players);
};

std::vector<std::uint32_t> active_counts(const GroupAssignment& groups, const ActiveSet& active);
// Every group has at least its threshold of active members.
bool all_reconstructible(const GroupAssignment& groups, const ActiveSet& active, const ThresholdParams& params);

// ---------------------------------------------------------------------------
// Shamir layer

struct ShamirShare {
  std::uint32_t x = 0;
  Element value;

  friend bool operator==(const ShamirShare&, const ShamirShare&) = default;
};

class InsufficientShares : public std::runtime_error {
 public:
  InsufficientShares(std::size_t have, std::size_t need)
      : std::runtime_error("have " + std::to_string(have) + " shares, need " + std::to_string(need)),
        have_(have),
        need_(need) {}
  std::size_t have() const { return have_; }
  std::size_t need() const { return need_; }

 private:
  std::size_t have_, need_;
};

// Degree threshold-1 polynomial with constant term y evaluated at 1..g.
// Throws std::invalid_argument unless 1 <= threshold <= g < q.
std::vector<ShamirShare> shamir_split(const Field& field, Element y, std::uint32_t threshold, std::uint32_t g,
                                      Rng& rng);
// Fixed coefficients for x^1 .. x^(threshold-1).
std::vector<ShamirShare> shamir_split(const Field& field, Element y, std::uint32_t threshold, std::uint32_t g,
                                      std::span<const Element> coefficients);

// Interpolates at 0 from the first `threshold` shares with distinct x.
// Throws InsufficientShares when fewer are available.
Element shamir_reconstruct(const Field& field, std::span<const ShamirShare> shares, std::uint32_t threshold);

// Lagrange weights for evaluating at 0 from a fixed set of points.
class LagrangeAtZero {
 public:
  LagrangeAtZero(const Field& field, std::span<const std::uint32_t> xs);
  Element combine(std::span<const Element> values) const;
  std::span<const Element> weights() const { return weights_; }

 private:
  Field field_;
  std::vector<Element> weights_;
};

// ---------------------------------------------------------------------------
// Dealing

struct MofnParameters {
  GameParameters base;  // n is the number of players
  ThresholdParams threshold;

  void validate() const;
};

// One round of group-shared input: masked placement of the group on the
// Q-leaf tree and verification vectors indexed by the sending member's slot.
struct GroupBlock {
  PositionalData position{};
  std::array<std::vector<VerifyPair>, 2> from_children;
  std::vector<VerifyPair> from_parent_internal;
  std::vector<VerifyPair> from_parent_leaf;
  bool partial = false;
};

struct MemberBlock {
  ShamirShare secret_share;
  ShamirShare mask_share;
  TagPair leaf_up{};
  std::array<TagPair, 2> internal_up{};
  std::optional<std::array<TagPair, 2>> down;
};

struct GroupInput {
  std::vector<GroupBlock> blocks;
  std::vector<std::vector<MemberBlock>> members;  // [slot][round - 1]
};

struct MofnTruth {
  std::uint32_t definitive_round = 0;
  std::uint32_t padding = 0;
  Element secret;
  std::vector<bool> short_group;
  std::vector<std::vector<std::uint32_t>> label_of;  // [round - 1][group]
  std::vector<Element> values;                       // s_t by round
};

struct MofnGame {
  MofnParameters params;
  Field field;
  GroupAssignment groups;
  std::vector<std::uint32_t> thresholds;  // by group
  std::shared_ptr<const LabeledTree> tree;
  std::vector<GroupInput> inputs;  // by group
  MofnTruth truth;
};

MofnGame deal_mofn(const MofnParameters& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Simulation

struct MofnPlayerRecord {
  bool active = false;
  Element output;
  HaltCause cause = HaltCause::none;
  std::uint32_t halt_round = 0;
  std::uint32_t learned_round = 0;
  std::uint64_t messages = 0;
  std::uint64_t bits = 0;
};

enum class MofnMessageKind : std::uint8_t { share, copy };

// Shares go member to member inside a group; copies are multicast from one
// member to every active member of the receiving group.
struct MofnMessage {
  std::uint64_t id = 0;
  std::uint32_t slot = 0;
  std::uint32_t round = 0;
  Stage stage = Stage::up;
  MofnMessageKind kind = MofnMessageKind::copy;
  std::uint32_t sender = 0;
  std::uint32_t sender_group = 0;
  std::uint32_t receiver_group = 0;
  std::size_t sender_node = kNoNode;
  std::size_t receiver_node = kNoNode;
  std::array<Element, 4> payload{};  // shares use the first two
  std::uint32_t recipients = 0;
  std::optional<bool> verified;
  bool forged = false;
};

struct TamperSpec {
  std::uint32_t player = 0;
  std::uint32_t round = 1;  // first copy sent in or after this round is altered
};

struct MofnRunOptions {
  bool record_messages = false;
  bool shuffle_delivery = false;
  std::uint32_t round_cap = 0;  // 0: ceil(100 / beta)
  std::optional<TamperSpec> tamper;
};

struct MofnTranscript {
  std::uint64_t seed = 0;
  MofnParameters params;
  std::uint32_t definitive_round = 0;
  std::uint32_t padding = 0;
  Element secret;
  std::vector<std::vector<std::uint32_t>> groups;
  std::vector<std::uint32_t> thresholds;
  std::vector<bool> active;
  std::vector<std::uint32_t> active_counts;
  std::vector<MofnPlayerRecord> players;
  std::vector<MofnMessage> messages;
  std::uint32_t rounds = 0;
  std::uint32_t rounds_started = 0;
  std::uint64_t slots = 0;
  std::uint64_t total_messages = 0;
  bool round_cap_hit = false;
  bool reconstructible = false;        // predicted: every group at threshold
  bool leaves_reconstructed = false;   // observed in round 1
  bool recovered = false;              // every active player output s_X after round X
  std::optional<TamperSpec> tamper;
  std::uint32_t tamper_round = 0;      // 0 if never fired
  bool tamper_detected = false;

  // The leaf-reconstruction predicate agrees with what happened, and with
  // the final outcome for untampered runs.
  bool reconstruction_consistent() const;
};

MofnTranscript run_mofn_game(const MofnGame& game, const ActiveSet& active, std::uint64_t seed,
                             const MofnRunOptions& options = {});

void write_mofn_transcript(std::ostream& out, const MofnTranscript& t);

// Tail of the active count in one block of g consecutive positions of a
// uniform permutation: frequency of |Z - m g / n| > lambda g.
struct ConcentrationReport {
  std::uint64_t permutations = 0;
  std::uint64_t exceed = 0;       // first block only
  std::uint64_t pooled = 0;       // over all Q blocks
  std::uint64_t pooled_exceed = 0;
  double tail = 0.0;
  double se = 0.0;
  double bound = 0.0;  // exp(-lambda^2 g / 2)
};

ConcentrationReport concentration_check(const ActiveSet& active, std::uint32_t g, double lambda,
                                        std::uint64_t permutations, std::uint64_t seed);

}  // namespace ratshare
