#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ratshare/auth.hpp"
#include "ratshare/comm_tree.hpp"
#include "ratshare/field.hpp"
#include "ratshare/iterated_shares.hpp"
#include "ratshare/rng.hpp"

namespace ratshare {

struct GameParameters {
  std::uint32_t n = 0;
  FieldSpec field;
  std::uint64_t s_size = 0;
  std::uint64_t secret = 0;  // symbol index in [0, s_size), embedded canonically
  double beta = 0.0;

  // Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
};

// (|S| - U) / (4 U |S|).
double default_beta(std::uint64_t s_size, Rational u_ratio);

// Pr(k) = (1 - beta)^(k-1) beta, by inversion of one uniform draw.
std::uint32_t sample_geometric(double beta, Rng& rng);

// Fixed layout of the positional tuple. Slots that do not apply to the
// holder's label carry uniform padding.
enum PositionSlot : std::size_t {
  kOwnLabel = 0,
  kLeafParent,
  kParentPrimary,    // parent of the internal node; label 2 holder at a dual root
  kParentSecondary,  // label n holder when the parent is a dual root
  kLeftChild,
  kRightChild,
  kPositionSlots
};
using PositionalData = std::array<Element, kPositionSlots>;

// Players are 0-based internally; their field identity is index + 1.
inline Element player_element(std::uint32_t player) { return Element{player + 1u}; }

// Label of the player that sends the down-stage message into `child`. At a
// dual root the label-2 holder serves the left child and the label-n holder
// the right child.
std::uint32_t down_sender_label(const LabeledTree& tree, std::size_t child);

// True if the holder of `label` sends down-stage messages into the given
// side (0 = left, 1 = right) of its internal node.
bool sends_down_to(const LabeledTree& tree, std::uint32_t label, int side);

// Plaintext position and neighbour identities of `player` for one round.
// label_of maps player -> label, player_at maps label -> player.
PositionalData positional_data(const LabeledTree& tree, const Field& field,
                               std::span<const std::uint32_t> label_of,
                               std::span<const std::uint32_t> player_at, std::uint32_t player,
                               Rng& padding);

PositionalData mask_positional(const Field& field, const PositionalData& plain, Element mask);
PositionalData unmask_positional(const Field& field, const PositionalData& masked, Element mask);

inline PositionalData masked_positional_data(const LabeledTree& tree, const Field& field,
                                             std::span<const std::uint32_t> label_of,
                                             std::span<const std::uint32_t> player_at,
                                             Element mask, std::uint32_t player, Rng& padding) {
  return mask_positional(field, positional_data(tree, field, label_of, player_at, player, padding), mask);
}

// Uniform assignment of labels 1..n to players (player -> label).
std::vector<std::uint32_t> uniform_labels(std::uint32_t n, Rng& rng);
// Uniform among assignments that give every non-short player an odd label.
std::vector<std::uint32_t> labels_with_odd_long(const std::vector<bool>& short_player, Rng& rng);

struct TagPair {
  AuthTag secret;
  AuthTag mask;
};

struct VerifyPair {
  VerificationVector secret;
  VerificationVector mask;
};

// One round of dealt input. A partial block lacks the down-stage child tags.
struct Block {
  PositionalData position{};  // masked with this round's mask
  Element secret_share;
  Element mask_share;
  TagPair leaf_up{};
  std::array<TagPair, 2> internal_up{};  // [0] primary parent, [1] secondary parent
  std::optional<std::array<TagPair, 2>> down;  // [0] left child, [1] right child
  std::array<VerifyPair, 2> from_children{};   // [0] left, [1] right
  VerifyPair from_parent_internal{};
  VerifyPair from_parent_leaf{};

  bool partial() const { return !down.has_value(); }
};

struct PlayerInput {
  std::uint32_t player = 0;
  std::vector<Block> blocks;
};

struct RoundPlan {
  std::uint32_t round = 0;
  std::vector<std::uint32_t> label_of;   // player -> label
  std::vector<std::uint32_t> player_at;  // label -> player; index 0 unused
  Element secret_value;                  // s_t
  Element mask;                          // m_t
  Element next_mask;                     // m_{t+1}
  ShareTree secret_shares;
  ShareTree mask_shares;
};

// Dealer-side record; visible to the simulator for metrics only.
struct GroundTruth {
  std::uint32_t definitive_round = 0;  // X
  std::uint32_t padding = 0;           // Y
  Element secret;
  std::vector<bool> short_player;
  std::vector<RoundPlan> rounds;

  std::uint32_t last_round() const { return definitive_round + padding; }
};

struct DealtGame {
  GameParameters params;
  Field field;
  std::shared_ptr<const LabeledTree> tree;
  std::vector<PlayerInput> inputs;
  GroundTruth truth;
};

DealtGame deal(const GameParameters& params, std::uint64_t seed);

// Versioned binary blob: field elements in canonical wire encoding,
// length-prefixed block list.
std::vector<std::uint8_t> serialize_input(const PlayerInput& input, const Field& field, std::uint32_t n);

struct DecodedInput {
  std::uint64_t q = 0;
  std::uint32_t n = 0;
  PlayerInput input;
};

// Throws std::invalid_argument on a malformed blob.
DecodedInput deserialize_input(std::span<const std::uint8_t> blob);

}  // namespace ratshare
