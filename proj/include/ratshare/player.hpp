#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ratshare/comm_tree.hpp"
#include "ratshare/dealer.hpp"
#include "ratshare/field.hpp"

namespace ratshare {

enum class Stage : std::uint8_t { up, down };

// Four field elements on a private channel. The header fields name the
// tree edge the message travels on; both ends know it from the public tree
// and their positional data.
struct Message {
  std::uint64_t id = 0;  // assigned by the network
  std::uint32_t round = 0;
  Stage stage = Stage::up;
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  std::size_t sender_node = kNoNode;
  std::size_t receiver_node = kNoNode;
  std::array<Element, 4> payload{};  // secret value, mask value, secret tag, mask tag
  bool forged = false;               // simulator annotation, never read by automata
};

enum class HaltCause : std::uint8_t {
  none,
  missing_message,   // expected message absent at its deadline
  bad_message,       // verification failure or conflicting duplicates
  final_block,       // last input block exhausted: output s_t and quit
  end_of_input,      // no block left at the start of a round
  invalid_position,  // unmasked positional data is not a valid placement
  deviation,         // a strategy left the game
  round_cap,
  insufficient_shares,  // fewer than threshold group shares arrived
};

const char* to_string(HaltCause cause);
const char* to_string(Stage stage);

struct Verdict {
  std::uint64_t message_id = 0;
  bool accepted = false;
};

struct StepResult {
  std::vector<Message> out;
  std::vector<Verdict> verdicts;
};

// What a player knows about its placement after unmasking a block.
struct RoundView {
  std::uint32_t round = 0;
  std::uint32_t label = 0;
  std::size_t leaf = kNoNode;
  std::size_t internal = kNoNode;
  std::uint32_t leaf_parent = 0;
  std::array<std::uint32_t, 2> parents{};  // holders of the internal node's parent label(s)
  std::size_t parent_count = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  const Block* block = nullptr;
};

// Honest automaton: per round an up-stage forwarding verified shares toward
// the root and a down-stage propagating (s_t, m_{t+1}) back to the leaves.
class Player {
 public:
  Player(std::uint32_t id, std::shared_ptr<const LabeledTree> tree, Field field, PlayerInput input);

  // Unmasks the round's positional data with M. Returns false if the player
  // is halted afterwards.
  bool begin_round(std::uint32_t round);

  // Whether one of this round's nodes sits at `depth`.
  bool acts_at(std::uint32_t depth) const;

  StepResult up_stage(std::uint32_t depth, std::span<const Message> inbox);
  StepResult down_stage(std::uint32_t depth, std::span<const Message> inbox);

  std::uint32_t id() const { return id_; }
  bool halted() const { return halted_; }
  Element output() const { return output_; }
  HaltCause halt_cause() const { return cause_; }
  std::uint32_t halt_round() const { return halt_round_; }
  Stage halt_stage() const { return halt_stage_; }
  Element guess() const { return guess_; }
  Element mask() const { return mask_; }
  std::uint32_t learned_round() const { return learned_round_; }
  const RoundView& view() const { return view_; }
  const PlayerInput& input() const { return input_; }
  const LabeledTree& tree() const { return *tree_; }
  const Field& field() const { return field_; }

  // Leave the game, outputting the current guess.
  void halt(HaltCause cause);

 private:
  enum class Lookup { ok, missing, conflict };
  Lookup find_expected(std::span<const Message> inbox, Stage stage, std::uint32_t sender,
                       std::size_t sender_node, std::size_t receiver_node, const Message*& found) const;
  // Locates, verifies and reports the expected message; halts on a fault.
  const Message* receive(std::span<const Message> inbox, Stage stage, std::uint32_t sender,
                         std::size_t sender_node, std::size_t receiver_node, const VerifyPair& check,
                         StepResult& result);
  Message make(Stage stage, std::uint32_t receiver, std::size_t from, std::size_t to, Element s, Element m,
               const TagPair& tags) const;
  void learn(Element s, Element m);

  std::uint32_t id_;
  std::shared_ptr<const LabeledTree> tree_;
  Field field_;
  PlayerInput input_;

  Element guess_{0};  // S
  Element mask_{0};   // M
  std::uint32_t learned_round_ = 0;
  bool halted_ = false;
  Element output_{0};
  HaltCause cause_ = HaltCause::none;
  std::uint32_t halt_round_ = 0;
  Stage halt_stage_ = Stage::up;
  Stage stage_ = Stage::up;

  RoundView view_;
  std::optional<std::pair<Element, Element>> root_values_;
};

}  // namespace ratshare
