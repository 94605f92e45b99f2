#include "ratshare/player.hpp"

#include <stdexcept>

namespace ratshare {

const char* to_string(HaltCause cause) {
  switch (cause) {
    case HaltCause::none: return "none";
    case HaltCause::missing_message: return "missing_message";
    case HaltCause::bad_message: return "bad_message";
    case HaltCause::final_block: return "final_block";
    case HaltCause::end_of_input: return "end_of_input";
    case HaltCause::invalid_position: return "invalid_position";
    case HaltCause::deviation: return "deviation";
    case HaltCause::round_cap: return "round_cap";
    case HaltCause::insufficient_shares: return "insufficient_shares";
  }
  return "?";
}

const char* to_string(Stage stage) { return stage == Stage::up ? "up" : "down"; }

Player::Player(std::uint32_t id, std::shared_ptr<const LabeledTree> tree, Field field, PlayerInput input)
    : id_(id), tree_(std::move(tree)), field_(field), input_(std::move(input)) {
  if (!tree_) throw std::invalid_argument("player needs a tree");
}

void Player::halt(HaltCause cause) {
  if (halted_) return;
  halted_ = true;
  output_ = guess_;
  cause_ = cause;
  halt_round_ = view_.round;
  halt_stage_ = stage_;
}

bool Player::begin_round(std::uint32_t round) {
  if (halted_) return false;
  view_ = RoundView{};
  view_.round = round;
  stage_ = Stage::up;
  root_values_.reset();
  if (round == 0 || round > input_.blocks.size()) {
    halt(HaltCause::end_of_input);
    return false;
  }
  const Block& block = input_.blocks[round - 1];
  view_.block = &block;
  const PositionalData pos = unmask_positional(field_, block.position, mask_);
  const std::uint32_t n = tree_->n_leaves();

  auto as_label = [&](Element e) -> std::optional<std::uint32_t> {
    if (e.value < 1 || e.value > n) return std::nullopt;
    return static_cast<std::uint32_t>(e.value);
  };
  auto as_player = [&](Element e) -> std::optional<std::uint32_t> {
    if (e.value < 1 || e.value > n) return std::nullopt;
    return static_cast<std::uint32_t>(e.value - 1);
  };

  const auto label = as_label(pos[kOwnLabel]);
  const auto leaf_parent = as_player(pos[kLeafParent]);
  if (!label || !leaf_parent) {
    halt(HaltCause::invalid_position);
    return false;
  }
  view_.label = *label;
  view_.leaf = tree_->leaf_of(*label);
  view_.leaf_parent = *leaf_parent;
  view_.internal = tree_->internal_of(*label);

  if (view_.internal != kNoNode) {
    const TreeNode& node = tree_->shape().node(view_.internal);
    const auto left = as_player(pos[kLeftChild]);
    const auto right = as_player(pos[kRightChild]);
    if (!left || !right) {
      halt(HaltCause::invalid_position);
      return false;
    }
    view_.left = *left;
    view_.right = *right;
    if (node.parent != kNoNode) {
      view_.parent_count = tree_->labels_at(node.parent).size();
      const PositionSlot slots[2] = {kParentPrimary, kParentSecondary};
      for (std::size_t r = 0; r < view_.parent_count; ++r) {
        const auto p = as_player(pos[slots[r]]);
        if (!p) {
          halt(HaltCause::invalid_position);
          return false;
        }
        view_.parents[r] = *p;
      }
    }
  }
  return true;
}

bool Player::acts_at(std::uint32_t depth) const {
  if (halted_ || view_.block == nullptr) return false;
  const TreeShape& shape = tree_->shape();
  if (shape.node(view_.leaf).depth == depth) return true;
  return view_.internal != kNoNode && shape.node(view_.internal).depth == depth;
}

Message Player::make(Stage stage, std::uint32_t receiver, std::size_t from, std::size_t to, Element s,
                     Element m, const TagPair& tags) const {
  Message msg;
  msg.round = view_.round;
  msg.stage = stage;
  msg.sender = id_;
  msg.receiver = receiver;
  msg.sender_node = from;
  msg.receiver_node = to;
  msg.payload = {s, m, tags.secret.a, tags.mask.a};
  return msg;
}

Player::Lookup Player::find_expected(std::span<const Message> inbox, Stage stage, std::uint32_t sender,
                                     std::size_t sender_node, std::size_t receiver_node,
                                     const Message*& found) const {
  found = nullptr;
  for (const Message& msg : inbox) {
    if (msg.round != view_.round || msg.stage != stage || msg.receiver != id_ || msg.sender != sender ||
        msg.sender_node != sender_node || msg.receiver_node != receiver_node) {
      continue;
    }
    if (found == nullptr) {
      found = &msg;
    } else if (found->payload != msg.payload) {
      return Lookup::conflict;
    }
  }
  return found ? Lookup::ok : Lookup::missing;
}

const Message* Player::receive(std::span<const Message> inbox, Stage stage, std::uint32_t sender,
                               std::size_t sender_node, std::size_t receiver_node, const VerifyPair& check,
                               StepResult& result) {
  const Message* msg = nullptr;
  switch (find_expected(inbox, stage, sender, sender_node, receiver_node, msg)) {
    case Lookup::missing:
      halt(HaltCause::missing_message);
      return nullptr;
    case Lookup::conflict:
      for (const Message& m : inbox) {
        if (m.round == view_.round && m.stage == stage && m.receiver == id_ && m.sender == sender &&
            m.sender_node == sender_node && m.receiver_node == receiver_node) {
          result.verdicts.push_back({m.id, false});
        }
      }
      halt(HaltCause::bad_message);
      return nullptr;
    case Lookup::ok:
      break;
  }
  const bool ok = verify(field_, msg->payload[0], AuthTag{msg->payload[2]}, check.secret) &&
                  verify(field_, msg->payload[1], AuthTag{msg->payload[3]}, check.mask);
  result.verdicts.push_back({msg->id, ok});
  if (!ok) {
    halt(HaltCause::bad_message);
    return nullptr;
  }
  return msg;
}

void Player::learn(Element s, Element m) {
  guess_ = s;
  mask_ = m;
  learned_round_ = view_.round;
}

StepResult Player::up_stage(std::uint32_t depth, std::span<const Message> inbox) {
  StepResult result;
  if (halted_ || view_.block == nullptr) return result;
  stage_ = Stage::up;
  const TreeShape& shape = tree_->shape();
  const Block& block = *view_.block;

  if (shape.node(view_.leaf).depth == depth) {
    result.out.push_back(make(Stage::up, view_.leaf_parent, view_.leaf, shape.node(view_.leaf).parent,
                              block.secret_share, block.mask_share, block.leaf_up));
  }

  if (view_.internal == kNoNode || shape.node(view_.internal).depth != depth) return result;
  const std::size_t w = view_.internal;
  const TreeNode& node = shape.node(w);
  const Message* left = receive(inbox, Stage::up, view_.left, node.left, w, block.from_children[0], result);
  if (!left) return result;
  const Message* right = receive(inbox, Stage::up, view_.right, node.right, w, block.from_children[1], result);
  if (!right) return result;

  const Element s = reconstruct_step(field_, left->payload[0], right->payload[0]);
  const Element m = reconstruct_step(field_, left->payload[1], right->payload[1]);
  if (node.parent == kNoNode) {
    root_values_.emplace(s, m);
    return result;
  }
  for (std::size_t r = 0; r < view_.parent_count; ++r) {
    result.out.push_back(make(Stage::up, view_.parents[r], w, node.parent, s, m, block.internal_up[r]));
  }
  return result;
}

StepResult Player::down_stage(std::uint32_t depth, std::span<const Message> inbox) {
  StepResult result;
  if (halted_ || view_.block == nullptr) return result;
  stage_ = Stage::down;
  const TreeShape& shape = tree_->shape();
  const Block& block = *view_.block;

  if (view_.internal != kNoNode && shape.node(view_.internal).depth == depth) {
    const std::size_t w = view_.internal;
    const TreeNode& node = shape.node(w);
    if (node.parent == kNoNode) {
      if (!root_values_) throw std::logic_error("root reached the down-stage without values");
      learn(root_values_->first, root_values_->second);
    } else {
      std::uint32_t sender = view_.parents[0];
      if (view_.parent_count > 1 && shape.node(node.parent).right == w) sender = view_.parents[1];
      const Message* msg = receive(inbox, Stage::down, sender, node.parent, w, block.from_parent_internal, result);
      if (!msg) return result;
      learn(msg->payload[0], msg->payload[1]);
    }
    if (block.partial()) {
      halt(HaltCause::final_block);
      return result;
    }
    const std::size_t child_nodes[2] = {node.left, node.right};
    const std::uint32_t child_players[2] = {view_.left, view_.right};
    for (int side = 0; side < 2; ++side) {
      if (!sends_down_to(*tree_, view_.label, side)) continue;
      result.out.push_back(make(Stage::down, child_players[side], w, child_nodes[side], guess_, mask_,
                                (*block.down)[side]));
    }
  }

  if (shape.node(view_.leaf).depth == depth) {
    const std::size_t parent = shape.node(view_.leaf).parent;
    const Message* msg =
        receive(inbox, Stage::down, view_.leaf_parent, parent, view_.leaf, block.from_parent_leaf, result);
    if (!msg) return result;
    learn(msg->payload[0], msg->payload[1]);
    if (block.partial() && view_.internal == kNoNode) halt(HaltCause::final_block);
  }
  return result;
}

}  // namespace ratshare
