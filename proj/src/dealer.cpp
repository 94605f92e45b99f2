#include "ratshare/dealer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ratshare {

void GameParameters::validate() const {
  if (n < 3) throw std::invalid_argument("n must be at least 3");
  if (s_size < 2) throw std::invalid_argument("secret alphabet needs at least 2 symbols");
  if (secret >= s_size) throw std::invalid_argument("secret symbol outside the alphabet");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  if (field.q <= std::max<std::uint64_t>(n, s_size) || !is_prime(field.q)) {
    throw std::invalid_argument("field size must be a prime above max(n, |S|)");
  }
}

double default_beta(std::uint64_t s_size, Rational u_ratio) {
  const Rational s(static_cast<std::int64_t>(s_size));
  const Rational beta = (s - u_ratio) / (4 * u_ratio * s);
  return boost::rational_cast<double>(beta);
}

std::uint32_t sample_geometric(double beta, Rng& rng) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1)");
  const double u = rng.unit_open_closed();
  const double k = std::ceil(std::log(u) / std::log1p(-beta));
  if (!(k >= 1.0)) return 1;
  if (k > 1e9) return 1000000000u;
  return static_cast<std::uint32_t>(k);
}

std::uint32_t down_sender_label(const LabeledTree& tree, std::size_t child) {
  const std::size_t parent = tree.shape().node(child).parent;
  if (parent == tree.root() && tree.dual_root()) {
    return tree.shape().node(parent).left == child ? 2u : tree.n_leaves();
  }
  return tree.primary_label(parent);
}

bool sends_down_to(const LabeledTree& tree, std::uint32_t label, int side) {
  const std::size_t w = tree.internal_of(label);
  if (w == kNoNode) return false;
  const TreeNode& node = tree.shape().node(w);
  return down_sender_label(tree, side == 0 ? node.left : node.right) == label;
}

PositionalData positional_data(const LabeledTree& tree, const Field& field,
                               std::span<const std::uint32_t> label_of,
                               std::span<const std::uint32_t> player_at, std::uint32_t player,
                               Rng& padding) {
  PositionalData p;
  for (Element& e : p) e = field.random(padding);
  const std::uint32_t label = label_of[player];
  const TreeShape& shape = tree.shape();
  auto occupant = [&](std::uint32_t l) { return player_element(player_at[l]); };

  p[kOwnLabel] = Element{label};
  const std::size_t leaf = tree.leaf_of(label);
  p[kLeafParent] = occupant(tree.primary_label(shape.node(leaf).parent));

  if (const std::size_t w = tree.internal_of(label); w != kNoNode) {
    const TreeNode& node = shape.node(w);
    if (node.parent != kNoNode) {
      const auto parent_labels = tree.labels_at(node.parent);
      p[kParentPrimary] = occupant(parent_labels[0]);
      if (parent_labels.size() > 1) p[kParentSecondary] = occupant(parent_labels[1]);
    }
    p[kLeftChild] = occupant(tree.primary_label(node.left));
    p[kRightChild] = occupant(tree.primary_label(node.right));
  }
  return p;
}

PositionalData mask_positional(const Field& field, const PositionalData& plain, Element mask) {
  PositionalData out;
  for (std::size_t i = 0; i < kPositionSlots; ++i) out[i] = field.add(plain[i], mask);
  return out;
}

PositionalData unmask_positional(const Field& field, const PositionalData& masked, Element mask) {
  PositionalData out;
  for (std::size_t i = 0; i < kPositionSlots; ++i) out[i] = field.sub(masked[i], mask);
  return out;
}

namespace {

TagPair random_tags(const Field& field, Rng& rng) {
  return {AuthTag{field.random(rng)}, AuthTag{field.random(rng)}};
}

VerifyPair random_checks(const Field& field, Rng& rng) {
  return {random_verification(field, rng), random_verification(field, rng)};
}

Block padded_block(const Field& field, Rng& rng) {
  Block b;
  b.leaf_up = random_tags(field, rng);
  for (auto& t : b.internal_up) t = random_tags(field, rng);
  b.down.emplace();
  for (auto& t : *b.down) t = random_tags(field, rng);
  for (auto& v : b.from_children) v = random_checks(field, rng);
  b.from_parent_internal = random_checks(field, rng);
  b.from_parent_leaf = random_checks(field, rng);
  return b;
}

}  // namespace

std::vector<std::uint32_t> uniform_labels(std::uint32_t n, Rng& rng) {
  std::vector<std::uint32_t> label_of(n);
  std::iota(label_of.begin(), label_of.end(), 1u);
  rng.shuffle(std::span<std::uint32_t>(label_of));
  return label_of;
}

std::vector<std::uint32_t> labels_with_odd_long(const std::vector<bool>& short_player, Rng& rng) {
  const auto n = static_cast<std::uint32_t>(short_player.size());
  std::vector<std::uint32_t> odd, rest;
  for (std::uint32_t l = 1; l <= n; ++l) (l % 2 ? odd : rest).push_back(l);
  rng.shuffle(std::span<std::uint32_t>(odd));
  std::vector<std::uint32_t> long_players, short_players;
  for (std::uint32_t j = 0; j < n; ++j) (short_player[j] ? short_players : long_players).push_back(j);
  if (long_players.size() > odd.size()) throw std::logic_error("more long players than odd labels");
  std::vector<std::uint32_t> label_of(n, 0);
  std::size_t k = 0;
  for (std::uint32_t j : long_players) label_of[j] = odd[k++];
  for (; k < odd.size(); ++k) rest.push_back(odd[k]);
  rng.shuffle(std::span<std::uint32_t>(rest));
  for (std::size_t i = 0; i < short_players.size(); ++i) label_of[short_players[i]] = rest[i];
  return label_of;
}

DealtGame deal(const GameParameters& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const Field field = params.field.field();
  auto tree = std::make_shared<const LabeledTree>(LabeledTree::build(params.n));
  const TreeShape& shape = tree->shape();
  const std::uint32_t n = params.n;

  DealtGame game{params, field, tree, {}, {}};
  GroundTruth& truth = game.truth;
  truth.definitive_round = sample_geometric(params.beta, rng);
  truth.padding = sample_geometric(params.beta, rng);
  truth.secret = Element{params.secret};
  const std::uint32_t X = truth.definitive_round;
  const std::uint32_t L = truth.last_round();

  std::vector<std::vector<Block>> blocks(n);
  for (auto& b : blocks) b.reserve(L);
  Element mask{0};
  truth.rounds.reserve(L);

  for (std::uint32_t t = 1; t <= L; ++t) {
    RoundPlan plan;
    plan.round = t;
    plan.label_of = t < L ? uniform_labels(n, rng) : labels_with_odd_long(truth.short_player, rng);
    plan.player_at.assign(n + 1, 0);
    for (std::uint32_t j = 0; j < n; ++j) plan.player_at[plan.label_of[j]] = j;
    if (t == X) {
      truth.short_player.assign(n, false);
      for (std::uint32_t j = 0; j < n; ++j) truth.short_player[j] = plan.label_of[j] % 2 == 1;
    }

    plan.mask = mask;
    plan.next_mask = field.random(rng);
    plan.mask_shares = recursive_shares(shape, field, plan.next_mask, rng);
    plan.secret_value = (t == X) ? truth.secret : Element{rng.below(params.s_size)};
    plan.secret_shares = recursive_shares(shape, field, plan.secret_value, rng);

    std::vector<Block> round_blocks;
    round_blocks.reserve(n);
    for (std::uint32_t j = 0; j < n; ++j) {
      Block b = padded_block(field, rng);
      b.position = masked_positional_data(*tree, field, plan.label_of, plan.player_at, plan.mask, j, rng);
      const std::size_t leaf = tree->leaf_of(plan.label_of[j]);
      b.secret_share = plan.secret_shares.values[leaf];
      b.mask_share = plan.mask_shares.values[leaf];
      round_blocks.push_back(b);
    }

    // Authentication data for every message of the round.
    for (std::size_t w = 1; w < shape.size(); ++w) {
      const TreeNode& node = shape.node(w);
      const std::size_t p = node.parent;
      const int side = shape.node(p).left == w ? 0 : 1;
      const std::uint32_t sender = plan.player_at[tree->primary_label(w)];

      const Element up_s = plan.secret_shares.values[w];
      const Element up_m = plan.mask_shares.values[w];
      const auto parent_labels = tree->labels_at(p);
      for (std::size_t r = 0; r < parent_labels.size(); ++r) {
        const std::uint32_t receiver = plan.player_at[parent_labels[r]];
        const AuthData as = create_auth(field, up_s, rng);
        const AuthData am = create_auth(field, up_m, rng);
        if (node.is_leaf()) {
          if (r != 0) throw std::logic_error("leaf below a dual root");
          round_blocks[sender].leaf_up = {as.tag, am.tag};
        } else {
          round_blocks[sender].internal_up[r] = {as.tag, am.tag};
        }
        round_blocks[receiver].from_children[side] = {as.check, am.check};
      }

      const std::uint32_t down_sender = plan.player_at[down_sender_label(*tree, w)];
      const AuthData ds = create_auth(field, plan.secret_value, rng);
      const AuthData dm = create_auth(field, plan.next_mask, rng);
      (*round_blocks[down_sender].down)[side] = {ds.tag, dm.tag};
      VerifyPair& slot = node.is_leaf() ? round_blocks[sender].from_parent_leaf
                                        : round_blocks[sender].from_parent_internal;
      slot = {ds.check, dm.check};
    }

    for (std::uint32_t j = 0; j < n; ++j) blocks[j].push_back(std::move(round_blocks[j]));
    mask = plan.next_mask;
    truth.rounds.push_back(std::move(plan));
  }

  game.inputs.resize(n);
  for (std::uint32_t j = 0; j < n; ++j) {
    PlayerInput& in = game.inputs[j];
    in.player = j;
    in.blocks = std::move(blocks[j]);
    in.blocks.resize(truth.short_player[j] ? X : L);
    in.blocks.back().down.reset();
  }
  return game;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::uint8_t kMagic[4] = {'R', 'S', 'S', 'I'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t uint(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = (v << 8) | data_[pos_++];
    return v;
  }

  Element element(const Field& field) {
    need(field.byte_width());
    const Element e = field.decode(data_.subspan(pos_, field.byte_width()));
    pos_ += field.byte_width();
    return e;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t k) const {
    if (pos_ + k > data_.size()) throw std::invalid_argument("truncated input blob");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

template <class Visit>
void visit_block_elements(Block& b, Visit&& v) {
  for (Element& e : b.position) v(e);
  v(b.secret_share);
  v(b.mask_share);
  v(b.leaf_up.secret.a);
  v(b.leaf_up.mask.a);
  for (auto& t : b.internal_up) {
    v(t.secret.a);
    v(t.mask.a);
  }
  if (b.down) {
    for (auto& t : *b.down) {
      v(t.secret.a);
      v(t.mask.a);
    }
  }
  auto pair = [&](VerifyPair& p) {
    v(p.secret.b);
    v(p.secret.c);
    v(p.mask.b);
    v(p.mask.c);
  };
  for (auto& p : b.from_children) pair(p);
  pair(b.from_parent_internal);
  pair(b.from_parent_leaf);
}

}  // namespace

std::vector<std::uint8_t> serialize_input(const PlayerInput& input, const Field& field, std::uint32_t n) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  put_u64(out, field.modulus());
  put_u32(out, n);
  put_u32(out, input.player);
  put_u32(out, static_cast<std::uint32_t>(input.blocks.size()));
  for (const Block& cb : input.blocks) {
    Block b = cb;
    out.push_back(b.partial() ? 1 : 0);
    visit_block_elements(b, [&](Element& e) { field.encode(e, out); });
  }
  return out;
}

DecodedInput deserialize_input(std::span<const std::uint8_t> blob) {
  Reader r(blob);
  for (std::uint8_t m : kMagic) {
    if (r.uint(1) != m) throw std::invalid_argument("bad magic in input blob");
  }
  if (const auto version = r.uint(1); version != kVersion) {
    throw std::invalid_argument("unsupported input blob version " + std::to_string(version));
  }
  DecodedInput out;
  out.q = r.uint(8);
  const Field field(out.q);
  out.n = static_cast<std::uint32_t>(r.uint(4));
  out.input.player = static_cast<std::uint32_t>(r.uint(4));
  const auto count = r.uint(4);
  for (std::uint64_t i = 0; i < count; ++i) {
    Block b;
    const auto flags = r.uint(1);
    if (flags > 1) throw std::invalid_argument("bad block flags");
    if (flags == 0) b.down.emplace();
    visit_block_elements(b, [&](Element& e) { e = r.element(field); });
    out.input.blocks.push_back(b);
  }
  if (!r.done()) throw std::invalid_argument("trailing bytes in input blob");
  return out;
}

}  // namespace ratshare
