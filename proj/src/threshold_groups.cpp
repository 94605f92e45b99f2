#include "ratshare/threshold_groups.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "json.hpp"

namespace ratshare {

std::uint32_t ThresholdParams::group_size(std::uint32_t n) const {
  const double raw = c() * std::log2(static_cast<double>(n));
  // Tolerate float noise at exact integers such as 16 * log2(1024).
  return static_cast<std::uint32_t>(std::ceil(raw - 1e-9));
}

std::uint32_t ThresholdParams::group_count(std::uint32_t n) const {
  const std::uint32_t g = group_size(n);
  return g == 0 ? 0 : n / g;
}

std::uint32_t ThresholdParams::threshold(std::uint32_t members) const {
  const double raw = tau * static_cast<double>(members);
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(raw - 1e-9)));
}

void ThresholdParams::validate(std::uint32_t n) const {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (!(lambda > 0.0 && lambda <= std::min(tau, 1.0 - tau))) {
    throw std::invalid_argument("lambda must lie in (0, min(tau, 1 - tau)]");
  }
  if (!(k > 0.0)) throw std::invalid_argument("k must be positive");
  if (n < 2) throw std::invalid_argument("need at least two players");
  const std::uint32_t g = group_size(n);
  const std::uint32_t q = group_count(n);
  if (q < 3) {
    throw std::invalid_argument("only " + std::to_string(q) + " groups of size " + std::to_string(g) + " fit in n=" +
                                std::to_string(n) + "; need at least 3");
  }
}

GroupAssignment assign_groups(std::uint32_t n, const ThresholdParams& params, Rng& rng) {
  params.validate(n);
  GroupAssignment a;
  a.nominal_size = params.group_size(n);
  const std::uint32_t q = params.group_count(n);
  a.permutation.resize(n);
  std::iota(a.permutation.begin(), a.permutation.end(), 0u);
  rng.shuffle(std::span<std::uint32_t>(a.permutation));
  a.members.assign(q, {});
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t g = i < q * a.nominal_size ? i / a.nominal_size : (i - q * a.nominal_size) % q;
    a.members[g].push_back(a.permutation[i]);
  }
  a.group_of.assign(n, 0);
  a.slot_of.assign(n, 0);
  for (std::uint32_t g = 0; g < q; ++g) {
    for (std::uint32_t s = 0; s < a.members[g].size(); ++s) {
      a.group_of[a.members[g][s]] = g;
      a.slot_of[a.members[g][s]] = s;
    }
  }
  return a;
}

std::uint32_t ActiveSet::count() const {
  return static_cast<std::uint32_t>(std::count(flags.begin(), flags.end(), true));
}

ActiveSet ActiveSet::all(std::uint32_t n) { return ActiveSet{std::vector<bool>(n, true)}; }

ActiveSet ActiveSet::random(std::uint32_t n, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("active fraction must lie in [0, 1]");
  const auto m = static_cast<std::uint32_t>(std::llround(fraction * n));
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  rng.shuffle(std::span<std::uint32_t>(order));
  ActiveSet s{std::vector<bool>(n, false)};
  for (std::uint32_t i = 0; i < m; ++i) s.flags[order[i]] = true;
  return s;
}

ActiveSet ActiveSet::from_list(std::uint32_t n, std::span<const std::uint32_t> players) {
  ActiveSet s{std::vector<bool>(n, false)};
  for (std::uint32_t p : players) {
    if (p >= n) throw std::invalid_argument("active player " + std::to_string(p) + " out of range");
    if (s.flags[p]) throw std::invalid_argument("active player " + std::to_string(p) + " listed twice");
    s.flags[p] = true;
  }
  return s;
}

std::vector<std::uint32_t> active_counts(const GroupAssignment& groups, const ActiveSet& active) {
  std::vector<std::uint32_t> z(groups.count(), 0);
  for (std::uint32_t g = 0; g < groups.count(); ++g) {
    for (std::uint32_t p : groups.members[g]) z[g] += active.active(p) ? 1 : 0;
  }
  return z;
}

bool all_reconstructible(const GroupAssignment& groups, const ActiveSet& active, const ThresholdParams& params) {
  const auto z = active_counts(groups, active);
  for (std::uint32_t g = 0; g < groups.count(); ++g) {
    const auto size = static_cast<std::uint32_t>(groups.members[g].size());
    if (z[g] < params.threshold(size)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Shamir

std::vector<ShamirShare> shamir_split(const Field& field, Element y, std::uint32_t threshold, std::uint32_t g,
                                      std::span<const Element> coefficients) {
  if (threshold < 1 || threshold > g) throw std::invalid_argument("need 1 <= threshold <= g");
  if (g >= field.modulus()) throw std::invalid_argument("not enough evaluation points: g must be below q");
  if (coefficients.size() + 1 != threshold) throw std::invalid_argument("need threshold - 1 coefficients");
  std::vector<ShamirShare> shares(g);
  for (std::uint32_t x = 1; x <= g; ++x) {
    Element acc{0};
    for (std::size_t i = coefficients.size(); i-- > 0;) acc = field.mul(field.add(acc, coefficients[i]), Element{x});
    shares[x - 1] = {x, field.add(acc, y)};
  }
  return shares;
}

std::vector<ShamirShare> shamir_split(const Field& field, Element y, std::uint32_t threshold, std::uint32_t g,
                                      Rng& rng) {
  if (threshold < 1 || threshold > g) throw std::invalid_argument("need 1 <= threshold <= g");
  std::vector<Element> coefficients(threshold - 1);
  for (Element& c : coefficients) c = field.random(rng);
  return shamir_split(field, y, threshold, g, coefficients);
}

LagrangeAtZero::LagrangeAtZero(const Field& field, std::span<const std::uint32_t> xs) : field_(field) {
  weights_.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Element num{1}, den{1};
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j == i) continue;
      const Element xj{xs[j]};
      num = field.mul(num, xj);
      den = field.mul(den, field.sub(xj, Element{xs[i]}));
    }
    weights_[i] = field.mul(num, field.inv(den));
  }
}

Element LagrangeAtZero::combine(std::span<const Element> values) const {
  if (values.size() != weights_.size()) throw std::invalid_argument("one value per interpolation point");
  Element acc{0};
  for (std::size_t i = 0; i < values.size(); ++i) acc = field_.add(acc, field_.mul(weights_[i], values[i]));
  return acc;
}

Element shamir_reconstruct(const Field& field, std::span<const ShamirShare> shares, std::uint32_t threshold) {
  if (threshold == 0) throw std::invalid_argument("threshold must be positive");
  std::vector<std::uint32_t> xs;
  std::vector<Element> ys;
  for (const ShamirShare& s : shares) {
    if (xs.size() == threshold) break;
    if (s.x == 0 || s.x >= field.modulus()) throw std::invalid_argument("share point outside 1..q-1");
    if (std::find(xs.begin(), xs.end(), s.x) != xs.end()) continue;
    xs.push_back(s.x);
    ys.push_back(s.value);
  }
  if (xs.size() < threshold) throw InsufficientShares(xs.size(), threshold);
  return LagrangeAtZero(field, xs).combine(ys);
}

// ---------------------------------------------------------------------------
// Dealing

void MofnParameters::validate() const {
  base.validate();
  threshold.validate(base.n);
}

MofnGame deal_mofn(const MofnParameters& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  const Field field = params.base.field.field();
  MofnGame game{params, field, assign_groups(params.base.n, params.threshold, rng), {}, nullptr, {}, {}};
  const GroupAssignment& groups = game.groups;
  const std::uint32_t Q = groups.count();
  for (const auto& m : groups.members) {
    game.thresholds.push_back(params.threshold.threshold(static_cast<std::uint32_t>(m.size())));
  }
  game.tree = std::make_shared<const LabeledTree>(LabeledTree::build(Q));
  const LabeledTree& tree = *game.tree;
  const TreeShape& shape = tree.shape();

  MofnTruth& truth = game.truth;
  truth.definitive_round = sample_geometric(params.base.beta, rng);
  truth.padding = sample_geometric(params.base.beta, rng);
  truth.secret = Element{params.base.secret};
  const std::uint32_t X = truth.definitive_round;
  const std::uint32_t L = X + truth.padding;

  game.inputs.resize(Q);
  for (std::uint32_t g = 0; g < Q; ++g) {
    game.inputs[g].blocks.reserve(L);
    game.inputs[g].members.assign(groups.members[g].size(), {});
    for (auto& mb : game.inputs[g].members) mb.reserve(L);
  }

  Element mask{0};
  for (std::uint32_t t = 1; t <= L; ++t) {
    const std::vector<std::uint32_t> label_of =
        t < L ? uniform_labels(Q, rng) : labels_with_odd_long(truth.short_group, rng);
    std::vector<std::uint32_t> group_at(Q + 1, 0);
    for (std::uint32_t g = 0; g < Q; ++g) group_at[label_of[g]] = g;
    if (t == X) {
      truth.short_group.assign(Q, false);
      for (std::uint32_t g = 0; g < Q; ++g) truth.short_group[g] = label_of[g] % 2 == 1;
    }
    truth.label_of.push_back(label_of);

    const Element next_mask = field.random(rng);
    const ShareTree mask_shares = recursive_shares(shape, field, next_mask, rng);
    const Element value = (t == X) ? truth.secret : Element{rng.below(params.base.s_size)};
    truth.values.push_back(value);
    const ShareTree secret_shares = recursive_shares(shape, field, value, rng);

    std::vector<GroupBlock> blocks(Q);
    std::vector<std::vector<MemberBlock>> member_blocks(Q);
    for (std::uint32_t g = 0; g < Q; ++g) {
      const auto size = static_cast<std::uint32_t>(groups.members[g].size());
      blocks[g].position = masked_positional_data(tree, field, label_of, group_at, mask, g, rng);
      const std::size_t leaf = tree.leaf_of(label_of[g]);
      const auto s_split = shamir_split(field, secret_shares.values[leaf], game.thresholds[g], size, rng);
      const auto m_split = shamir_split(field, mask_shares.values[leaf], game.thresholds[g], size, rng);
      member_blocks[g].resize(size);
      for (std::uint32_t i = 0; i < size; ++i) {
        MemberBlock& mb = member_blocks[g][i];
        mb.secret_share = s_split[i];
        mb.mask_share = m_split[i];
        mb.down.emplace();
      }
    }

    for (std::size_t w = 1; w < shape.size(); ++w) {
      const TreeNode& node = shape.node(w);
      const std::size_t p = node.parent;
      const int side = shape.node(p).left == w ? 0 : 1;
      const std::uint32_t sender = group_at[tree.primary_label(w)];
      const auto sender_size = member_blocks[sender].size();

      const auto parent_labels = tree.labels_at(p);
      for (std::size_t r = 0; r < parent_labels.size(); ++r) {
        const std::uint32_t receiver = group_at[parent_labels[r]];
        auto& checks = blocks[receiver].from_children[side];
        checks.resize(sender_size);
        for (std::size_t i = 0; i < sender_size; ++i) {
          const AuthData as = create_auth(field, secret_shares.values[w], rng);
          const AuthData am = create_auth(field, mask_shares.values[w], rng);
          MemberBlock& mb = member_blocks[sender][i];
          (node.is_leaf() ? mb.leaf_up : mb.internal_up[r]) = {as.tag, am.tag};
          checks[i] = {as.check, am.check};
        }
      }

      const std::uint32_t down = group_at[down_sender_label(tree, w)];
      auto& checks = node.is_leaf() ? blocks[sender].from_parent_leaf : blocks[sender].from_parent_internal;
      checks.resize(member_blocks[down].size());
      for (std::size_t i = 0; i < member_blocks[down].size(); ++i) {
        const AuthData ds = create_auth(field, value, rng);
        const AuthData dm = create_auth(field, next_mask, rng);
        (*member_blocks[down][i].down)[side] = {ds.tag, dm.tag};
        checks[i] = {ds.check, dm.check};
      }
    }

    for (std::uint32_t g = 0; g < Q; ++g) {
      game.inputs[g].blocks.push_back(std::move(blocks[g]));
      for (std::size_t i = 0; i < member_blocks[g].size(); ++i) {
        game.inputs[g].members[i].push_back(std::move(member_blocks[g][i]));
      }
    }
    mask = next_mask;
  }

  for (std::uint32_t g = 0; g < Q; ++g) {
    GroupInput& in = game.inputs[g];
    const std::size_t len = truth.short_group[g] ? X : L;
    in.blocks.resize(len);
    in.blocks.back().partial = true;
    for (auto& mb : in.members) {
      mb.resize(len);
      mb.back().down.reset();
    }
  }
  return game;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct GroupView {
  std::uint32_t label = 0;
  std::size_t leaf = kNoNode;
  std::size_t internal = kNoNode;
  std::uint32_t leaf_parent = 0;
  std::array<std::uint32_t, 2> parents{};
  std::size_t parent_count = 0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  const GroupBlock* block = nullptr;
};

struct GroupState {
  std::vector<std::uint32_t> active_slots;
  std::unique_ptr<LagrangeAtZero> lagrange;  // over the first threshold active slots
  bool halted = false;
  HaltCause cause = HaltCause::none;
  std::uint32_t halt_round = 0;
  Element guess{0};
  Element mask{0};
  Element output{0};
  std::uint32_t learned_round = 0;
  GroupView view;
  std::optional<std::pair<Element, Element>> leaf_values;
  std::optional<std::pair<Element, Element>> root_values;
  std::vector<MofnMessage> inbox;

  void halt(HaltCause c, std::uint32_t round) {
    if (halted) return;
    halted = true;
    cause = c;
    halt_round = round;
    output = guess;
  }
};

class MofnEngine {
 public:
  MofnEngine(const MofnGame& game, const ActiveSet& active, std::uint64_t seed, const MofnRunOptions& options)
      : game_(game), tree_(*game.tree), shape_(game.tree->shape()), field_(game.field), opts_(options), rng_(seed) {
    const std::uint32_t n = game.params.base.n;
    if (active.size() != n) throw std::invalid_argument("active set size does not match n");
    tr_.seed = seed;
    tr_.params = game.params;
    tr_.definitive_round = game.truth.definitive_round;
    tr_.padding = game.truth.padding;
    tr_.secret = game.truth.secret;
    tr_.groups = game.groups.members;
    tr_.thresholds = game.thresholds;
    tr_.active = active.flags;
    tr_.active_counts = active_counts(game.groups, active);
    tr_.players.resize(n);
    for (std::uint32_t j = 0; j < n; ++j) tr_.players[j].active = active.active(j);
    tr_.reconstructible = all_reconstructible(game.groups, active, game.params.threshold);
    tr_.tamper = options.tamper;
    if (options.tamper && (options.tamper->player >= n || !active.active(options.tamper->player))) {
      throw std::invalid_argument("tampering player must be active");
    }

    groups_.resize(game.groups.count());
    for (std::uint32_t g = 0; g < groups_.size(); ++g) {
      GroupState& st = groups_[g];
      for (std::uint32_t s = 0; s < game.groups.members[g].size(); ++s) {
        if (active.active(game.groups.members[g][s])) st.active_slots.push_back(s);
      }
      if (st.active_slots.empty()) {
        st.halted = true;  // nobody left to act for this group
        continue;
      }
      if (st.active_slots.size() >= game.thresholds[g]) {
        std::vector<std::uint32_t> xs;
        for (std::size_t i = 0; i < game.thresholds[g]; ++i) xs.push_back(st.active_slots[i] + 1);
        st.lagrange = std::make_unique<LagrangeAtZero>(field_, xs);
      }
    }
    msg_bits_ = field_.bit_width();
  }

  MofnTranscript run() {
    const double beta = game_.params.base.beta;
    const std::uint32_t cap = opts_.round_cap ? opts_.round_cap : static_cast<std::uint32_t>(std::ceil(100.0 / beta));
    const std::uint32_t depth_max = shape_.max_depth();
    for (std::uint32_t t = 1;; ++t) {
      if (t > cap) {
        if (alive()) {
          tr_.round_cap_hit = true;
          for (GroupState& g : groups_) g.halt(HaltCause::round_cap, t - 1);
        }
        break;
      }
      round_ = t;
      bool any = false;
      for (std::uint32_t g = 0; g < groups_.size(); ++g) any = begin_round(g) || any;
      if (!any) break;
      tr_.rounds_started = t;

      for (GroupState& g : groups_) g.inbox.clear();
      exchange_shares();
      if (t == 1) {
        tr_.leaves_reconstructed = std::all_of(groups_.begin(), groups_.end(),
                                               [](const GroupState& g) { return g.leaf_values.has_value(); });
      }
      for (std::uint32_t k = 0; k <= depth_max; ++k) run_slot(Stage::up, depth_max - k);
      for (GroupState& g : groups_) g.inbox.clear();
      for (std::uint32_t k = 0; k <= depth_max; ++k) run_slot(Stage::down, k);
      if (!alive()) break;
    }
    finish();
    return std::move(tr_);
  }

 private:
  bool alive() const {
    return std::any_of(groups_.begin(), groups_.end(), [](const GroupState& g) { return !g.halted; });
  }

  std::uint32_t member(std::uint32_t group, std::uint32_t slot) const { return game_.groups.members[group][slot]; }

  const MemberBlock& member_block(std::uint32_t group, std::uint32_t slot) const {
    return game_.inputs[group].members[slot][round_ - 1];
  }

  bool begin_round(std::uint32_t g) {
    GroupState& st = groups_[g];
    if (st.halted) return false;
    st.view = GroupView{};
    st.leaf_values.reset();
    st.root_values.reset();
    const GroupInput& in = game_.inputs[g];
    if (round_ > in.blocks.size()) {
      st.halt(HaltCause::end_of_input, round_);
      return false;
    }
    const GroupBlock& block = in.blocks[round_ - 1];
    const PositionalData pos = unmask_positional(field_, block.position, st.mask);
    const std::uint32_t q = game_.groups.count();
    auto in_range = [&](Element e) { return e.value >= 1 && e.value <= q; };
    auto group_id = [](Element e) { return static_cast<std::uint32_t>(e.value - 1); };
    if (!in_range(pos[kOwnLabel]) || !in_range(pos[kLeafParent])) {
      st.halt(HaltCause::invalid_position, round_);
      return false;
    }
    GroupView& v = st.view;
    v.block = &block;
    v.label = static_cast<std::uint32_t>(pos[kOwnLabel].value);
    v.leaf = tree_.leaf_of(v.label);
    v.leaf_parent = group_id(pos[kLeafParent]);
    v.internal = tree_.internal_of(v.label);
    if (v.internal != kNoNode) {
      if (!in_range(pos[kLeftChild]) || !in_range(pos[kRightChild])) {
        st.halt(HaltCause::invalid_position, round_);
        return false;
      }
      v.left = group_id(pos[kLeftChild]);
      v.right = group_id(pos[kRightChild]);
      const std::size_t parent = shape_.node(v.internal).parent;
      if (parent != kNoNode) {
        v.parent_count = tree_.labels_at(parent).size();
        const PositionSlot slots[2] = {kParentPrimary, kParentSecondary};
        for (std::size_t r = 0; r < v.parent_count; ++r) {
          if (!in_range(pos[slots[r]])) {
            st.halt(HaltCause::invalid_position, round_);
            return false;
          }
          v.parents[r] = group_id(pos[slots[r]]);
        }
      }
    }
    return true;
  }

  std::uint64_t new_id() { return next_id_++; }

  void count(std::uint32_t sender, std::uint64_t messages, unsigned elements) {
    MofnPlayerRecord& rec = tr_.players[sender];
    rec.messages += messages;
    rec.bits += messages * elements * msg_bits_;
    tr_.total_messages += messages;
  }

  // Intra-group all-to-all of Shamir shares; every leaf value is rebuilt
  // before the up-stage proper begins.
  void exchange_shares() {
    bool any = false;
    const std::uint32_t slot = static_cast<std::uint32_t>(tr_.slots + 1);
    for (std::uint32_t g = 0; g < groups_.size(); ++g) {
      GroupState& st = groups_[g];
      if (st.halted) continue;
      any = true;
      const auto z = static_cast<std::uint32_t>(st.active_slots.size());
      for (std::uint32_t s : st.active_slots) {
        const MemberBlock& mb = member_block(g, s);
        count(member(g, s), z - 1, 2);
        if (opts_.record_messages && z > 1) {
          MofnMessage m;
          m.id = new_id();
          m.slot = slot;
          m.round = round_;
          m.kind = MofnMessageKind::share;
          m.sender = member(g, s);
          m.sender_group = m.receiver_group = g;
          m.sender_node = m.receiver_node = st.view.leaf;
          m.payload = {mb.secret_share.value, mb.mask_share.value, Element{}, Element{}};
          m.recipients = z - 1;
          tr_.messages.push_back(m);
        }
      }
      if (!st.lagrange) {
        st.halt(HaltCause::insufficient_shares, round_);
        continue;
      }
      const std::size_t thr = game_.thresholds[g];
      std::vector<Element> s_vals(thr), m_vals(thr);
      for (std::size_t i = 0; i < thr; ++i) {
        const MemberBlock& mb = member_block(g, st.active_slots[i]);
        s_vals[i] = mb.secret_share.value;
        m_vals[i] = mb.mask_share.value;
      }
      st.leaf_values.emplace(st.lagrange->combine(s_vals), st.lagrange->combine(m_vals));
    }
    if (any) ++tr_.slots;
  }

  template <class TagFn>
  void emit(std::vector<MofnMessage>& out, std::uint32_t g, Stage stage, std::uint32_t receiver_group,
            std::size_t from, std::size_t to, Element s, Element m, TagFn&& tag_of) {
    const GroupState& st = groups_[g];
    const auto recipients = static_cast<std::uint32_t>(groups_[receiver_group].active_slots.size());
    for (std::uint32_t slot : st.active_slots) {
      const TagPair tags = tag_of(member_block(g, slot));
      MofnMessage msg;
      msg.id = new_id();
      msg.round = round_;
      msg.stage = stage;
      msg.kind = MofnMessageKind::copy;
      msg.sender = member(g, slot);
      msg.sender_group = g;
      msg.receiver_group = receiver_group;
      msg.sender_node = from;
      msg.receiver_node = to;
      msg.payload = {s, m, tags.secret.a, tags.mask.a};
      msg.recipients = recipients;
      if (opts_.tamper && tr_.tamper_round == 0 && msg.sender == opts_.tamper->player &&
          round_ >= opts_.tamper->round) {
        msg.payload[0] = field_.random_other_than(msg.payload[0], rng_);
        msg.payload[2] = field_.random_other_than(msg.payload[2], rng_);
        msg.forged = true;
        tr_.tamper_round = round_;
      }
      count(msg.sender, recipients, 4);
      out.push_back(msg);
    }
  }

  // Collects the copies of one expected value, verifies each against the
  // group's shared verification vectors and requires agreement.
  std::optional<std::pair<Element, Element>> receive(std::uint32_t g, Stage stage, std::uint32_t sender_group,
                                                     std::size_t from, std::size_t to,
                                                     const std::vector<VerifyPair>& checks) {
    GroupState& st = groups_[g];
    std::vector<const MofnMessage*> copies;
    for (const MofnMessage& m : st.inbox) {
      if (m.round == round_ && m.stage == stage && m.kind == MofnMessageKind::copy && m.receiver_group == g &&
          m.sender_group == sender_group && m.sender_node == from && m.receiver_node == to) {
        copies.push_back(&m);
      }
    }
    if (copies.empty()) {
      st.halt(HaltCause::missing_message, round_);
      return std::nullopt;
    }
    bool ok = true;
    for (const MofnMessage* m : copies) {
      const std::uint32_t slot = game_.groups.slot_of[m->sender];
      bool good = game_.groups.group_of[m->sender] == sender_group && slot < checks.size();
      good = good && verify(field_, m->payload[0], AuthTag{m->payload[2]}, checks[slot].secret) &&
             verify(field_, m->payload[1], AuthTag{m->payload[3]}, checks[slot].mask);
      verdicts_[m->id] = good;
      ok = ok && good;
    }
    for (const MofnMessage* m : copies) {
      if (m->payload[0] != copies.front()->payload[0] || m->payload[1] != copies.front()->payload[1]) ok = false;
    }
    if (!ok) {
      st.halt(HaltCause::bad_message, round_);
      return std::nullopt;
    }
    return std::make_pair(copies.front()->payload[0], copies.front()->payload[1]);
  }

  void learn(GroupState& st, std::pair<Element, Element> v) {
    st.guess = v.first;
    st.mask = v.second;
    st.learned_round = round_;
  }

  void run_slot(Stage stage, std::uint32_t depth) {
    std::vector<std::uint32_t> actors;
    for (std::uint32_t g = 0; g < groups_.size(); ++g) {
      const GroupState& st = groups_[g];
      if (st.halted || st.view.block == nullptr) continue;
      const bool leaf = shape_.node(st.view.leaf).depth == depth;
      const bool internal = st.view.internal != kNoNode && shape_.node(st.view.internal).depth == depth;
      if (leaf || internal) actors.push_back(g);
    }
    if (actors.empty()) return;
    const std::uint32_t slot = static_cast<std::uint32_t>(++tr_.slots);
    std::vector<MofnMessage> out;
    for (std::uint32_t g : actors) {
      if (opts_.shuffle_delivery) rng_.shuffle(std::span<MofnMessage>(groups_[g].inbox));
      if (stage == Stage::up) {
        up_step(g, depth, out);
      } else {
        down_step(g, depth, out);
      }
    }
    for (MofnMessage& m : out) {
      m.slot = slot;
      groups_[m.receiver_group].inbox.push_back(m);
      if (opts_.record_messages) tr_.messages.push_back(m);
    }
  }

  void up_step(std::uint32_t g, std::uint32_t depth, std::vector<MofnMessage>& out) {
    GroupState& st = groups_[g];
    const GroupView& v = st.view;
    if (shape_.node(v.leaf).depth == depth) {
      if (!st.leaf_values) throw std::logic_error("leaf group without reconstructed values");
      emit(out, g, Stage::up, v.leaf_parent, v.leaf, shape_.node(v.leaf).parent, st.leaf_values->first,
           st.leaf_values->second, [](const MemberBlock& mb) { return mb.leaf_up; });
    }
    if (v.internal == kNoNode || shape_.node(v.internal).depth != depth) return;
    const TreeNode& node = shape_.node(v.internal);
    const auto left = receive(g, Stage::up, v.left, node.left, v.internal, v.block->from_children[0]);
    if (!left) return;
    const auto right = receive(g, Stage::up, v.right, node.right, v.internal, v.block->from_children[1]);
    if (!right) return;
    const Element s = reconstruct_step(field_, left->first, right->first);
    const Element m = reconstruct_step(field_, left->second, right->second);
    if (node.parent == kNoNode) {
      st.root_values.emplace(s, m);
      return;
    }
    for (std::size_t r = 0; r < v.parent_count; ++r) {
      emit(out, g, Stage::up, v.parents[r], v.internal, node.parent, s, m,
           [r](const MemberBlock& mb) { return mb.internal_up[r]; });
    }
  }

  void down_step(std::uint32_t g, std::uint32_t depth, std::vector<MofnMessage>& out) {
    GroupState& st = groups_[g];
    const GroupView& v = st.view;
    if (v.internal != kNoNode && shape_.node(v.internal).depth == depth) {
      const TreeNode& node = shape_.node(v.internal);
      if (node.parent == kNoNode) {
        if (!st.root_values) throw std::logic_error("root group reached the down-stage without values");
        learn(st, *st.root_values);
      } else {
        std::uint32_t sender = v.parents[0];
        if (v.parent_count > 1 && shape_.node(node.parent).right == v.internal) sender = v.parents[1];
        const auto got = receive(g, Stage::down, sender, node.parent, v.internal, v.block->from_parent_internal);
        if (!got) return;
        learn(st, *got);
      }
      if (v.block->partial) {
        st.halt(HaltCause::final_block, round_);
        return;
      }
      const std::size_t child_nodes[2] = {node.left, node.right};
      const std::uint32_t child_groups[2] = {v.left, v.right};
      for (int side = 0; side < 2; ++side) {
        if (!sends_down_to(tree_, v.label, side)) continue;
        emit(out, g, Stage::down, child_groups[side], v.internal, child_nodes[side], st.guess, st.mask,
             [side](const MemberBlock& mb) { return (*mb.down)[side]; });
      }
    }
    if (shape_.node(v.leaf).depth == depth) {
      const std::size_t parent = shape_.node(v.leaf).parent;
      const auto got = receive(g, Stage::down, v.leaf_parent, parent, v.leaf, v.block->from_parent_leaf);
      if (!got) return;
      learn(st, *got);
      if (v.block->partial && v.internal == kNoNode) st.halt(HaltCause::final_block, round_);
    }
  }

  void finish() {
    for (MofnMessage& m : tr_.messages) {
      if (auto it = verdicts_.find(m.id); it != verdicts_.end()) m.verified = it->second;
    }
    bool any_active = false;
    bool all_ok = true;
    for (std::uint32_t g = 0; g < groups_.size(); ++g) {
      const GroupState& st = groups_[g];
      if (st.cause == HaltCause::bad_message) tr_.tamper_detected = true;
      for (std::uint32_t slot : st.active_slots) {
        MofnPlayerRecord& rec = tr_.players[member(g, slot)];
        rec.output = st.output;
        rec.cause = st.cause;
        rec.halt_round = st.halt_round;
        rec.learned_round = st.learned_round;
        tr_.rounds = std::max(tr_.rounds, st.learned_round);
        any_active = true;
        all_ok = all_ok && st.output == tr_.secret && st.learned_round == tr_.definitive_round;
      }
    }
    if (!tr_.tamper) tr_.tamper_detected = false;
    tr_.recovered = any_active && all_ok;
  }

  const MofnGame& game_;
  const LabeledTree& tree_;
  const TreeShape& shape_;
  Field field_;
  MofnRunOptions opts_;
  Rng rng_;
  MofnTranscript tr_;
  std::vector<GroupState> groups_;
  std::uint32_t round_ = 0;
  std::uint64_t next_id_ = 1;
  unsigned msg_bits_ = 0;
  std::unordered_map<std::uint64_t, bool> verdicts_;
};

}  // namespace

bool MofnTranscript::reconstruction_consistent() const {
  if (reconstructible != leaves_reconstructed) return false;
  if (!tamper && reconstructible != recovered) return false;
  return true;
}

MofnTranscript run_mofn_game(const MofnGame& game, const ActiveSet& active, std::uint64_t seed,
                             const MofnRunOptions& options) {
  return MofnEngine(game, active, seed, options).run();
}

// ---------------------------------------------------------------------------
// Serialization

void write_mofn_transcript(std::ostream& out, const MofnTranscript& t) {
  using ojson = nlohmann::ordered_json;
  ojson m;
  m["type"] = "manifest";
  m["mode"] = "m_of_n";
  m["seed"] = t.seed;
  m["n"] = t.params.base.n;
  m["q"] = t.params.base.field.q;
  m["s_size"] = t.params.base.s_size;
  m["secret"] = t.secret.value;
  m["beta"] = t.params.base.beta;
  m["tau"] = t.params.threshold.tau;
  m["lambda"] = t.params.threshold.lambda;
  m["k"] = t.params.threshold.k;
  m["definitive_round"] = t.definitive_round;
  m["padding"] = t.padding;
  m["groups"] = t.groups;
  m["thresholds"] = t.thresholds;
  std::vector<std::uint32_t> active;
  for (std::uint32_t j = 0; j < t.active.size(); ++j) {
    if (t.active[j]) active.push_back(j);
  }
  m["active"] = active;
  m["active_counts"] = t.active_counts;
  m["reconstructible"] = t.reconstructible;
  m["leaves_reconstructed"] = t.leaves_reconstructed;
  m["recovered"] = t.recovered;
  m["rounds"] = t.rounds;
  m["rounds_started"] = t.rounds_started;
  m["slots"] = t.slots;
  m["total_messages"] = t.total_messages;
  m["round_cap_hit"] = t.round_cap_hit;
  if (t.tamper) {
    m["tamper"] = {{"player", t.tamper->player}, {"round", t.tamper->round}};
  } else {
    m["tamper"] = nullptr;
  }
  m["tamper_round"] = t.tamper_round;
  m["tamper_detected"] = t.tamper_detected;
  ojson players = ojson::array();
  for (const MofnPlayerRecord& p : t.players) {
    players.push_back({{"active", p.active},
                       {"output", p.output.value},
                       {"cause", to_string(p.cause)},
                       {"halt_round", p.halt_round},
                       {"learned_round", p.learned_round},
                       {"messages", p.messages},
                       {"bits", p.bits}});
  }
  m["players"] = std::move(players);
  out << m.dump() << '\n';
  for (const MofnMessage& msg : t.messages) {
    ojson payload = ojson::array();
    const std::size_t used = msg.kind == MofnMessageKind::share ? 2 : 4;
    for (std::size_t i = 0; i < used; ++i) payload.push_back(msg.payload[i].value);
    ojson j = {{"type", "message"},
               {"id", msg.id},
               {"slot", msg.slot},
               {"round", msg.round},
               {"stage", to_string(msg.stage)},
               {"kind", msg.kind == MofnMessageKind::share ? "share" : "copy"},
               {"from", msg.sender},
               {"from_group", msg.sender_group},
               {"to_group", msg.receiver_group},
               {"from_node", msg.sender_node},
               {"to_node", msg.receiver_node},
               {"payload", std::move(payload)},
               {"recipients", msg.recipients},
               {"verified", msg.verified ? ojson(*msg.verified) : ojson(nullptr)},
               {"forged", msg.forged}};
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Concentration

ConcentrationReport concentration_check(const ActiveSet& active, std::uint32_t g, double lambda,
                                        std::uint64_t permutations, std::uint64_t seed) {
  const std::uint32_t n = active.size();
  if (g == 0 || g > n) throw std::invalid_argument("block size must lie in 1..n");
  if (permutations == 0) throw std::invalid_argument("need at least one permutation");
  ConcentrationReport rep;
  rep.permutations = permutations;
  rep.bound = std::exp(-lambda * lambda * g / 2.0);
  const double expected = static_cast<double>(active.count()) * g / n;
  const std::uint32_t blocks = n / g;
  Rng rng(seed);
  std::vector<std::uint32_t> perm(n);
  for (std::uint64_t i = 0; i < permutations; ++i) {
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(std::span<std::uint32_t>(perm));
    for (std::uint32_t b = 0; b < blocks; ++b) {
      std::uint32_t z = 0;
      for (std::uint32_t k = b * g; k < (b + 1) * g; ++k) z += active.active(perm[k]) ? 1 : 0;
      const bool out = std::abs(static_cast<double>(z) - expected) > lambda * g;
      ++rep.pooled;
      rep.pooled_exceed += out ? 1 : 0;
      if (b == 0) rep.exceed += out ? 1 : 0;
    }
  }
  rep.tail = static_cast<double>(rep.exceed) / static_cast<double>(permutations);
  rep.se = std::sqrt(rep.tail * (1.0 - rep.tail) / static_cast<double>(permutations));
  return rep;
}

}  // namespace ratshare
