#include "ratshare/simnet.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace ratshare {

// ---------------------------------------------------------------------------
// Strategy names

namespace {

constexpr std::array<StrategyKind, 5> kDeviations = {
    StrategyKind::quit_and_guess, StrategyKind::fake_one_child, StrategyKind::fake_both_children,
    StrategyKind::forge_final_tag, StrategyKind::spurious_flood};

bool takes_round(StrategyKind k) {
  return k == StrategyKind::quit_and_guess || k == StrategyKind::fake_one_child ||
         k == StrategyKind::fake_both_children;
}

}  // namespace

const char* to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::honest: return "honest";
    case StrategyKind::quit_and_guess: return "quit_and_guess";
    case StrategyKind::fake_one_child: return "fake_one_child";
    case StrategyKind::fake_both_children: return "fake_both_children";
    case StrategyKind::forge_final_tag: return "forge_final_tag";
    case StrategyKind::spurious_flood: return "spurious_flood";
  }
  return "?";
}

std::string to_string(const Strategy& s) {
  std::string out = to_string(s.kind);
  if (takes_round(s.kind)) out += ":" + std::to_string(s.round);
  if (s.kind == StrategyKind::spurious_flood) out += ":" + std::to_string(s.volume);
  return out;
}

std::span<const StrategyKind> deviation_kinds() { return kDeviations; }

Strategy parse_strategy(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  Strategy s;
  bool found = name == "honest";
  for (StrategyKind k : kDeviations) {
    if (name == to_string(k)) {
      s.kind = k;
      found = true;
    }
  }
  if (!found) throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
  if (colon == std::string_view::npos) return s;

  const std::string_view arg = text.substr(colon + 1);
  std::uint32_t value = 0;
  const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), value);
  if (ec != std::errc{} || end != arg.data() + arg.size() || value == 0) {
    throw std::invalid_argument("strategy parameter must be a positive integer, got '" + std::string(arg) + "'");
  }
  if (takes_round(s.kind)) {
    s.round = value;
  } else if (s.kind == StrategyKind::spurious_flood) {
    s.volume = value;
  } else {
    throw std::invalid_argument("strategy '" + std::string(name) + "' takes no parameter");
  }
  return s;
}

std::vector<Strategy> honest_strategies(std::uint32_t n) { return std::vector<Strategy>(n); }

std::vector<Strategy> with_deviator(std::uint32_t n, std::uint32_t deviator, Strategy s) {
  if (deviator >= n) throw std::out_of_range("deviator index out of range");
  std::vector<Strategy> out(n);
  out[deviator] = s;
  return out;
}

// ---------------------------------------------------------------------------
// Behaviours

namespace {

StepResult honest_step(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox) {
  return stage == Stage::up ? p.up_stage(depth, inbox) : p.down_stage(depth, inbox);
}

class Behavior {
 public:
  virtual ~Behavior() = default;
  virtual bool rushing() const { return true; }
  virtual StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox,
                         Rng& rng) = 0;

  bool fired() const { return round_ != 0; }
  std::uint32_t fired_round() const { return round_; }

 protected:
  void fire(const Player& p) {
    if (round_ == 0) round_ = p.view().round;
  }

 private:
  std::uint32_t round_ = 0;
};

class Honest final : public Behavior {
 public:
  bool rushing() const override { return false; }
  StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox, Rng&) override {
    return honest_step(p, stage, depth, inbox);
  }
};

class QuitAndGuess final : public Behavior {
 public:
  explicit QuitAndGuess(std::uint32_t round) : round_(round) {}
  StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox, Rng&) override {
    StepResult r = honest_step(p, stage, depth, inbox);
    if (stage == Stage::down && p.view().round == round_ && p.learned_round() == round_ && !fired()) {
      fire(p);
      r.out.clear();
      p.halt(HaltCause::deviation);
    }
    return r;
  }

 private:
  std::uint32_t round_;
};

class FakeChildren final : public Behavior {
 public:
  FakeChildren(std::uint32_t round, bool both) : round_(round), both_(both) {}
  StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox,
                 Rng& rng) override {
    StepResult r = honest_step(p, stage, depth, inbox);
    if (fired() || stage != Stage::down || p.view().round < round_) return r;
    for (Message& msg : r.out) {
      if (msg.stage != Stage::down || msg.receiver == p.id()) continue;
      msg.payload[0] = p.field().random_other_than(msg.payload[0], rng);
      msg.payload[2] = p.field().random_other_than(msg.payload[2], rng);
      msg.forged = true;
      fire(p);
      if (!both_) break;
    }
    return r;
  }

 private:
  std::uint32_t round_;
  bool both_;
};

class ForgeFinalTag final : public Behavior {
 public:
  StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox,
                 Rng& rng) override {
    const RoundView view = p.view();
    const TreeShape& shape = p.tree().shape();
    const bool target = stage == Stage::down && view.block != nullptr && view.block->partial() &&
                        view.internal != kNoNode && shape.node(view.internal).depth == depth;
    StepResult r = honest_step(p, stage, depth, inbox);
    if (!target || fired() || !p.halted() || p.halt_cause() != HaltCause::final_block) return r;

    const TreeNode& node = shape.node(view.internal);
    const std::size_t child_nodes[2] = {node.left, node.right};
    const std::uint32_t child_players[2] = {view.left, view.right};
    for (int side = 0; side < 2; ++side) {
      if (!sends_down_to(p.tree(), view.label, side) || child_players[side] == p.id()) continue;
      Message msg;
      msg.round = view.round;
      msg.stage = Stage::down;
      msg.sender = p.id();
      msg.receiver = child_players[side];
      msg.sender_node = view.internal;
      msg.receiver_node = child_nodes[side];
      msg.payload = {p.guess(), p.mask(), p.field().random(rng), p.field().random(rng)};
      msg.forged = true;
      r.out.push_back(msg);
      fire(p);
    }
    return r;
  }
};

class SpuriousFlood final : public Behavior {
 public:
  explicit SpuriousFlood(std::uint32_t volume) : volume_(volume) {}
  StepResult act(Player& p, Stage stage, std::uint32_t depth, std::span<const Message> inbox,
                 Rng& rng) override {
    const RoundView view = p.view();
    StepResult r = honest_step(p, stage, depth, inbox);
    const std::size_t nodes = p.tree().shape().size();
    const std::uint32_t n = p.tree().n_leaves();
    for (std::uint32_t i = 0; i < volume_; ++i) {
      // A sender node this player does not hold can never match an edge
      // some receiver is waiting on.
      std::size_t from = rng.below(nodes);
      while (from == view.leaf || from == view.internal) from = rng.below(nodes);
      Message msg;
      msg.round = view.round + static_cast<std::uint32_t>(rng.below(2));
      msg.stage = stage;
      msg.sender = p.id();
      msg.receiver = static_cast<std::uint32_t>(rng.below(n));
      msg.sender_node = from;
      msg.receiver_node = rng.below(nodes);
      for (Element& e : msg.payload) e = p.field().random(rng);
      msg.forged = true;
      r.out.push_back(msg);
      fire(p);
    }
    return r;
  }

 private:
  std::uint32_t volume_;
};

std::unique_ptr<Behavior> make_behavior(const Strategy& s) {
  switch (s.kind) {
    case StrategyKind::honest: return std::make_unique<Honest>();
    case StrategyKind::quit_and_guess: return std::make_unique<QuitAndGuess>(s.round);
    case StrategyKind::fake_one_child: return std::make_unique<FakeChildren>(s.round, false);
    case StrategyKind::fake_both_children: return std::make_unique<FakeChildren>(s.round, true);
    case StrategyKind::forge_final_tag: return std::make_unique<ForgeFinalTag>();
    case StrategyKind::spurious_flood: return std::make_unique<SpuriousFlood>(s.volume);
  }
  throw std::logic_error("unhandled strategy");
}

bool is_fault(HaltCause c) { return c == HaltCause::missing_message || c == HaltCause::bad_message; }

}  // namespace

// ---------------------------------------------------------------------------
// Transcript queries

bool Transcript::all_learned() const {
  return std::all_of(players.begin(), players.end(), [&](const PlayerRecord& p) { return p.output == secret; });
}

bool Transcript::deviation_detected() const {
  for (std::size_t j = 0; j < players.size(); ++j) {
    const PlayerRecord& p = players[j];
    if (p.deviator) continue;
    if (is_fault(p.cause) && p.learned_round < definitive_round) return true;
    if (p.cause == HaltCause::bad_message) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Simulation

Transcript run_game(const DealtGame& game, std::span<const Strategy> strategies, std::uint64_t seed,
                    const RunOptions& options) {
  const std::uint32_t n = game.params.n;
  if (strategies.size() != n) throw std::invalid_argument("need one strategy per player");

  Transcript tr;
  tr.seed = seed;
  tr.params = game.params;
  tr.definitive_round = game.truth.definitive_round;
  tr.padding = game.truth.padding;
  tr.secret = game.truth.secret;
  tr.strategies.assign(strategies.begin(), strategies.end());
  for (std::uint32_t j = 0; j < n; ++j) {
    if (!strategies[j].honest()) {
      if (tr.deviator) throw std::invalid_argument("at most one deviating player per run");
      tr.deviator = j;
    }
  }

  Rng rng(seed);
  std::vector<Player> players;
  std::vector<std::unique_ptr<Behavior>> behaviors;
  players.reserve(n);
  for (std::uint32_t j = 0; j < n; ++j) {
    players.emplace_back(j, game.tree, game.field, game.inputs[j]);
    behaviors.push_back(make_behavior(strategies[j]));
  }
  tr.players.resize(n);
  // Strategies whose forged messages travel on real tree edges.
  const bool forges_edges = tr.deviator && strategies[*tr.deviator].kind != StrategyKind::spurious_flood;

  const std::uint32_t cap =
      options.round_cap ? options.round_cap : static_cast<std::uint32_t>(std::ceil(100.0 / game.params.beta));
  const std::uint32_t depth_max = game.tree->shape().max_depth();
  const unsigned msg_bits = 4 * game.field.bit_width();

  std::vector<std::vector<Message>> mailbox(n);
  std::vector<std::optional<bool>> verdict;  // by message id - 1
  std::vector<Message> scratch;
  std::vector<std::uint32_t> honest_actors, rushing_actors;
  std::uint64_t next_id = 1;

  auto alive = [&] {
    return std::any_of(players.begin(), players.end(), [](const Player& p) { return !p.halted(); });
  };

  std::uint32_t t = 1;
  for (;; ++t) {
    if (t > cap) {
      if (alive()) {
        tr.round_cap_hit = true;
        for (Player& p : players) p.halt(HaltCause::round_cap);
      }
      break;
    }
    bool any = false;
    for (Player& p : players) any = p.begin_round(t) || any;
    if (!any) break;
    tr.rounds_started = t;

    for (Stage stage : {Stage::up, Stage::down}) {
      for (auto& box : mailbox) box.clear();
      for (std::uint32_t k = 0; k <= depth_max; ++k) {
        const std::uint32_t depth = stage == Stage::up ? depth_max - k : k;
        honest_actors.clear();
        rushing_actors.clear();
        for (std::uint32_t j = 0; j < n; ++j) {
          if (!players[j].acts_at(depth)) continue;
          (behaviors[j]->rushing() ? rushing_actors : honest_actors).push_back(j);
        }
        if (honest_actors.empty() && rushing_actors.empty()) continue;
        const std::uint32_t slot = static_cast<std::uint32_t>(++tr.slots);

        std::vector<Message> emitted;
        auto step = [&](std::uint32_t j, std::span<const Message> inbox) {
          std::span<const Message> view = inbox;
          if (options.shuffle_delivery && inbox.size() > 1) {
            scratch.assign(inbox.begin(), inbox.end());
            rng.shuffle(std::span<Message>(scratch));
            view = scratch;
          }
          StepResult r = behaviors[j]->act(players[j], stage, depth, view, rng);
          for (const Verdict& v : r.verdicts) {
            if (v.message_id >= 1 && v.message_id <= verdict.size()) verdict[v.message_id - 1] = v.accepted;
          }
          for (Message& m : r.out) {
            m.id = next_id++;
            m.sender = j;
            verdict.emplace_back();
            emitted.push_back(m);
          }
        };

        for (std::uint32_t j : honest_actors) step(j, mailbox[j]);
        const std::size_t honest_count = emitted.size();
        for (std::uint32_t j : rushing_actors) {
          // Rushing: this slot's honest traffic to j is visible before j speaks.
          std::vector<Message> inbox = mailbox[j];
          for (std::size_t i = 0; i < honest_count; ++i) {
            if (emitted[i].receiver == j) inbox.push_back(emitted[i]);
          }
          step(j, inbox);
        }

        for (const Message& m : emitted) {
          if (m.receiver >= n) continue;
          mailbox[m.receiver].push_back(m);
          PlayerRecord& sender = tr.players[m.sender];
          ++sender.messages;
          sender.bits += msg_bits;
          ++tr.total_messages;
          if (options.record_messages) tr.messages.push_back({m, slot, std::nullopt});
          if (m.forged && forges_edges) {
            tr.forgeries.push_back({m.id, m.round, m.sender, m.receiver, std::nullopt});
          }
        }
      }
    }
    if (!alive()) break;
  }

  for (MessageRecord& rec : tr.messages) rec.verified = verdict[rec.msg.id - 1];
  for (ForgeryRecord& f : tr.forgeries) f.accepted = verdict[f.message_id - 1];

  for (std::uint32_t j = 0; j < n; ++j) {
    const Player& p = players[j];
    PlayerRecord& rec = tr.players[j];
    rec.output = p.output();
    rec.cause = p.halt_cause();
    rec.halt_round = p.halt_round();
    rec.halt_stage = p.halt_stage();
    rec.learned_round = p.learned_round();
    rec.input_length = static_cast<std::uint32_t>(game.inputs[j].blocks.size());
    rec.short_player = game.truth.short_player[j];
    rec.deviator = tr.deviator && *tr.deviator == j;
    tr.rounds = std::max(tr.rounds, rec.learned_round);
  }
  if (tr.deviator) tr.deviation_round = behaviors[*tr.deviator]->fired_round();
  return tr;
}

// ---------------------------------------------------------------------------
// Statistics

void MeanAccumulator::add(double x) {
  ++count_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(count_);
  m2_ += d * (x - mean_);
}

Estimate MeanAccumulator::estimate() const {
  Estimate e;
  e.samples = count_;
  e.mean = mean_;
  if (count_ > 1) e.se = std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_));
  return e;
}

void CostAccumulator::add(const Transcript& t) {
  if (s_.runs == 0) {
    s_.n = t.params.n;
    s_.bit_width = Field(t.params.field.q).bit_width();
  }
  ++s_.runs;
  std::uint64_t run_max = 0;
  double total = 0;
  for (const PlayerRecord& p : t.players) {
    run_max = std::max(run_max, p.bits);
    total += static_cast<double>(p.bits);
  }
  s_.max_bits = std::max(s_.max_bits, run_max);
  max_bits_.add(static_cast<double>(run_max));
  mean_bits_.add(t.players.empty() ? 0.0 : total / static_cast<double>(t.players.size()));
  rounds_.add(t.rounds);
  latency_.add(static_cast<double>(t.slots));

  if (!t.messages.empty()) {
    std::vector<std::uint32_t> per(t.players.size() * (t.rounds_started + 2), 0);
    for (const MessageRecord& m : t.messages) {
      const std::size_t r = std::min<std::size_t>(m.msg.round, t.rounds_started + 1);
      const std::uint32_t c = ++per[r * t.players.size() + m.msg.sender];
      s_.max_messages_per_round = std::max(s_.max_messages_per_round, c);
    }
  }
}

CostSummary CostAccumulator::summary() const {
  CostSummary out = s_;
  out.max_player_bits = max_bits_.estimate();
  out.mean_player_bits = mean_bits_.estimate();
  out.rounds = rounds_.estimate();
  out.latency = latency_.estimate();
  return out;
}

CostSummary measure_costs(std::span<const Transcript> transcripts) {
  if (transcripts.empty()) throw std::invalid_argument("measure_costs needs at least one transcript");
  CostAccumulator acc;
  for (const Transcript& t : transcripts) acc.add(t);
  return acc.summary();
}

double realized_utility(const Transcript& t, std::uint32_t player, const UtilityProfile& utilities) {
  const PlayerUtility& u = utilities.of(player);
  const bool learned = t.players.at(player).output == t.secret;
  if (!learned) return boost::rational_cast<double>(u.u_minus);
  for (std::size_t i = 0; i < t.players.size(); ++i) {
    if (i != player && t.players[i].output != t.secret) return boost::rational_cast<double>(u.u_plus);
  }
  return boost::rational_cast<double>(u.u);
}

DeviationTrial run_trial(const GameParameters& params, std::span<const Strategy> strategies, std::uint64_t seed,
                         std::uint64_t index, const RunOptions& options) {
  const DealtGame game = deal(params, derive_seed(seed, 0, index));
  const std::uint64_t run_seed = derive_seed(seed, 1, index);
  DeviationTrial trial;
  trial.definitive_round = game.truth.definitive_round;
  trial.deviant = run_game(game, strategies, run_seed, options);
  if (trial.deviant.deviator) trial.baseline = run_game(game, honest_strategies(params.n), run_seed, options);
  return trial;
}

DeviationAccumulator::DeviationAccumulator(std::span<const Strategy> strategies, const UtilityProfile& utilities)
    : utilities_(utilities) {
  if (utilities.size() != strategies.size()) throw std::invalid_argument("need one utility triple per player");
  bool found = false;
  for (std::uint32_t j = 0; j < strategies.size(); ++j) {
    if (strategies[j].honest()) continue;
    if (found) throw std::invalid_argument("deviation payoff is defined for a single deviator");
    found = true;
    rep_.deviator = j;
    rep_.strategy = strategies[j];
  }
  const PlayerUtility& u = utilities.of(rep_.deviator);
  rep_.cheat_threshold = u.cheat_threshold();
  u_plus_ = boost::rational_cast<double>(u.u_plus);
  u_minus_ = boost::rational_cast<double>(u.u_minus);
}

void DeviationAccumulator::add(const DeviationTrial& trial) {
  const Transcript& dev = trial.deviant;
  const Transcript& base = trial.baseline ? *trial.baseline : dev;
  const std::uint32_t j = rep_.deviator;
  ++rep_.trials;

  const bool learned = dev.players.at(j).output == dev.secret;
  const bool ok = learned || !dev.deviation_detected();
  success_.add(ok ? 1.0 : 0.0);
  bound_.add(ok ? u_plus_ : u_minus_);
  const double ud = realized_utility(dev, j, utilities_);
  const double uh = realized_utility(base, j, utilities_);
  deviant_.add(ud);
  baseline_.add(uh);
  gap_.add(ud - uh);
  if (dev.deviation_round != 0) {
    ++rep_.attempted;
    detection_.add(dev.deviation_detected() ? 1.0 : 0.0);
  }
  for (const ForgeryRecord& f : dev.forgeries) {
    ++rep_.forged;
    const bool accepted = f.accepted.value_or(false);
    rep_.forged_accepted += accepted ? 1 : 0;
    undetected_.add(accepted ? 1.0 : 0.0);
  }
  if (takes_round(rep_.strategy.kind) && trial.definitive_round >= rep_.strategy.round) {
    definitive_.add(trial.definitive_round == rep_.strategy.round ? 1.0 : 0.0);
  }
}

DeviationReport DeviationAccumulator::report() const {
  DeviationReport rep = rep_;
  rep.success = success_.estimate();
  rep.bound_utility = bound_.estimate();
  rep.deviant_utility = deviant_.estimate();
  rep.honest_utility = baseline_.estimate();
  rep.utility_gap = gap_.estimate();
  rep.detection = detection_.estimate();
  rep.undetected_forgery = undetected_.estimate();
  if (takes_round(rep.strategy.kind)) rep.definitive_round = definitive_.estimate();
  return rep;
}

DeviationReport estimate_deviation_payoff(const GameParameters& params, std::span<const Strategy> strategies,
                                          const UtilityProfile& utilities, std::uint64_t trials,
                                          std::uint64_t seed) {
  params.validate();
  if (strategies.size() != params.n) throw std::invalid_argument("need one strategy per player");
  if (trials < 1000) throw std::invalid_argument("deviation estimates need at least 1000 trials");
  DeviationAccumulator acc(strategies, utilities);
  RunOptions opts;
  opts.record_messages = false;
  for (std::uint64_t i = 0; i < trials; ++i) acc.add(run_trial(params, strategies, seed, i, opts));
  return acc.report();
}

void DefinitiveRoundCounter::add(const DealtGame& game) {
  ++deals_;
  const GroundTruth& truth = game.truth;
  if (truth.definitive_round < t_) return;
  double h = 0, m = 0;
  for (std::uint32_t j = 0; j < game.params.n; ++j) {
    if (game.inputs[j].blocks.size() != k_) continue;
    if (truth.rounds.at(t_ - 1).label_of[j] % 2 != 0) continue;
    m += 1;
    if (truth.definitive_round == t_) h += 1;
  }
  samples_ += static_cast<std::uint64_t>(m);
  hits_ += static_cast<std::uint64_t>(h);
  sum_h2_ += h * h;
  sum_m2_ += m * m;
  sum_hm_ += h * m;
}

FrequencyEstimate DefinitiveRoundCounter::estimate() const {
  FrequencyEstimate e;
  e.deals = deals_;
  e.samples = samples_;
  e.hits = hits_;
  if (samples_ == 0) return e;
  const double M = static_cast<double>(samples_);
  const double p = static_cast<double>(hits_) / M;
  e.frequency = p;
  // Ratio estimator with deal-level clusters.
  const double resid = sum_h2_ - 2 * p * sum_hm_ + p * p * sum_m2_;
  e.se = std::sqrt(std::max(0.0, resid)) / M;
  return e;
}

}  // namespace ratshare
