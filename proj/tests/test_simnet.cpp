#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ratshare/simnet.hpp"

using namespace ratshare;

namespace {

GameParameters params(std::uint32_t n, double beta, std::uint64_t s_size = 10) {
  GameParameters p;
  p.n = n;
  p.s_size = s_size;
  p.secret = 7;
  p.beta = beta;
  p.field = select_field(n, s_size, Rational(2));
  return p;
}

UtilityProfile lemma2_example(std::uint32_t n) {
  return UtilityProfile::uniform(n, PlayerUtility{Rational(10), Rational(6), Rational(2)});
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("honest").honest());
  CHECK(parse_strategy("quit_and_guess:3").round == 3);
  CHECK(parse_strategy("spurious_flood:9").volume == 9);
  CHECK(to_string(parse_strategy("fake_one_child:2")) == "fake_one_child:2");
  CHECK_THROWS_AS(parse_strategy("bogus"), std::invalid_argument);
  CHECK_THROWS_AS(parse_strategy("quit_and_guess:0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_strategy("quit_and_guess:x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_strategy("forge_final_tag:2"), std::invalid_argument);
  for (StrategyKind k : deviation_kinds()) CHECK(parse_strategy(to_string(k)).kind == k);
}

TEST_CASE("honest runs end in round X with everyone holding the secret") {
  for (std::uint32_t n = 3; n <= 64; ++n) {
    const GameParameters p = params(n, 0.3);
    const int seeds = n <= 16 ? 60 : 12;
    for (int s = 0; s < seeds; ++s) {
      const DealtGame g = deal(p, derive_seed(n, 0, s));
      RunOptions o;
      o.record_messages = false;
      const Transcript t = run_game(g, honest_strategies(n), s, o);
      CAPTURE(n);
      CHECK(t.all_learned());
      CHECK(t.rounds == g.truth.definitive_round);
      CHECK_FALSE(t.deviation_detected());
      CHECK_FALSE(t.round_cap_hit);
      for (const PlayerRecord& pr : t.players) CHECK(pr.learned_round == g.truth.definitive_round);
    }
  }
}

TEST_CASE("runs are deterministic and transcripts round-trip") {
  const GameParameters p = params(8, 0.2);
  const DealtGame g = deal(p, 5);
  const auto strategies = with_deviator(8, 2, parse_strategy("fake_one_child:1"));
  const Transcript a = run_game(g, strategies, 99);
  const Transcript b = run_game(g, strategies, 99);
  const std::string ja = transcript_to_jsonl(a);
  CHECK(ja == transcript_to_jsonl(b));
  std::istringstream in(ja);
  const Transcript back = read_transcript(in);
  CHECK(transcript_to_jsonl(back) == ja);
  CHECK(back.players.size() == 8);
  CHECK(back.deviator == a.deviator);
  std::istringstream bad("{\"type\":\"manifest\"}\n");
  CHECK_THROWS_AS(read_transcript(bad), std::invalid_argument);
}

TEST_CASE("honest behaviour ignores delivery order") {
  for (std::uint32_t n : {5u, 8u, 13u}) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const DealtGame g = deal(params(n, 0.25), s);
      RunOptions shuffled;
      shuffled.shuffle_delivery = true;
      CHECK(transcript_to_jsonl(run_game(g, honest_strategies(n), s)) ==
            transcript_to_jsonl(run_game(g, honest_strategies(n), s, shuffled)));
    }
  }
}

TEST_CASE("a flood of spurious messages changes nothing for honest players") {
  for (std::uint32_t volume : {1u, 4u, 16u}) {
    for (std::uint64_t s = 0; s < 40; ++s) {
      const DealtGame g = deal(params(9, 0.25), s);
      Strategy flood;
      flood.kind = StrategyKind::spurious_flood;
      flood.volume = volume;
      const Transcript t = run_game(g, with_deviator(9, s % 9, flood), s);
      const Transcript h = run_game(g, honest_strategies(9), s);
      for (std::uint32_t j = 0; j < 9; ++j) {
        CHECK(t.players[j].output == h.players[j].output);
        CHECK(t.players[j].cause == h.players[j].cause);
      }
      CHECK(t.total_messages > h.total_messages);
    }
  }
}

TEST_CASE("quit_and_guess success matches the closed form") {
  const GameParameters p = params(8, 0.1);
  const auto strategies = with_deviator(8, 3, parse_strategy("quit_and_guess:2"));
  const DeviationReport r = estimate_deviation_payoff(p, strategies, lemma2_example(8), 6000, 17);
  // never fires when X = 1; X = 2 gives the secret; later rounds leave a guess
  const double b = 0.1;
  const double expected = b + (1 - b) * b + (1 - b) * (1 - b) / 10.0;
  CHECK(std::abs(r.success.mean - expected) < 4 * r.success.se);
  CHECK(r.cheat_threshold == doctest::Approx(0.5));
  CHECK(r.deviant_utility.mean + 3 * r.utility_gap.se < r.honest_utility.mean);
  REQUIRE(r.definitive_round);
  CHECK(std::abs(r.definitive_round->mean - b) < 4 * r.definitive_round->se);
}

TEST_CASE("single-child forgeries pass about once in q - 1") {
  const GameParameters p = params(8, 0.1);
  const auto strategies = with_deviator(8, 5, parse_strategy("fake_one_child:1"));
  const DeviationReport r = estimate_deviation_payoff(p, strategies, lemma2_example(8), 8000, 3);
  CHECK(r.forged > 4000);
  const double target = 1.0 / (p.field.q - 1);
  CHECK(std::abs(r.undetected_forgery.mean - target) < 4 * r.undetected_forgery.se);
}

TEST_CASE("honest reference report") {
  const GameParameters p = params(8, 0.1);
  const DeviationReport r = estimate_deviation_payoff(p, honest_strategies(8), lemma2_example(8), 1000, 1);
  CHECK(r.success.mean == 1.0);
  CHECK(r.deviant_utility.mean == 6.0);
  CHECK(r.attempted == 0);
  CHECK_THROWS_AS(estimate_deviation_payoff(p, honest_strategies(8), lemma2_example(8), 999, 1),
                  std::invalid_argument);
  std::vector<Strategy> two = with_deviator(8, 1, parse_strategy("quit_and_guess:1"));
  two[2] = parse_strategy("quit_and_guess:1");
  CHECK_THROWS_AS(estimate_deviation_payoff(p, two, lemma2_example(8), 1000, 1), std::invalid_argument);
}

TEST_CASE("realized utility cases") {
  Transcript t;
  t.secret = Element{3};
  t.players.resize(3);
  for (auto& pr : t.players) pr.output = Element{3};
  const UtilityProfile u = lemma2_example(3);
  CHECK(realized_utility(t, 0, u) == 6.0);
  t.players[1].output = Element{4};
  CHECK(realized_utility(t, 0, u) == 10.0);
  CHECK(realized_utility(t, 1, u) == 2.0);
}

TEST_CASE("utility profile") {
  const PlayerUtility ex{Rational(10), Rational(6), Rational(2)};
  CHECK(ex.cheat_threshold() == doctest::Approx(0.5));
  CHECK(ex.ratio() == Rational(2));
  std::vector<PlayerUtility> ps{ex, {Rational(9), Rational(3), Rational(1)}, {Rational(5), Rational(5), Rational(0)}};
  const UtilityProfile prof(ps);
  Rational direct(0);
  for (const auto& p : ps) direct = std::max(direct, (p.u_plus - p.u_minus) / (p.u - p.u_minus));
  CHECK(prof.max_ratio() == direct);
  CHECK(prof.max_ratio() == Rational(4));
  ps[2].u_minus = Rational(5);
  CHECK_THROWS_WITH_AS(UtilityProfile(ps).validate(), doctest::Contains("player 2"), std::invalid_argument);
}

TEST_CASE("costs and the round cap") {
  CHECK_THROWS_AS(measure_costs({}), std::invalid_argument);
  const GameParameters p = params(16, 0.2);
  std::vector<Transcript> ts;
  for (int s = 0; s < 50; ++s) ts.push_back(run_game(deal(p, s), honest_strategies(16), s));
  const CostSummary c = measure_costs(ts);
  CHECK(c.runs == 50);
  CHECK(c.bit_width == Field(p.field.q).bit_width());
  CHECK(c.max_messages_per_round <= 5);
  for (const Transcript& t : ts) {
    std::uint64_t bits = 0;
    for (const PlayerRecord& pr : t.players) bits = std::max(bits, pr.bits);
    CHECK(bits <= c.max_bits);
    CHECK(t.total_messages == t.messages.size());
  }

  for (std::uint64_t s = 0;; ++s) {
    const DealtGame g = deal(p, s);
    if (g.truth.definitive_round < 3) continue;
    RunOptions o;
    o.round_cap = 1;
    const Transcript t = run_game(g, honest_strategies(16), s, o);
    CHECK(t.round_cap_hit);
    for (const PlayerRecord& pr : t.players) CHECK(pr.cause == HaltCause::round_cap);
    break;
  }
}

TEST_CASE("definitive-round frequency stays under twice beta") {
  const GameParameters p = params(8, 0.1);
  DefinitiveRoundCounter c12(1, 2), c23(2, 3);
  for (std::uint64_t s = 0; s < 20000; ++s) {
    const DealtGame g = deal(p, derive_seed(4, 0, s));
    c12.add(g);
    c23.add(g);
  }
  for (const auto& c : {c12, c23}) {
    const FrequencyEstimate e = c.estimate();
    CHECK(e.samples > 0);
    CHECK(e.frequency <= 2 * 0.1 + 3 * e.se);
  }
}

TEST_CASE("every deviation is caught or pays less than honesty") {
  const GameParameters p = params(8, 0.1);
  for (const char* name : {"quit_and_guess:1", "fake_one_child:1", "fake_both_children:2", "forge_final_tag",
                           "spurious_flood:4"}) {
    CAPTURE(name);
    const auto strategies = with_deviator(8, 6, parse_strategy(name));
    const DeviationReport r = estimate_deviation_payoff(p, strategies, lemma2_example(8), 2000, 8);
    CHECK(r.deviant_utility.mean <= r.honest_utility.mean + 3 * r.utility_gap.se);
  }
}
