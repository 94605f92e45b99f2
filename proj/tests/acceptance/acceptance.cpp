// Acceptance sweep: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ratshare/auth.hpp"
#include "ratshare/comm_tree.hpp"
#include "ratshare/iterated_shares.hpp"
#include "ratshare/simnet.hpp"
#include "ratshare/threshold_groups.hpp"

using namespace ratshare;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
  bool passed = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GameParameters game_params(std::uint32_t n, double beta) {
  GameParameters p;
  p.n = n;
  p.s_size = 10;
  p.secret = 7;
  p.beta = beta;
  p.field = select_field(n, p.s_size, Rational(2));
  return p;
}

UtilityProfile example_utilities(std::uint32_t n) {
  return UtilityProfile::uniform(n, PlayerUtility{Rational(10), Rational(6), Rational(2)});
}

std::vector<std::uint64_t> odd_primes_up_to(std::uint64_t limit) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t q = 3; q <= limit; ++q) {
    if (is_prime(q)) out.push_back(q);
  }
  return out;
}

Outcome honest_correctness() {
  Outcome o;
  std::string counts;
  for (std::uint32_t n : {3u, 4u, 5u, 8u, 16u, 64u}) {
    const GameParameters p = game_params(n, 0.25);
    const auto strategies = honest_strategies(n);
    RunOptions opt;
    opt.record_messages = false;
    std::uint64_t good = 0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      const DealtGame g = deal(p, derive_seed(kSeed + n, 0, i));
      const Transcript t = run_game(g, strategies, derive_seed(kSeed + n, 1, i), opt);
      bool all = !t.round_cap_hit;
      for (const PlayerRecord& pr : t.players) all = all && pr.output == g.truth.secret;
      good += all;
    }
    o.passed = o.passed && good == trials;
    counts += fmt(" n=%u:%llu/%d", n, static_cast<unsigned long long>(good), trials);
  }
  o.detail = "beta=0.25, all players output the secret;" + counts;
  return o;
}

Outcome iterated_secrecy() {
  const Field f(5);
  const TreeShape shape = TreeShape::complete(4);
  std::uint64_t checked = 0, uniform = 0;
  for (unsigned mask = 0; mask < 15; ++mask) {
    std::vector<std::size_t> revealed;
    for (std::size_t i = 0; i < 4; ++i) {
      if (mask >> i & 1) revealed.push_back(i);
    }
    std::uint64_t tuples = 1;
    for (std::size_t i = 0; i < revealed.size(); ++i) tuples *= 5;
    for (std::uint64_t code = 0; code < tuples; ++code) {
      std::vector<Element> values;
      for (std::uint64_t c = code, i = 0; i < revealed.size(); ++i, c /= 5) values.push_back(Element{c % 5});
      ++checked;
      uniform += secrecy_oracle(shape, f, revealed, values).uniform();
    }
  }
  // Control: the full reveal pins the root.
  const std::vector<std::size_t> all{0, 1, 2, 3};
  const std::vector<Element> leaves{Element{1}, Element{4}, Element{0}, Element{2}};
  const bool control =
      secrecy_oracle(shape, f, all, leaves).point_mass_at(reconstruct_root(shape, f, std::span<const Element>(leaves)));
  return {uniform == checked && control,
          fmt("F_5, 4 leaves: %llu/%llu (subset, reveal) pairs exactly uniform; full reveal is a point mass: %s",
              static_cast<unsigned long long>(uniform), static_cast<unsigned long long>(checked),
              control ? "yes" : "no")};
}

Outcome authentication() {
  bool bijection = true, forgery = true;
  std::uint64_t fields = 0;
  for (std::uint64_t q : odd_primes_up_to(101)) {
    const Field f(q);
    ++fields;
    std::vector<std::uint8_t> seen(q);
    for (std::uint64_t b = 1; b < q && bijection; ++b) {
      for (std::uint64_t c = 0; c < q && bijection; ++c) {
        std::fill(seen.begin(), seen.end(), 0);
        for (std::uint64_t y = 0; y < q; ++y) {
          std::uint64_t passing = 0, which = 0;
          for (std::uint64_t a = 0; a < q; ++a) {
            if (verify(f, Element{y}, AuthTag{Element{a}}, VerificationVector{Element{b}, Element{c}})) {
              ++passing;
              which = a;
            }
          }
          if (passing != 1 || seen[which]++) bijection = false;
        }
      }
    }
    // With the map a bijection, each key (b, c) accepts exactly one tag per
    // message, so tallying those over b counts the keys a forgery passes.
    std::vector<std::uint32_t> tally(q * q);
    for (std::uint64_t y = 0; y < q && forgery; ++y) {
      for (std::uint64_t a = 0; a < q && forgery; ++a) {
        std::fill(tally.begin(), tally.end(), 0);
        for (std::uint64_t b = 1; b < q; ++b) {
          const AuthData d = create_auth(f, Element{y}, Element{a}, Element{b});
          for (std::uint64_t y2 = 0; y2 < q; ++y2) {
            const Element a2 = f.mul(f.sub(d.check.c, Element{y2}), f.inv(Element{b}));
            if (!verify(f, Element{y2}, AuthTag{a2}, d.check)) forgery = false;
            ++tally[y2 * q + a2.value];
          }
        }
        for (std::uint64_t y2 = 0; y2 < q; ++y2) {
          for (std::uint64_t a2 = 0; a2 < q; ++a2) {
            const std::uint32_t expect = y2 == y ? (a2 == a ? q - 1 : 0) : (a2 == a ? 0 : 1);
            if (tally[y2 * q + a2] != expect) forgery = false;
          }
        }
      }
    }
  }
  return {bijection && forgery,
          fmt("%llu odd primes q<=101: consistent-tag map bijective: %s; forgery with a'!=a passes exactly one b "
              "(prob 1/(q-1)) and a'=a passes none: %s",
              static_cast<unsigned long long>(fields), bijection ? "yes" : "no", forgery ? "yes" : "no")};
}

bool labeling_holds(std::uint32_t n) {
  const LabeledTree t = LabeledTree::build(n);
  const TreeShape& s = t.shape();
  if (s.leaf_count() != n) return false;
  std::uint32_t deepest = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const TreeNode& nd = s.node(i);
    if (!nd.is_leaf() && nd.right == kNoNode) return false;
    deepest = std::max(deepest, nd.depth);
  }
  bool shallow = false;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const TreeNode& nd = s.node(s.frontier()[pos]);
    if (!nd.is_leaf() || nd.depth + 1 < deepest) return false;
    if (nd.depth < deepest) shallow = true;
    if (nd.depth == deepest && shallow) return false;
    const auto ls = t.labels_at(s.frontier()[pos]);
    if (ls.size() != 1 || ls[0] != pos + 1) return false;
  }
  auto has_odd = [&](std::size_t v) {
    for (std::uint32_t l : t.labels_at(v)) {
      if (l % 2) return true;
    }
    return false;
  };
  std::set<std::uint32_t> even;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.node(i).is_leaf()) continue;
    bool is_even = false;
    for (std::uint32_t l : t.labels_at(i)) {
      if (l % 2 == 0) {
        even.insert(l);
        is_even = true;
      }
    }
    if (!is_even) continue;
    for (std::size_t v = s.node(i).parent; v != kNoNode; v = s.node(v).parent) {
      if (has_odd(v)) return false;
    }
  }
  for (std::uint32_t e = 2; e <= n; e += 2) {
    if (!even.count(e)) return false;
  }
  for (std::size_t pos = 0; pos < n; ++pos) {
    std::set<std::uint32_t> odd;
    std::vector<std::size_t> at;
    std::size_t depth = 0;
    for (std::size_t v = s.frontier()[pos]; v != kNoNode; v = s.node(v).parent, ++depth) {
      for (std::uint32_t l : t.labels_at(v)) {
        if (l % 2) {
          odd.insert(l);
          at.push_back(depth);
        }
      }
    }
    if (odd.size() != 1 || at.size() > 2) return false;
    if (at.size() == 2 && at[1] != at[0] + 1) return false;
  }
  return true;
}

Outcome tree_labeling() {
  std::uint32_t good = 0, bad_first = 0;
  for (std::uint32_t n = 3; n <= 512; ++n) {
    if (labeling_holds(n)) {
      ++good;
    } else if (!bad_first) {
      bad_first = n;
    }
  }
  return {good == 510, fmt("completeness, even labels placed, no odd above even, one odd label per path: "
                           "%u/510 trees%s",
                           good, bad_first ? fmt(" (first failure n=%u)", bad_first).c_str() : "")};
}

Outcome round_lengths() {
  const double beta = 0.06;
  const GameParameters p = game_params(4, beta);
  const auto strategies = honest_strategies(4);
  RunOptions opt;
  opt.record_messages = false;
  MeanAccumulator rounds;
  for (int i = 0; i < 100000; ++i) {
    const DealtGame g = deal(p, derive_seed(kSeed, 0, i));
    rounds.add(run_game(g, strategies, derive_seed(kSeed, 1, i), opt).rounds);
  }
  const Estimate e = rounds.estimate();
  const double target = 1 / beta, rel = std::abs(e.mean - target) / target;
  return {rel <= 0.05, fmt("beta=0.06, n=4, 1e5 runs: mean rounds %.4f (se %.4f) vs 1/beta %.4f, relative error "
                           "%.4f <= 0.05",
                           e.mean, e.se, target, rel)};
}

Outcome scalability() {
  std::vector<double> normalized;
  std::string parts;
  for (std::uint32_t n : {16u, 64u, 256u, 1024u}) {
    const GameParameters p = game_params(n, 0.25);
    const auto strategies = honest_strategies(n);
    RunOptions opt;
    opt.record_messages = false;
    CostAccumulator costs;
    for (int i = 0; i < 500; ++i) {
      const DealtGame g = deal(p, derive_seed(kSeed + n, 0, i));
      costs.add(run_game(g, strategies, derive_seed(kSeed + n, 1, i), opt));
    }
    const CostSummary c = costs.summary();
    normalized.push_back(c.max_player_bits.mean / std::log2(n));
    parts += fmt(" n=%u:%.1f", n, normalized.back());
  }
  const auto [lo, hi] = std::minmax_element(normalized.begin(), normalized.end());
  const double ratio = *hi / *lo;
  return {ratio <= 2.0, fmt("beta=0.25, 500 runs each, mean per-run max player bits / log2 n:%s; largest/smallest "
                            "%.3f <= 2",
                            parts.c_str(), ratio)};
}

Outcome forgery_detection() {
  const GameParameters p = game_params(8, 0.1);
  const auto strategies = with_deviator(8, 3, parse_strategy("fake_one_child:1"));
  const DeviationReport r = estimate_deviation_payoff(p, strategies, example_utilities(8), 100000, kSeed);
  const double target = 1.0 / (p.field.q - 1);
  const double z = std::abs(r.undetected_forgery.mean - target) / r.undetected_forgery.se;
  return {z <= 3.0, fmt("n=8, q=%llu, 1e5 runs, %llu forged values: undetected %.5f (se %.5f) vs 1/(q-1) %.5f, "
                        "|z| %.2f <= 3",
                        static_cast<unsigned long long>(p.field.q), static_cast<unsigned long long>(r.forged),
                        r.undetected_forgery.mean, r.undetected_forgery.se, target, z)};
}

Outcome definitive_round_bound() {
  const double beta = 0.1;
  const GameParameters p = game_params(8, beta);
  std::vector<DefinitiveRoundCounter> counters;
  for (std::uint32_t t = 1; t <= 3; ++t) {
    counters.emplace_back(t, t + 1);
    counters.emplace_back(t, t + 2);
  }
  for (int i = 0; i < 100000; ++i) {
    const DealtGame g = deal(p, derive_seed(kSeed, 3, i));
    for (DefinitiveRoundCounter& c : counters) c.add(g);
  }
  bool ok = true;
  std::string parts;
  for (const DefinitiveRoundCounter& c : counters) {
    const FrequencyEstimate e = c.estimate();
    ok = ok && e.samples > 0 && e.frequency <= 2 * beta + 3 * e.se;
    parts += fmt(" (t=%u,k=%u):%.4f+-%.4f", c.t(), c.k(), e.frequency, e.se);
  }
  return {ok, fmt("beta=0.1, n=8, 1e5 deals, freq(X=t) <= 2beta+3se=%.2f+3se:%s", 2 * beta, parts.c_str())};
}

Outcome deviation_payoffs() {
  const GameParameters p = game_params(8, 0.1);
  bool ok = true;
  std::string parts;
  for (const char* name : {"quit_and_guess:1", "fake_one_child:1", "fake_both_children:1", "forge_final_tag",
                           "spurious_flood:4"}) {
    const auto strategies = with_deviator(8, 5, parse_strategy(name));
    const DeviationReport r = estimate_deviation_payoff(p, strategies, example_utilities(8), 10000, kSeed);
    const bool pass = r.deviant_utility.mean <= r.honest_utility.mean + 3 * r.utility_gap.se;
    ok = ok && pass;
    parts += fmt(" %s:%.4f<=%.4f+3*%.4f", name, r.deviant_utility.mean, r.honest_utility.mean, r.utility_gap.se);
  }
  return {ok, fmt("n=8, |S|=10, (U+,U,U-)=(10,6,2), beta=0.1, 1e4 paired trials each, deviant <= honest + 3 se "
                  "of the paired gap:%s",
                  parts.c_str())};
}

Outcome m_of_n_thresholds() {
  MofnParameters p;
  p.base = game_params(1024, 0.1);
  p.threshold = ThresholdParams{0.5, 0.5, 1.0};
  const std::uint32_t g = p.threshold.group_size(1024), groups = p.threshold.group_count(1024);
  std::uint64_t recovered_hi = 0, recovered_lo = 0, disagreements = 0;
  const int runs = 1000;
  for (double fraction : {0.9, 0.2}) {
    for (int i = 0; i < runs; ++i) {
      const std::uint64_t stream = fraction > 0.5 ? 10 : 20;
      const MofnGame game = deal_mofn(p, derive_seed(kSeed + stream, 0, i));
      Rng pick(derive_seed(kSeed + stream, 2, i));
      const ActiveSet active = ActiveSet::random(1024, fraction, pick);
      const MofnTranscript t = run_mofn_game(game, active, derive_seed(kSeed + stream, 1, i));
      (fraction > 0.5 ? recovered_hi : recovered_lo) += t.recovered;
      disagreements += !t.reconstruction_consistent() || t.reconstructible != t.recovered;
    }
  }
  bool concentrated = true;
  std::string tails;
  for (double fraction : {0.9, 0.2}) {
    Rng pick(derive_seed(kSeed, 4, static_cast<std::uint64_t>(fraction * 10)));
    const ActiveSet active = ActiveSet::random(1024, fraction, pick);
    const ConcentrationReport r = concentration_check(active, g, p.threshold.lambda, 10000, kSeed);
    concentrated = concentrated && r.tail <= r.bound + 3 * r.se;
    tails += fmt(" %.1f:%.4g<=%.3g+3*%.3g", fraction, r.tail, r.bound, r.se);
  }
  const double hi = double(recovered_hi) / runs, lo = double(recovered_lo) / runs;
  return {hi >= 0.99 && recovered_lo == 0 && disagreements == 0 && concentrated,
          fmt("n=1024, tau=0.5, lambda=0.5, k=1, g=%u, Q=%u: fraction 0.9 recovery %.3f >= 0.99; fraction 0.2 "
              "recovery %.3f == 0; group-threshold predicate disagreements %llu == 0; block tail over 1e4 "
              "permutations%s",
              g, groups, hi, lo, static_cast<unsigned long long>(disagreements), tails.c_str())};
}

Outcome shamir_layer() {
  std::uint64_t configs = 0, failures = 0;
  for (std::uint64_t q : odd_primes_up_to(13)) {
    const Field f(q);
    for (std::uint32_t g = 1; g <= 6 && g < q; ++g) {
      for (std::uint32_t th = 1; th <= g; ++th) {
        ++configs;
        // every threshold-sized subset of share indices
        std::vector<std::vector<std::uint32_t>> full, below;
        for (unsigned mask = 0; mask < (1u << g); ++mask) {
          std::vector<std::uint32_t> xs;
          for (std::uint32_t i = 0; i < g; ++i) {
            if (mask >> i & 1) xs.push_back(i);
          }
          if (xs.size() == th) full.push_back(xs);
          if (xs.size() + 1 == th) below.push_back(xs);
        }
        std::uint64_t polys = 1;
        for (std::uint32_t i = 1; i < th; ++i) polys *= q;
        for (std::uint64_t y = 0; y < q; ++y) {
          std::vector<std::vector<std::uint32_t>> tally(below.size(), std::vector<std::uint32_t>(polys));
          std::vector<Element> coeffs(th - 1);
          std::vector<ShamirShare> subset;
          for (std::uint64_t code = 0; code < polys; ++code) {
            for (std::uint64_t c = code, i = 0; i + 1 < th; ++i, c /= q) coeffs[i] = Element{c % q};
            const auto shares = shamir_split(f, Element{y}, th, g, coeffs);
            for (const auto& xs : full) {
              subset.clear();
              for (std::uint32_t i : xs) subset.push_back(shares[i]);
              if (shamir_reconstruct(f, subset, th) != Element{y}) ++failures;
            }
            for (std::size_t b = 0; b < below.size(); ++b) {
              std::uint64_t index = 0;
              for (std::uint32_t i : below[b]) index = index * q + shares[i].value.value;
              ++tally[b][index];
            }
          }
          for (const auto& counts : tally) {
            for (std::uint32_t c : counts) failures += c != 1;
          }
        }
      }
    }
  }
  return {failures == 0, fmt("odd q<=13, g<=min(6,q-1), every threshold: %llu configurations, round trip from "
                             "every threshold subset and exact uniformity of every (threshold-1)-subset; %llu "
                             "violations",
                             static_cast<unsigned long long>(configs), static_cast<unsigned long long>(failures))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"honest correctness", honest_correctness},
      {"iterated-share secrecy", iterated_secrecy},
      {"authentication bounds", authentication},
      {"tree labeling", tree_labeling},
      {"round-length distribution", round_lengths},
      {"scalability", scalability},
      {"forgery detection", forgery_detection},
      {"definitive-round bound", definitive_round_bound},
      {"unilateral deviation payoffs", deviation_payoffs},
      {"m-of-n thresholds", m_of_n_thresholds},
      {"shamir layer", shamir_layer},
  };
  int failed = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s [%.1fs]: %s\n", o.passed ? "PASS" : "FAIL", index, name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.passed;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed ? 1 : 0;
}
