#include "ratshare/harness.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <sstream>
#include <thread>

#include "ratshare/rng.hpp"

namespace ratshare {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const char* to_string(Mode m) { return m == Mode::n_of_n ? "n_of_n" : "m_of_n"; }

const char* to_string(TranscriptPolicy p) {
  switch (p) {
    case TranscriptPolicy::none: return "none";
    case TranscriptPolicy::failures: return "failures";
    case TranscriptPolicy::all: return "all";
  }
  return "?";
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (const auto& [k, v] : j.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) throw ConfigError(join(path, k), "unknown key");
  }
}

std::uint64_t as_uint(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ConfigError(path, "must be non-negative");
    return v.get<std::uint64_t>();
  }
  throw ConfigError(path, "expected an integer");
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
  return v.get<bool>();
}

Rational as_rational(const json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return parse_rational(v.dump());
    if (v.is_string()) return parse_rational(v.get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
  throw ConfigError(path, "expected a number or a rational string such as \"7/2\"");
}

PlayerUtility read_utility(const json& j, const std::string& path, PlayerUtility base) {
  require_object(j, path);
  reject_unknown(j, path, {"u_plus", "u", "u_minus"});
  if (j.contains("u_plus")) base.u_plus = as_rational(j["u_plus"], join(path, "u_plus"));
  if (j.contains("u")) base.u = as_rational(j["u"], join(path, "u"));
  if (j.contains("u_minus")) base.u_minus = as_rational(j["u_minus"], join(path, "u_minus"));
  return base;
}

void check_utility(const PlayerUtility& p, std::uint32_t player, const std::string& path) {
  const std::string who = "player " + std::to_string(player) + ": ";
  if (!(p.u > p.u_minus)) {
    throw ConfigError(path, who + "U must exceed U- (got U=" + to_string(p.u) + ", U-=" + to_string(p.u_minus) + ")");
  }
  if (p.u_plus < p.u) {
    throw ConfigError(path, who + "U+ must be at least U (got U+=" + to_string(p.u_plus) + ", U=" + to_string(p.u) + ")");
  }
}

ojson estimate_json(const Estimate& e) {
  ojson j;
  j["samples"] = e.samples;
  j["mean"] = e.mean;
  j["se"] = e.se;
  return j;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string trial_name(std::uint64_t i, const char* suffix) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "trial_%06" PRIu64 "%s.jsonl", i, suffix);
  return buf;
}

// Runs make(i) for i in [0, trials) on up to `threads` workers and hands the
// results to fold in index order, one batch at a time.
template <class T, class Make, class Fold>
void ordered_batches(std::uint64_t trials, unsigned threads, Make make, Fold fold) {
  const std::uint64_t batch = threads <= 1 ? 1 : std::max<std::uint64_t>(64, 16ull * threads);
  std::vector<T> results;
  for (std::uint64_t start = 0; start < trials; start += batch) {
    const std::uint64_t count = std::min(batch, trials - start);
    results.assign(count, T{});
    if (threads <= 1) {
      for (std::uint64_t i = 0; i < count; ++i) results[i] = make(start + i);
    } else {
      std::atomic<std::uint64_t> next{0};
      std::exception_ptr error;
      std::mutex mu;
      std::vector<std::thread> pool;
      const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
              results[i] = make(start + i);
            } catch (...) {
              std::lock_guard lock(mu);
              if (!error) error = std::current_exception();
              return;
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      if (error) std::rethrow_exception(error);
    }
    for (T& r : results) fold(r);
  }
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

GameParameters ExperimentConfig::game() const {
  GameParameters p;
  p.n = n;
  p.field = field;
  p.s_size = secret_alphabet;
  p.secret = secret;
  p.beta = beta;
  return p;
}

MofnParameters ExperimentConfig::mofn() const { return MofnParameters{game(), threshold}; }

ExperimentConfig config_from_json(const json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"mode", "n", "secret", "secret_alphabet", "utilities", "beta", "threshold", "strategy",
                         "deviator", "trials", "seed", "out", "emit_transcripts", "threads", "assertions"});
  ExperimentConfig c;

  if (j.contains("mode")) {
    const std::string m = as_string(j["mode"], "mode");
    if (m == "n_of_n") {
      c.mode = Mode::n_of_n;
    } else if (m == "m_of_n") {
      c.mode = Mode::m_of_n;
    } else {
      throw ConfigError("mode", "expected \"n_of_n\" or \"m_of_n\", got \"" + m + "\"");
    }
  }
  if (!j.contains("n")) throw ConfigError("n", "required");
  const std::uint64_t n = as_uint(j["n"], "n");
  if (n < 3 || n > (1u << 20)) throw ConfigError("n", "must lie in [3, 2^20]");
  c.n = static_cast<std::uint32_t>(n);

  if (!j.contains("secret_alphabet")) throw ConfigError("secret_alphabet", "required");
  c.secret_alphabet = as_uint(j["secret_alphabet"], "secret_alphabet");
  if (c.secret_alphabet < 2) throw ConfigError("secret_alphabet", "needs at least 2 symbols");
  if (c.secret_alphabet > (1ull << 40)) throw ConfigError("secret_alphabet", "at most 2^40 symbols");
  if (j.contains("secret")) c.secret = as_uint(j["secret"], "secret");
  if (c.secret >= c.secret_alphabet) throw ConfigError("secret", "must be a symbol index below secret_alphabet");

  PlayerUtility base{Rational(2), Rational(1), Rational(0)};
  std::vector<PlayerUtility> players;
  if (j.contains("utilities")) {
    const json& u = j["utilities"];
    require_object(u, "utilities");
    reject_unknown(u, "utilities", {"default", "players"});
    if (u.contains("default")) {
      base = read_utility(u["default"], "utilities.default", base);
      check_utility(base, 0, "utilities.default");
    }
    players.assign(c.n, base);
    if (u.contains("players")) {
      const json& ps = u["players"];
      require_object(ps, "utilities.players");
      for (const auto& [key, v] : ps.items()) {
        const std::string path = "utilities.players." + key;
        std::uint32_t idx = 0;
        try {
          std::size_t used = 0;
          const unsigned long parsed = std::stoul(key, &used);
          if (used != key.size() || parsed >= c.n) throw std::out_of_range(key);
          idx = static_cast<std::uint32_t>(parsed);
        } catch (const std::exception&) {
          throw ConfigError(path, "player keys are indices in [0, n)");
        }
        players[idx] = read_utility(v, path, base);
        check_utility(players[idx], idx, path);
      }
    }
  } else {
    players.assign(c.n, base);
  }
  c.utilities = UtilityProfile(std::move(players));
  c.u_ratio = c.utilities.max_ratio();
  const Rational alphabet(static_cast<std::int64_t>(c.secret_alphabet));
  if (!(c.u_ratio < alphabet)) {
    throw ConfigError("utilities", "utility ratio U=" + to_string(c.u_ratio) +
                                       " must be below the secret alphabet size |S|=" +
                                       std::to_string(c.secret_alphabet) + " (U < |S|)");
  }

  if (j.contains("beta")) {
    const double b = as_double(j["beta"], "beta");
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("beta", "must lie in (0, 1)");
    c.beta_override = b;
    c.beta = b;
  } else {
    c.beta = default_beta(c.secret_alphabet, c.u_ratio);
  }
  try {
    c.field = select_field(c.n, c.secret_alphabet, c.u_ratio);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("n", e.what());
  }

  if (j.contains("threshold")) {
    const json& t = j["threshold"];
    require_object(t, "threshold");
    reject_unknown(t, "threshold", {"tau", "lambda", "k", "active"});
    if (c.mode != Mode::m_of_n) throw ConfigError("threshold", "only used in m_of_n mode");
    if (t.contains("tau")) c.threshold.tau = as_double(t["tau"], "threshold.tau");
    if (t.contains("lambda")) c.threshold.lambda = as_double(t["lambda"], "threshold.lambda");
    if (t.contains("k")) c.threshold.k = as_double(t["k"], "threshold.k");
    if (t.contains("active")) {
      const json& a = t["active"];
      require_object(a, "threshold.active");
      reject_unknown(a, "threshold.active", {"fraction", "seed", "players"});
      if (a.contains("fraction") == a.contains("players")) {
        throw ConfigError("threshold.active", "give exactly one of fraction or players");
      }
      if (a.contains("fraction")) {
        const double f = as_double(a["fraction"], "threshold.active.fraction");
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("threshold.active.fraction", "must lie in [0, 1]");
        c.active.fraction = f;
        if (a.contains("seed")) c.active.seed = as_uint(a["seed"], "threshold.active.seed");
      } else {
        if (a.contains("seed")) throw ConfigError("threshold.active.seed", "only used with fraction");
        const json& list = a["players"];
        if (!list.is_array()) throw ConfigError("threshold.active.players", "expected an array");
        std::vector<std::uint32_t> ids;
        for (std::size_t i = 0; i < list.size(); ++i) {
          ids.push_back(static_cast<std::uint32_t>(as_uint(list[i], "threshold.active.players." + std::to_string(i))));
        }
        try {
          ActiveSet::from_list(c.n, ids);
        } catch (const std::invalid_argument& e) {
          throw ConfigError("threshold.active.players", e.what());
        }
        c.active.players = std::move(ids);
      }
    }
  }
  if (c.mode == Mode::m_of_n) {
    try {
      c.threshold.validate(c.n);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("threshold", e.what());
    }
  }

  if (j.contains("strategy")) c.strategy = as_string(j["strategy"], "strategy");
  Strategy s;
  try {
    s = parse_strategy(c.strategy);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("strategy", e.what());
  }
  c.strategy = to_string(s);
  if (c.mode == Mode::m_of_n && !s.honest() && s.kind != StrategyKind::fake_one_child) {
    throw ConfigError("strategy", "m_of_n mode supports honest and fake_one_child only");
  }
  if (j.contains("deviator")) {
    const std::uint64_t d = as_uint(j["deviator"], "deviator");
    if (d >= c.n) throw ConfigError("deviator", "must be a player index below n");
    c.deviator = static_cast<std::uint32_t>(d);
  }

  if (j.contains("trials")) c.trials = as_uint(j["trials"], "trials");
  if (c.trials == 0) throw ConfigError("trials", "must be positive");
  if (j.contains("seed")) c.seed = as_uint(j["seed"], "seed");
  if (j.contains("out")) c.out = as_string(j["out"], "out");
  if (j.contains("emit_transcripts")) {
    const std::string e = as_string(j["emit_transcripts"], "emit_transcripts");
    if (e == "none") {
      c.emit = TranscriptPolicy::none;
    } else if (e == "failures") {
      c.emit = TranscriptPolicy::failures;
    } else if (e == "all") {
      c.emit = TranscriptPolicy::all;
    } else {
      throw ConfigError("emit_transcripts", "expected none, failures or all");
    }
  }
  if (j.contains("threads")) {
    const std::uint64_t t = as_uint(j["threads"], "threads");
    if (t == 0 || t > 256) throw ConfigError("threads", "must lie in [1, 256]");
    c.threads = static_cast<unsigned>(t);
  }

  if (j.contains("assertions")) {
    const json& a = j["assertions"];
    require_object(a, "assertions");
    reject_unknown(a, "assertions", {"recovery_rate_min", "recovery_rate_max", "utility_gap_max_se",
                                     "reconstruction_consistent", "no_round_cap"});
    if (a.contains("recovery_rate_min")) {
      c.assertions.recovery_rate_min = as_double(a["recovery_rate_min"], "assertions.recovery_rate_min");
    }
    if (a.contains("recovery_rate_max")) {
      c.assertions.recovery_rate_max = as_double(a["recovery_rate_max"], "assertions.recovery_rate_max");
    }
    if (a.contains("utility_gap_max_se")) {
      if (c.mode != Mode::n_of_n || s.honest()) {
        throw ConfigError("assertions.utility_gap_max_se", "needs a deviating strategy in n_of_n mode");
      }
      c.assertions.utility_gap_max_se = as_double(a["utility_gap_max_se"], "assertions.utility_gap_max_se");
    }
    if (a.contains("reconstruction_consistent")) {
      c.assertions.reconstruction_consistent =
          as_bool(a["reconstruction_consistent"], "assertions.reconstruction_consistent");
      if (c.assertions.reconstruction_consistent && c.mode != Mode::m_of_n) {
        throw ConfigError("assertions.reconstruction_consistent", "only meaningful in m_of_n mode");
      }
    }
    if (a.contains("no_round_cap")) c.assertions.no_round_cap = as_bool(a["no_round_cap"], "assertions.no_round_cap");
  }
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Execution knobs (threads, out) are left out so that reports compare equal
// across them. The result loads back through config_from_json.
ojson ExperimentConfig::to_json() const {
  ojson j;
  j["mode"] = to_string(mode);
  j["n"] = n;
  j["secret"] = secret;
  j["secret_alphabet"] = secret_alphabet;
  auto utility = [](const PlayerUtility& p) {
    ojson u;
    u["u_plus"] = ratshare::to_string(p.u_plus);
    u["u"] = ratshare::to_string(p.u);
    u["u_minus"] = ratshare::to_string(p.u_minus);
    return u;
  };
  bool uniform = true;
  for (std::uint32_t i = 1; i < utilities.size(); ++i) {
    const PlayerUtility& a = utilities.of(0);
    const PlayerUtility& b = utilities.of(i);
    uniform = uniform && a.u_plus == b.u_plus && a.u == b.u && a.u_minus == b.u_minus;
  }
  if (uniform) {
    j["utilities"] = {{"default", utility(utilities.of(0))}};
  } else {
    ojson players;
    for (std::uint32_t i = 0; i < utilities.size(); ++i) players[std::to_string(i)] = utility(utilities.of(i));
    j["utilities"] = {{"players", std::move(players)}};
  }
  // The resolved value is in the derived section of a report.
  if (beta_override) j["beta"] = *beta_override;
  if (mode == Mode::m_of_n) {
    ojson t;
    t["tau"] = threshold.tau;
    t["lambda"] = threshold.lambda;
    t["k"] = threshold.k;
    ojson a;
    if (active.fraction) a["fraction"] = *active.fraction;
    if (active.seed) a["seed"] = *active.seed;
    if (active.players) a["players"] = *active.players;
    t["active"] = std::move(a);
    j["threshold"] = std::move(t);
  }
  j["strategy"] = strategy;
  j["deviator"] = deviator;
  j["trials"] = trials;
  j["seed"] = seed;
  j["emit_transcripts"] = to_string(emit);
  return j;
}

namespace {

struct Outputs {
  fs::path transcripts;
  bool enabled = false;
};

bool wants(TranscriptPolicy p, bool failed) {
  return p == TranscriptPolicy::all || (p == TranscriptPolicy::failures && failed);
}

void run_n_of_n(const ExperimentConfig& cfg, const Outputs& out, RunStats& st) {
  const GameParameters params = cfg.game();
  const Strategy s = parse_strategy(cfg.strategy);
  const std::vector<Strategy> strategies =
      s.honest() ? honest_strategies(cfg.n) : with_deviator(cfg.n, cfg.deviator, s);
  RunOptions opts;
  opts.record_messages = out.enabled;

  DeviationAccumulator dev(strategies, cfg.utilities);
  CostAccumulator cost;
  MeanAccumulator recovery;

  auto make = [&](std::uint64_t i) {
    DeviationTrial trial = run_trial(params, strategies, cfg.seed, i, opts);
    const bool failed = !trial.deviant.all_learned() || trial.deviant.round_cap_hit;
    if (out.enabled && wants(cfg.emit, failed)) {
      write_file(out.transcripts / trial_name(i, ""), transcript_to_jsonl(trial.deviant));
      if (trial.baseline) write_file(out.transcripts / trial_name(i, "_baseline"), transcript_to_jsonl(*trial.baseline));
    }
    trial.deviant.messages = {};
    if (trial.baseline) trial.baseline->messages = {};
    return trial;
  };
  auto fold = [&](const DeviationTrial& trial) {
    dev.add(trial);
    cost.add(trial.deviant);
    recovery.add(trial.deviant.all_learned() ? 1.0 : 0.0);
    if (trial.deviant.round_cap_hit) ++st.round_cap_hits;
  };
  ordered_batches<DeviationTrial>(cfg.trials, cfg.threads, make, fold);

  const CostSummary c = cost.summary();
  st.recovery = recovery.estimate();
  st.rounds = c.rounds;
  st.latency = c.latency;
  st.max_bits = c.max_player_bits;
  st.mean_bits = c.mean_player_bits;
  st.max_bits_overall = c.max_bits;
  if (!s.honest()) st.deviation = dev.report();
}

void run_m_of_n(const ExperimentConfig& cfg, const Outputs& out, RunStats& st) {
  const MofnParameters params = cfg.mofn();
  const Strategy s = parse_strategy(cfg.strategy);
  MofnRunOptions opts;
  opts.record_messages = out.enabled;
  if (!s.honest()) opts.tamper = TamperSpec{cfg.deviator, s.round};

  std::optional<ActiveSet> fixed;
  if (cfg.active.players) {
    fixed = ActiveSet::from_list(cfg.n, *cfg.active.players);
  } else if (!cfg.active.fraction) {
    fixed = ActiveSet::all(cfg.n);
  } else if (cfg.active.seed) {
    Rng rng(*cfg.active.seed);
    fixed = ActiveSet::random(cfg.n, *cfg.active.fraction, rng);
  }

  MeanAccumulator recovery, rounds, latency, max_bits, mean_bits, reconstructible, tamper;
  bool tamper_seen = false;

  auto make = [&](std::uint64_t i) {
    const MofnGame game = deal_mofn(params, derive_seed(cfg.seed, 0, i));
    ActiveSet active;
    if (fixed) {
      active = *fixed;
    } else {
      Rng rng(derive_seed(cfg.seed, 2, i));
      active = ActiveSet::random(cfg.n, *cfg.active.fraction, rng);
    }
    MofnTranscript t = run_mofn_game(game, active, derive_seed(cfg.seed, 1, i), opts);
    const bool failed = !t.recovered || !t.reconstruction_consistent() || t.round_cap_hit;
    if (out.enabled && wants(cfg.emit, failed)) {
      std::ostringstream os;
      write_mofn_transcript(os, t);
      write_file(out.transcripts / trial_name(i, ""), os.str());
    }
    t.messages = {};
    return t;
  };
  auto fold = [&](const MofnTranscript& t) {
    recovery.add(t.recovered ? 1.0 : 0.0);
    rounds.add(t.rounds);
    latency.add(static_cast<double>(t.slots));
    std::uint64_t most = 0, sum = 0, count = 0;
    for (const MofnPlayerRecord& p : t.players) {
      if (!p.active) continue;
      most = std::max(most, p.bits);
      sum += p.bits;
      ++count;
    }
    max_bits.add(static_cast<double>(most));
    mean_bits.add(count ? static_cast<double>(sum) / static_cast<double>(count) : 0.0);
    st.max_bits_overall = std::max(st.max_bits_overall, most);
    reconstructible.add(t.reconstructible ? 1.0 : 0.0);
    if (!t.reconstruction_consistent()) ++st.reconstruction_disagreements;
    if (t.round_cap_hit) ++st.round_cap_hits;
    if (t.tamper_round > 0) {
      tamper_seen = true;
      tamper.add(t.tamper_detected ? 1.0 : 0.0);
    }
  };
  ordered_batches<MofnTranscript>(cfg.trials, cfg.threads, make, fold);

  st.recovery = recovery.estimate();
  st.rounds = rounds.estimate();
  st.latency = latency.estimate();
  st.max_bits = max_bits.estimate();
  st.mean_bits = mean_bits.estimate();
  st.reconstructible = reconstructible.estimate();
  if (tamper_seen) st.tamper_detection = tamper.estimate();
}

void check_assertions(const ExperimentConfig& cfg, RunStats& st) {
  const Assertions& a = cfg.assertions;
  auto push = [&](std::string name, double expected, double observed, bool ok) {
    st.assertions.push_back({std::move(name), expected, observed, ok});
    st.passed = st.passed && ok;
  };
  if (a.recovery_rate_min) {
    push("recovery_rate_min", *a.recovery_rate_min, st.recovery.mean, st.recovery.mean >= *a.recovery_rate_min);
  }
  if (a.recovery_rate_max) {
    push("recovery_rate_max", *a.recovery_rate_max, st.recovery.mean, st.recovery.mean <= *a.recovery_rate_max);
  }
  if (a.utility_gap_max_se && st.deviation) {
    const Estimate& gap = st.deviation->utility_gap;
    const double allowed = *a.utility_gap_max_se * gap.se;
    push("utility_gap_max_se", allowed, gap.mean, gap.mean <= allowed);
  }
  if (a.reconstruction_consistent) {
    push("reconstruction_consistent", 0.0, static_cast<double>(st.reconstruction_disagreements),
         st.reconstruction_disagreements == 0);
  }
  if (a.no_round_cap) push("no_round_cap", 0.0, static_cast<double>(st.round_cap_hits), st.round_cap_hits == 0);
}

ojson deviation_json(const DeviationReport& d) {
  ojson j;
  j["strategy"] = to_string(d.strategy);
  j["deviator"] = d.deviator;
  j["trials"] = d.trials;
  j["attempted"] = d.attempted;
  j["success"] = estimate_json(d.success);
  j["cheat_threshold"] = d.cheat_threshold;
  j["bound_utility"] = estimate_json(d.bound_utility);
  j["deviant_utility"] = estimate_json(d.deviant_utility);
  j["honest_utility"] = estimate_json(d.honest_utility);
  j["utility_gap"] = estimate_json(d.utility_gap);
  j["detection"] = estimate_json(d.detection);
  j["forged"] = d.forged;
  j["forged_accepted"] = d.forged_accepted;
  j["undetected_forgery"] = estimate_json(d.undetected_forgery);
  j["definitive_round"] = d.definitive_round ? estimate_json(*d.definitive_round) : ojson(nullptr);
  return j;
}

std::string report_json(const ExperimentConfig& cfg, const RunStats& st) {
  ojson r;
  r["config"] = cfg.to_json();
  ojson d;
  d["q"] = cfg.field.q;
  d["bit_width"] = cfg.field.field().bit_width();
  d["beta"] = cfg.beta;
  d["u_ratio"] = to_string(cfg.u_ratio);
  d["log2_n"] = std::log2(static_cast<double>(cfg.n));
  if (cfg.mode == Mode::m_of_n) {
    d["group_size"] = cfg.threshold.group_size(cfg.n);
    d["group_count"] = cfg.threshold.group_count(cfg.n);
    d["c"] = cfg.threshold.c();
  }
  r["derived"] = std::move(d);

  ojson s;
  s["trials"] = st.trials;
  s["recovery"] = estimate_json(st.recovery);
  s["rounds"] = estimate_json(st.rounds);
  s["latency"] = estimate_json(st.latency);
  s["max_player_bits"] = estimate_json(st.max_bits);
  s["mean_player_bits"] = estimate_json(st.mean_bits);
  s["max_bits"] = st.max_bits_overall;
  s["max_player_bits_per_log2_n"] = st.max_bits.mean / std::log2(static_cast<double>(cfg.n));
  s["round_cap_hits"] = st.round_cap_hits;
  if (cfg.mode == Mode::m_of_n) {
    s["reconstructible"] = estimate_json(st.reconstructible);
    s["reconstruction_disagreements"] = st.reconstruction_disagreements;
    s["tamper_detection"] = st.tamper_detection ? estimate_json(*st.tamper_detection) : ojson(nullptr);
  }
  s["deviation"] = st.deviation ? deviation_json(*st.deviation) : ojson(nullptr);
  r["stats"] = std::move(s);

  ojson as = ojson::array();
  for (const AssertionResult& a : st.assertions) {
    ojson x;
    x["name"] = a.name;
    x["expected"] = a.expected;
    x["observed"] = a.observed;
    x["passed"] = a.passed;
    as.push_back(std::move(x));
  }
  r["assertions"] = std::move(as);
  r["passed"] = st.passed;
  return r.dump(2) + "\n";
}

std::string summary_csv(const ExperimentConfig& cfg, const RunStats& st) {
  std::ostringstream os;
  os << "mode,n,q,s_size,beta,strategy,deviator,trials,seed,recovery_rate,recovery_se,rounds_mean,rounds_se,"
        "latency_mean,latency_se,max_player_bits_mean,max_player_bits_se,mean_player_bits_mean,max_bits,"
        "bits_per_log2_n,round_cap_hits,success_rate,success_se,cheat_threshold,deviant_utility,deviant_utility_se,"
        "honest_utility,honest_utility_se,utility_gap,utility_gap_se,detection_rate,undetected_forgery,"
        "reconstruction_disagreements,passed\n";
  os << to_string(cfg.mode) << ',' << cfg.n << ',' << cfg.field.q << ',' << cfg.secret_alphabet << ','
     << num(cfg.beta) << ',' << cfg.strategy << ',' << cfg.deviator << ',' << st.trials << ',' << cfg.seed << ','
     << num(st.recovery.mean) << ',' << num(st.recovery.se) << ',' << num(st.rounds.mean) << ','
     << num(st.rounds.se) << ',' << num(st.latency.mean) << ',' << num(st.latency.se) << ','
     << num(st.max_bits.mean) << ',' << num(st.max_bits.se) << ',' << num(st.mean_bits.mean) << ','
     << st.max_bits_overall << ',' << num(st.max_bits.mean / std::log2(static_cast<double>(cfg.n))) << ','
     << st.round_cap_hits << ',';
  if (st.deviation) {
    const DeviationReport& d = *st.deviation;
    os << num(d.success.mean) << ',' << num(d.success.se) << ',' << num(d.cheat_threshold) << ','
       << num(d.deviant_utility.mean) << ',' << num(d.deviant_utility.se) << ',' << num(d.honest_utility.mean)
       << ',' << num(d.honest_utility.se) << ',' << num(d.utility_gap.mean) << ',' << num(d.utility_gap.se) << ','
       << num(d.detection.mean) << ',' << num(d.undetected_forgery.mean) << ',';
  } else {
    os << ",,,,,,,,,,,";
  }
  if (cfg.mode == Mode::m_of_n) os << st.reconstruction_disagreements;
  os << ',' << (st.passed ? "true" : "false") << '\n';
  return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  Outputs out;
  if (!config.out.empty()) {
    fs::create_directories(config.out);
    if (config.emit != TranscriptPolicy::none) {
      out.transcripts = fs::path(config.out) / "transcripts";
      fs::create_directories(out.transcripts);
      out.enabled = true;
    }
  }

  ExperimentResult result;
  RunStats& st = result.stats;
  st.trials = config.trials;
  if (config.mode == Mode::n_of_n) {
    run_n_of_n(config, out, st);
  } else {
    run_m_of_n(config, out, st);
  }
  check_assertions(config, st);
  result.report_json = report_json(config, st);
  result.summary_csv = summary_csv(config, st);
  if (!config.out.empty()) {
    write_file(fs::path(config.out) / "report.json", result.report_json);
    write_file(fs::path(config.out) / "summary.csv", result.summary_csv);
  }
  return result;
}

}  // namespace ratshare
