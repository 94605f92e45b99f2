#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ratshare/comm_tree.hpp"
#include "ratshare/harness.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
  CLI::App app{"Simulate the rational secret sharing protocol over seeded trials"};
  std::string config_path, mode, strategy, out, emit;
  std::optional<std::uint64_t> n, trials, seed, deviator, threads, secret, dump_tree;
  std::optional<double> active_fraction, tau, lambda, k_exponent, beta;
  bool print_config = false;

  app.add_option("--config", config_path, "JSON experiment file")->check(CLI::ExistingFile);
  app.add_option("--mode", mode, "n_of_n or m_of_n")->check(CLI::IsMember({"n_of_n", "m_of_n"}));
  app.add_option("--n", n, "number of players");
  app.add_option("--trials", trials, "seeded trials");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--strategy", strategy, "honest, quit_and_guess:T, fake_one_child:T, fake_both_children:T, "
                                         "forge_final_tag, spurious_flood:V");
  app.add_option("--deviator", deviator, "index of the deviating player");
  app.add_option("--secret", secret, "secret symbol index");
  app.add_option("--beta", beta, "geometric parameter for the definitive round");
  app.add_option("--active-fraction", active_fraction, "fraction of active players (m_of_n)");
  app.add_option("--tau", tau, "reconstruction fraction (m_of_n)");
  app.add_option("--lambda", lambda, "margin (m_of_n)");
  app.add_option("--k-exponent", k_exponent, "failure exponent k (m_of_n)");
  app.add_option("--out", out, "output directory");
  app.add_option("--emit-transcripts", emit, "none, failures or all")
      ->check(CLI::IsMember({"none", "failures", "all"}));
  app.add_option("--threads", threads, "worker threads");
  app.add_option("--dump-tree", dump_tree, "print the labeled tree for this many leaves and exit");
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");
  CLI11_PARSE(app, argc, argv);

  if (dump_tree) {
    try {
      std::cout << ratshare::LabeledTree::build(static_cast<std::uint32_t>(*dump_tree)).dump();
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }

  json j = json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      std::cerr << "config error: <root>: malformed JSON: " << e.what() << "\n";
      return 2;
    }
  } else {
    j["n"] = 8;
    j["secret_alphabet"] = 10;
    j["utilities"] = {{"default", {{"u_plus", 10}, {"u", 6}, {"u_minus", 2}}}};
    j["trials"] = 1000;
  }
  if (!j.is_object()) {
    std::cerr << "config error: <root>: expected an object\n";
    return 2;
  }
  if (!mode.empty()) j["mode"] = mode;
  if (n) j["n"] = *n;
  if (trials) j["trials"] = *trials;
  if (seed) j["seed"] = *seed;
  if (!strategy.empty()) j["strategy"] = strategy;
  if (deviator) j["deviator"] = *deviator;
  if (secret) j["secret"] = *secret;
  if (beta) j["beta"] = *beta;
  if (!out.empty()) j["out"] = out;
  if (!emit.empty()) j["emit_transcripts"] = emit;
  if (threads) j["threads"] = *threads;
  if (tau || lambda || k_exponent || active_fraction) {
    json& t = j["threshold"];
    if (t.is_null()) t = json::object();
    if (tau) t["tau"] = *tau;
    if (lambda) t["lambda"] = *lambda;
    if (k_exponent) t["k"] = *k_exponent;
    if (active_fraction) t["active"] = {{"fraction", *active_fraction}};
  }

  ratshare::ExperimentConfig cfg;
  try {
    cfg = ratshare::config_from_json(j);
  } catch (const ratshare::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  if (print_config) {
    std::cout << cfg.to_json().dump(2) << "\n";
    return 0;
  }

  ratshare::ExperimentResult r;
  try {
    r = ratshare::run_experiment(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  std::cout << r.summary_csv;
  if (!r.stats.passed) {
    json failures = json::array();
    for (const auto& a : r.stats.assertions) {
      if (!a.passed) failures.push_back({{"name", a.name}, {"expected", a.expected}, {"observed", a.observed}});
    }
    std::cerr << json{{"failed", failures}}.dump() << "\n";
    return 1;
  }
  return 0;
}
