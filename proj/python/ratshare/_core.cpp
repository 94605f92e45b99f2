#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ratshare/auth.hpp"
#include "ratshare/comm_tree.hpp"
#include "ratshare/harness.hpp"
#include "ratshare/iterated_shares.hpp"
#include "ratshare/simnet.hpp"
#include "ratshare/threshold_groups.hpp"

namespace py = pybind11;
using namespace ratshare;

namespace {

std::vector<std::uint64_t> values(std::span<const Element> xs) {
  std::vector<std::uint64_t> out;
  for (Element e : xs) out.push_back(e.value);
  return out;
}

// Plain C++ result so the GIL can stay released while trials run.
std::tuple<std::string, std::string, bool> experiment(const std::string& config_json) {
  ExperimentResult r = run_experiment(parse_config(config_json));
  return {std::move(r.report_json), std::move(r.summary_csv), r.stats.passed};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("select_field",
        [](std::uint32_t n, std::uint64_t s_size, const std::string& u_ratio) {
          return select_field(n, s_size, parse_rational(u_ratio)).q;
        },
        py::arg("n"), py::arg("s_size"), py::arg("u_ratio"));
  m.def("default_beta",
        [](std::uint64_t s_size, const std::string& u_ratio) { return default_beta(s_size, parse_rational(u_ratio)); },
        py::arg("s_size"), py::arg("u_ratio"));

  m.def("tree_dump", [](std::uint32_t n) { return LabeledTree::build(n).dump(); }, py::arg("n"));
  m.def("neighbors",
        [](std::uint32_t n, std::uint32_t label) {
          const LabeledTree t = LabeledTree::build(n);
          py::list out;
          for (const NeighborView& v : neighbors_of_label(t, label)) {
            py::dict d;
            d["node"] = v.node.index;
            d["kind"] = v.node.kind == NodeKind::leaf ? "leaf" : v.node.kind == NodeKind::root ? "root" : "internal";
            d["parents"] = v.parent_labels;
            d["children"] = v.child_labels;
            out.append(d);
          }
          return out;
        },
        py::arg("n"), py::arg("label"));

  m.def("iterated_shares",
        [](std::uint64_t q, std::size_t leaves, std::uint64_t y, std::uint64_t seed) {
          const Field f(q);
          const TreeShape shape = TreeShape::complete(leaves);
          Rng rng(seed);
          return values(recursive_shares(shape, f, f.element(static_cast<std::int64_t>(y)), rng).leaf_shares(shape));
        },
        py::arg("q"), py::arg("leaves"), py::arg("y"), py::arg("seed"));
  m.def("reconstruct",
        [](std::uint64_t q, const std::vector<std::uint64_t>& shares) {
          const Field f(q);
          std::vector<Element> xs;
          for (std::uint64_t v : shares) xs.push_back(f.element(static_cast<std::int64_t>(v % q)));
          return reconstruct_root(TreeShape::complete(xs.size()), f, std::span<const Element>(xs)).value;
        },
        py::arg("q"), py::arg("shares"));

  m.def("verify",
        [](std::uint64_t q, std::uint64_t y, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
          return verify(Field(q), Element{y % q}, AuthTag{Element{a % q}}, VerificationVector{Element{b % q}, Element{c % q}});
        },
        py::arg("q"), py::arg("y"), py::arg("a"), py::arg("b"), py::arg("c"));

  m.def("shamir_split",
        [](std::uint64_t q, std::uint64_t y, std::uint32_t threshold, std::uint32_t g, std::uint64_t seed) {
          Rng rng(seed);
          std::vector<std::pair<std::uint32_t, std::uint64_t>> out;
          for (const ShamirShare& s : shamir_split(Field(q), Element{y % q}, threshold, g, rng)) {
            out.emplace_back(s.x, s.value.value);
          }
          return out;
        },
        py::arg("q"), py::arg("y"), py::arg("threshold"), py::arg("g"), py::arg("seed"));
  m.def("shamir_reconstruct",
        [](std::uint64_t q, const std::vector<std::pair<std::uint32_t, std::uint64_t>>& shares,
           std::uint32_t threshold) {
          std::vector<ShamirShare> xs;
          for (const auto& [x, v] : shares) xs.push_back({x, Element{v % q}});
          try {
            return shamir_reconstruct(Field(q), xs, threshold).value;
          } catch (const InsufficientShares& e) {
            throw py::value_error(e.what());
          }
        },
        py::arg("q"), py::arg("shares"), py::arg("threshold"));

  m.def("run_game",
        [](std::uint32_t n, std::uint64_t s_size, std::uint64_t secret, double beta, const std::string& strategy,
           std::uint32_t deviator, std::uint64_t seed) {
          GameParameters p;
          p.n = n;
          p.s_size = s_size;
          p.secret = secret;
          p.beta = beta;
          p.field = select_field(n, s_size, Rational(1));
          const DealtGame g = deal(p, derive_seed(seed, 0, 0));
          const Strategy s = parse_strategy(strategy);
          const auto strategies = s.honest() ? honest_strategies(n) : with_deviator(n, deviator, s);
          return transcript_to_jsonl(run_game(g, strategies, derive_seed(seed, 1, 0)));
        },
        py::arg("n"), py::arg("s_size"), py::arg("secret"), py::arg("beta"), py::arg("strategy") = "honest",
        py::arg("deviator") = 0, py::arg("seed") = 0);

  m.def("run_experiment", &experiment, py::arg("config_json"),
        py::call_guard<py::gil_scoped_release>());
}
