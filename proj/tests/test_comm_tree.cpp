#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ratshare/comm_tree.hpp"

using namespace ratshare;

namespace {

std::vector<std::uint32_t> labels(const LabeledTree& t, std::size_t node) {
  auto s = t.labels_at(node);
  return {s.begin(), s.end()};
}

using L = std::vector<std::uint32_t>;

// The three placement properties plus completeness, checked from the raw
// node table only.
void check_labeling(std::uint32_t n) {
  CAPTURE(n);
  const LabeledTree t = LabeledTree::build(n);
  const TreeShape& s = t.shape();
  REQUIRE(s.leaf_count() == n);
  REQUIRE(s.size() == 2 * n - 1);

  std::uint32_t deepest = 0;
  for (std::size_t i = 0; i < s.size(); ++i) deepest = std::max(deepest, s.node(i).depth);
  bool seen_shallow = false;
  for (std::size_t pos = 0; pos < n; ++pos) {
    const std::size_t leaf = s.frontier()[pos];
    const TreeNode& nd = s.node(leaf);
    CHECK(nd.is_leaf());
    CHECK(nd.depth + 1 >= deepest);
    if (nd.depth < deepest) seen_shallow = true;
    if (nd.depth == deepest) CHECK_FALSE(seen_shallow);
    CHECK(labels(t, leaf) == L{static_cast<std::uint32_t>(pos + 1)});
  }

  std::set<std::uint32_t> even_internal;
  std::size_t leaf_pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const TreeNode& nd = s.node(i);
    if (nd.is_leaf()) continue;
    REQUIRE(nd.right != kNoNode);
    if (s.node(nd.left).is_leaf() && s.node(nd.right).is_leaf()) ++leaf_pairs;
    for (std::uint32_t l : labels(t, i)) {
      if (l % 2 == 0) even_internal.insert(l);
    }
    const auto ls = labels(t, i);
    CHECK(ls.size() == (i == 0 && n % 2 == 0 ? 2u : 1u));
  }
  CHECK(leaf_pairs == n / 2);
  for (std::uint32_t e = 2; e <= n; e += 2) CHECK(even_internal.count(e) == 1);

  for (std::size_t pos = 0; pos < n; ++pos) {
    std::vector<std::vector<std::uint32_t>> path;  // root first
    for (std::size_t v = s.frontier()[pos]; v != kNoNode; v = s.node(v).parent) path.insert(path.begin(), labels(t, v));
    std::set<std::uint32_t> odd;
    std::vector<std::size_t> odd_at;
    for (std::size_t d = 0; d < path.size(); ++d) {
      bool has_odd = false;
      for (std::uint32_t l : path[d]) {
        if (l % 2) {
          odd.insert(l);
          has_odd = true;
        }
      }
      if (has_odd) odd_at.push_back(d);
      const bool internal = d + 1 < path.size();
      if (internal && !has_odd) CHECK(odd_at.empty());
    }
    CHECK(odd.size() == 1);
    REQUIRE(!odd_at.empty());
    CHECK(odd_at.size() <= 2);
    if (odd_at.size() == 2) CHECK(odd_at[1] == odd_at[0] + 1);
  }
}

}  // namespace

TEST_CASE("labeling properties for every n in [3, 512]") {
  for (std::uint32_t n = 3; n <= 512; ++n) check_labeling(n);
}

TEST_CASE("n = 5 labeling") {
  const LabeledTree t = LabeledTree::build(5);
  const TreeShape& s = t.shape();
  auto parent_of_leaf = [&](std::uint32_t label) { return labels(t, s.node(t.leaf_of(label)).parent); };
  CHECK(parent_of_leaf(1) == L{1});
  CHECK(parent_of_leaf(2) == L{1});
  CHECK(parent_of_leaf(4) == L{5});
  CHECK(parent_of_leaf(5) == L{5});
  CHECK(labels(t, 0) == L{2});
  CHECK(t.internal_of(3) == kNoNode);
  CHECK(t.internal_of(4) != kNoNode);
  CHECK(s.node(t.internal_of(4)).parent == 0);
}

TEST_CASE("n = 6 and n = 4 labelings") {
  const LabeledTree six = LabeledTree::build(6);
  const TreeShape& s6 = six.shape();
  for (std::uint32_t a : {1u, 3u, 5u}) {
    CHECK(labels(six, s6.node(six.leaf_of(a)).parent) == L{a});
    CHECK(labels(six, s6.node(six.leaf_of(a + 1)).parent) == L{a});
  }
  CHECK(labels(six, 0) == L{2, 6});
  CHECK(six.internal_of(4) != kNoNode);

  const LabeledTree four = LabeledTree::build(4);
  CHECK(labels(four, four.shape().node(four.leaf_of(2)).parent) == L{1});
  CHECK(labels(four, four.shape().node(four.leaf_of(4)).parent) == L{3});
  CHECK(labels(four, 0) == L{2, 4});
  CHECK(four.dual_root());
}

TEST_CASE("node_of_label") {
  const LabeledTree five = LabeledTree::build(5);
  auto refs = node_of_label(five, 1);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0] == NodeRef{five.leaf_of(1), NodeKind::leaf});
  CHECK(refs[1].index == five.shape().node(five.leaf_of(1)).parent);
  CHECK(refs[1].kind == NodeKind::internal);
  CHECK(node_of_label(five, 3).size() == 1);

  const LabeledTree six = LabeledTree::build(6);
  refs = node_of_label(six, 6);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0].kind == NodeKind::leaf);
  CHECK(refs[1] == NodeRef{0, NodeKind::root});
  CHECK_THROWS_AS(node_of_label(six, 7), std::out_of_range);
  CHECK_THROWS_AS(node_of_label(six, 0), std::out_of_range);
}

TEST_CASE("neighbors_of_label") {
  const LabeledTree five = LabeledTree::build(5);
  auto views = neighbors_of_label(five, 2);
  // label 2: leaf 2 under internal 1, and the root
  REQUIRE(views.size() == 2);
  CHECK(views[1].node.kind == NodeKind::root);
  CHECK(views[1].parent_labels.empty());
  CHECK(views[1].child_labels == L{4, 5});

  views = neighbors_of_label(five, 4);
  REQUIRE(views.size() == 2);
  CHECK(views[0].node.kind == NodeKind::leaf);
  CHECK(views[0].parent_labels == L{5});
  CHECK(views[1].parent_labels == L{2});
  // the internal node of label 4 has the label-1 node and leaf 3 below it
  CHECK(views[1].child_labels == L{1, 3});

  const LabeledTree four = LabeledTree::build(4);
  views = neighbors_of_label(four, 1);
  REQUIRE(views.size() == 2);
  CHECK(views[0].parent_labels == L{1});
  CHECK(views[1].parent_labels == L{2, 4});
  CHECK(views[1].child_labels == L{1, 2});
}

TEST_CASE("n = 3 shape and dump golden") {
  const LabeledTree t = LabeledTree::build(3);
  CHECK(t.dump() ==
        "0 0 root 2 - 1 2\n"
        "1 1 internal 1 0 3 4\n"
        "2 1 leaf 3 0 - -\n"
        "3 2 leaf 1 1 - -\n"
        "4 2 leaf 2 1 - -\n");
  CHECK(LabeledTree::build(77).dump() == LabeledTree::build(77).dump());
  CHECK_THROWS_AS(LabeledTree::build(2), std::invalid_argument);
}
