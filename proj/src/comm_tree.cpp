#include "ratshare/comm_tree.hpp"

#include <sstream>
#include <stdexcept>

namespace ratshare {

TreeShape TreeShape::complete(std::size_t leaves) {
  if (leaves == 0) throw std::invalid_argument("tree needs at least one leaf");
  TreeShape t;
  const std::size_t total = 2 * leaves - 1;
  t.nodes_.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    TreeNode& node = t.nodes_[i];
    if (i > 0) {
      node.parent = (i - 1) / 2;
      node.depth = t.nodes_[node.parent].depth + 1;
    }
    if (2 * i + 2 < total) {
      node.left = 2 * i + 1;
      node.right = 2 * i + 2;
    }
    t.max_depth_ = std::max(t.max_depth_, node.depth);
  }

  // In-order walk yields the leaves left to right.
  t.frontier_index_.assign(total, kNoNode);
  std::vector<std::size_t> stack;
  std::size_t cur = 0;
  while (cur != kNoNode || !stack.empty()) {
    while (cur != kNoNode) {
      stack.push_back(cur);
      cur = t.nodes_[cur].left;
    }
    cur = stack.back();
    stack.pop_back();
    if (t.nodes_[cur].is_leaf()) {
      t.frontier_index_[cur] = t.frontier_.size();
      t.frontier_.push_back(cur);
    }
    cur = t.nodes_[cur].right;
  }
  return t;
}

LabeledTree LabeledTree::build(std::uint32_t n) {
  if (n < 3) throw std::invalid_argument("communication tree needs n >= 3, got " + std::to_string(n));
  LabeledTree tree;
  tree.n_ = n;
  tree.shape_ = TreeShape::complete(n);
  const TreeShape& shape = tree.shape_;
  tree.labels_.assign(shape.size(), {});
  tree.leaf_of_.assign(n + 1, kNoNode);
  tree.internal_of_.assign(n + 1, kNoNode);

  const auto frontier = shape.frontier();
  for (std::uint32_t i = 0; i < n; ++i) {
    tree.labels_[frontier[i]].push_back(i + 1);
    tree.leaf_of_[i + 1] = frontier[i];
  }

  // Heap index order is level order, left to right within a level.
  std::uint32_t next_even = 2;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const TreeNode& node = shape.node(i);
    if (node.is_leaf()) continue;
    const bool leaf_pair = shape.node(node.left).is_leaf() && shape.node(node.right).is_leaf();
    std::uint32_t label = 0;
    if (leaf_pair) {
      const std::uint32_t a = tree.labels_[node.left][0];
      const std::uint32_t b = tree.labels_[node.right][0];
      label = (a % 2 == 1) ? a : b;
    } else {
      label = next_even;
      next_even += 2;
    }
    tree.labels_[i].push_back(label);
    tree.internal_of_[label] = i;
  }
  if (n % 2 == 0) {
    tree.labels_[0].push_back(n);
    tree.internal_of_[n] = 0;
  }
  const std::uint32_t expected_next = (n % 2 == 0) ? n : n + 1;
  if (next_even != expected_next) {
    throw std::logic_error("even label count mismatch while labelling tree of " + std::to_string(n));
  }
  return tree;
}

std::span<const std::uint32_t> LabeledTree::labels_at(std::size_t node) const {
  return labels_[node];
}

NodeKind LabeledTree::kind(std::size_t node) const {
  if (node == 0) return NodeKind::root;
  return shape_.node(node).is_leaf() ? NodeKind::leaf : NodeKind::internal;
}

std::string LabeledTree::dump() const {
  std::ostringstream out;
  auto idx = [](std::size_t i) { return i == kNoNode ? std::string("-") : std::to_string(i); };
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    const TreeNode& node = shape_.node(i);
    out << i << ' ' << node.depth << ' ';
    switch (kind(i)) {
      case NodeKind::leaf: out << "leaf"; break;
      case NodeKind::internal: out << "internal"; break;
      case NodeKind::root: out << "root"; break;
    }
    out << ' ';
    for (std::size_t k = 0; k < labels_[i].size(); ++k) {
      if (k) out << ',';
      out << labels_[i][k];
    }
    out << ' ' << idx(node.parent) << ' ' << idx(node.left) << ' ' << idx(node.right) << '\n';
  }
  return out.str();
}

std::vector<NodeRef> node_of_label(const LabeledTree& tree, std::uint32_t label) {
  if (!tree.valid_label(label)) throw std::out_of_range("unknown label " + std::to_string(label));
  std::vector<NodeRef> refs;
  const std::size_t leaf = tree.leaf_of(label);
  refs.push_back({leaf, tree.kind(leaf)});
  if (const std::size_t inner = tree.internal_of(label); inner != kNoNode) {
    refs.push_back({inner, tree.kind(inner)});
  }
  return refs;
}

std::vector<NeighborView> neighbors_of_label(const LabeledTree& tree, std::uint32_t label) {
  std::vector<NeighborView> views;
  for (const NodeRef& ref : node_of_label(tree, label)) {
    NeighborView view;
    view.node = ref;
    const TreeNode& node = tree.shape().node(ref.index);
    if (node.parent != kNoNode) {
      for (std::uint32_t l : tree.labels_at(node.parent)) view.parent_labels.push_back(l);
    }
    if (!node.is_leaf()) {
      view.child_labels.push_back(tree.primary_label(node.left));
      view.child_labels.push_back(tree.primary_label(node.right));
    }
    views.push_back(std::move(view));
  }
  return views;
}

}  // namespace ratshare
