#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ratshare {

inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

struct TreeNode {
  std::size_t parent = kNoNode;
  std::size_t left = kNoNode;
  std::size_t right = kNoNode;
  std::uint32_t depth = 0;

  bool is_leaf() const { return left == kNoNode; }
};

// Complete binary tree in heap layout: node i has children 2i+1 and 2i+2,
// node 0 is the root, and the deepest level is packed to the left.
class TreeShape {
 public:
  static TreeShape complete(std::size_t leaves);

  std::size_t size() const { return nodes_.size(); }
  std::size_t leaf_count() const { return frontier_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }
  std::uint32_t max_depth() const { return max_depth_; }
  // Leaves in left-to-right order.
  std::span<const std::size_t> frontier() const { return frontier_; }
  // Position of a leaf node in frontier order.
  std::size_t frontier_index(std::size_t node) const { return frontier_index_[node]; }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> frontier_;
  std::vector<std::size_t> frontier_index_;
  std::uint32_t max_depth_ = 0;
};

enum class NodeKind { leaf, internal, root };

struct NodeRef {
  std::size_t index = kNoNode;
  NodeKind kind = NodeKind::leaf;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
};

// The communication tree: leaves labelled 1..n left to right, parents of
// two leaves take the odd child label, remaining internal nodes take even
// labels in level order starting at the root, and for even n the root also
// carries label n.
class LabeledTree {
 public:
  // Throws std::invalid_argument for n < 3.
  static LabeledTree build(std::uint32_t n);

  const TreeShape& shape() const { return shape_; }
  std::uint32_t n_leaves() const { return n_; }
  std::size_t root() const { return 0; }
  bool dual_root() const { return n_ % 2 == 0; }

  // One label, or two at a dual root.
  std::span<const std::uint32_t> labels_at(std::size_t node) const;
  std::uint32_t primary_label(std::size_t node) const { return labels_[node][0]; }
  std::size_t leaf_of(std::uint32_t label) const { return leaf_of_[label]; }
  // kNoNode for the odd label that only sits at a leaf (odd n).
  std::size_t internal_of(std::uint32_t label) const { return internal_of_[label]; }

  NodeKind kind(std::size_t node) const;
  bool valid_label(std::uint32_t label) const { return label >= 1 && label <= n_; }

  // Debug dump: one line per node, "index depth kind labels parent left right".
  std::string dump() const;

 private:
  TreeShape shape_;
  std::uint32_t n_ = 0;
  std::vector<std::vector<std::uint32_t>> labels_;
  std::vector<std::size_t> leaf_of_;
  std::vector<std::size_t> internal_of_;
};

inline LabeledTree build_labeled_tree(std::uint32_t n) { return LabeledTree::build(n); }

// Every node carrying `label`: its leaf, and its internal node if any.
// Throws std::out_of_range for an unknown label.
std::vector<NodeRef> node_of_label(const LabeledTree& tree, std::uint32_t label);

struct NeighborView {
  NodeRef node;
  std::vector<std::uint32_t> parent_labels;
  std::vector<std::uint32_t> child_labels;  // left then right
};

std::vector<NeighborView> neighbors_of_label(const LabeledTree& tree, std::uint32_t label);

}  // namespace ratshare
