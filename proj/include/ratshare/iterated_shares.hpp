#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ratshare/comm_tree.hpp"
#include "ratshare/field.hpp"
#include "ratshare/rng.hpp"

namespace ratshare {

// Node values of a recursive 2-of-2 line encoding. For an internal node w
// with value y and slope mu the children hold y - mu (left) and y + mu
// (right), i.e. the line through (0, y) evaluated at -1 and +1.
struct ShareTree {
  std::vector<Element> values;  // per node
  std::vector<Element> slopes;  // per node; zero at leaves

  // Leaf values in frontier order.
  std::vector<Element> leaf_shares(const TreeShape& shape) const;
};

ShareTree recursive_shares(const TreeShape& shape, const Field& field, Element y, Rng& rng);
// Uses the given slope for every internal node (indexed by node).
ShareTree recursive_shares(const TreeShape& shape, const Field& field, Element y,
                           std::span<const Element> slopes);

inline ShareTree recursive_shares(const LabeledTree& tree, const Field& field, Element y, Rng& rng) {
  return recursive_shares(tree.shape(), field, y, rng);
}

// Intercept of the line through (-1, left) and (1, right).
inline Element reconstruct_step(const Field& field, Element left, Element right) {
  return field.half(field.add(left, right));
}

// Bottom-up values for every node; leaf shares in frontier order. Throws
// std::invalid_argument if the count does not match the tree.
std::vector<Element> reconstruct_all(const TreeShape& shape, const Field& field,
                                     std::span<const Element> shares);

// Missing shares (nullopt) are rejected with std::invalid_argument.
Element reconstruct_root(const TreeShape& shape, const Field& field,
                         std::span<const std::optional<Element>> shares);
Element reconstruct_root(const TreeShape& shape, const Field& field, std::span<const Element> shares);

// Exact conditional distribution of the root value given some revealed leaf
// values, with the root value uniform a priori. weights[v] counts the
// (root, slopes) assignments consistent with the reveal whose root is v.
struct RootDistribution {
  std::vector<std::uint64_t> weights;
  std::uint64_t total = 0;

  bool uniform() const;
  bool point_mass_at(Element v) const;
};

inline constexpr std::uint64_t kSecrecyOracleBudget = 1u << 22;

// Brute force over all slope assignments. `revealed` holds frontier
// positions, `values` the observed shares at those positions. Throws
// std::length_error if q^(internal nodes + 1) exceeds the budget.
RootDistribution secrecy_oracle(const TreeShape& shape, const Field& field,
                                std::span<const std::size_t> revealed,
                                std::span<const Element> values);

}  // namespace ratshare
