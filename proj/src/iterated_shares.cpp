#include "ratshare/iterated_shares.hpp"

#include <stdexcept>

namespace ratshare {

namespace {

template <class SlopeFn>
ShareTree encode(const TreeShape& shape, const Field& field, Element y, SlopeFn&& slope_for) {
  ShareTree out;
  out.values.assign(shape.size(), Element{});
  out.slopes.assign(shape.size(), Element{});
  out.values[0] = y;
  // Preorder: a node's slope is drawn before anything in its left subtree.
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t w = stack.back();
    stack.pop_back();
    const TreeNode& node = shape.node(w);
    if (node.is_leaf()) continue;
    const Element mu = slope_for(w);
    out.slopes[w] = mu;
    out.values[node.left] = field.sub(out.values[w], mu);
    out.values[node.right] = field.add(out.values[w], mu);
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  return out;
}

}  // namespace

std::vector<Element> ShareTree::leaf_shares(const TreeShape& shape) const {
  std::vector<Element> leaves;
  leaves.reserve(shape.leaf_count());
  for (std::size_t node : shape.frontier()) leaves.push_back(values[node]);
  return leaves;
}

ShareTree recursive_shares(const TreeShape& shape, const Field& field, Element y, Rng& rng) {
  return encode(shape, field, y, [&](std::size_t) { return field.random(rng); });
}

ShareTree recursive_shares(const TreeShape& shape, const Field& field, Element y,
                           std::span<const Element> slopes) {
  if (slopes.size() != shape.size()) throw std::invalid_argument("need one slope slot per node");
  return encode(shape, field, y, [&](std::size_t w) { return slopes[w]; });
}

std::vector<Element> reconstruct_all(const TreeShape& shape, const Field& field,
                                     std::span<const Element> shares) {
  if (shares.size() != shape.leaf_count()) {
    throw std::invalid_argument("expected " + std::to_string(shape.leaf_count()) + " leaf shares, got " +
                                std::to_string(shares.size()));
  }
  std::vector<Element> values(shape.size());
  for (std::size_t i = 0; i < shares.size(); ++i) values[shape.frontier()[i]] = shares[i];
  // Children always have larger heap indices than their parent.
  for (std::size_t w = shape.size(); w-- > 0;) {
    const TreeNode& node = shape.node(w);
    if (!node.is_leaf()) values[w] = reconstruct_step(field, values[node.left], values[node.right]);
  }
  return values;
}

Element reconstruct_root(const TreeShape& shape, const Field& field,
                         std::span<const std::optional<Element>> shares) {
  std::vector<Element> present;
  present.reserve(shares.size());
  for (std::size_t i = 0; i < shares.size(); ++i) {
    if (!shares[i]) throw std::invalid_argument("missing leaf share at position " + std::to_string(i));
    present.push_back(*shares[i]);
  }
  return reconstruct_all(shape, field, present)[0];
}

Element reconstruct_root(const TreeShape& shape, const Field& field, std::span<const Element> shares) {
  return reconstruct_all(shape, field, shares)[0];
}

bool RootDistribution::uniform() const {
  if (weights.empty() || total == 0) return false;
  for (std::uint64_t w : weights) {
    if (w * weights.size() != total) return false;
  }
  return true;
}

bool RootDistribution::point_mass_at(Element v) const {
  if (total == 0 || v.value >= weights.size()) return false;
  return weights[v.value] == total;
}

RootDistribution secrecy_oracle(const TreeShape& shape, const Field& field,
                                std::span<const std::size_t> revealed,
                                std::span<const Element> values) {
  if (revealed.size() != values.size()) throw std::invalid_argument("one value per revealed leaf");
  std::vector<std::size_t> internal;
  for (std::size_t w = 0; w < shape.size(); ++w) {
    if (!shape.node(w).is_leaf()) internal.push_back(w);
  }
  const std::uint64_t q = field.modulus();
  std::uint64_t combos = q;
  for (std::size_t i = 0; i < internal.size(); ++i) {
    combos *= q;
    if (combos > kSecrecyOracleBudget) throw std::length_error("secrecy oracle beyond exhaustive budget");
  }
  for (std::size_t pos : revealed) {
    if (pos >= shape.leaf_count()) throw std::out_of_range("revealed leaf out of range");
  }

  RootDistribution dist;
  dist.weights.assign(q, 0);
  std::vector<Element> slopes(shape.size());
  std::vector<std::uint64_t> digits(internal.size() + 1, 0);
  for (std::uint64_t c = 0; c < combos; ++c) {
    const Element y{digits[0]};
    for (std::size_t i = 0; i < internal.size(); ++i) slopes[internal[i]] = Element{digits[i + 1]};
    const ShareTree st = recursive_shares(shape, field, y, slopes);
    bool consistent = true;
    for (std::size_t i = 0; i < revealed.size() && consistent; ++i) {
      consistent = st.values[shape.frontier()[revealed[i]]] == values[i];
    }
    if (consistent) {
      ++dist.weights[y.value];
      ++dist.total;
    }
    for (std::size_t d = 0; d < digits.size(); ++d) {
      if (++digits[d] < q) break;
      digits[d] = 0;
    }
  }
  return dist;
}

}  // namespace ratshare
