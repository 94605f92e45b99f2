#include <stdexcept>
#include <map>
#include <vector>

#include "doctest.h"
#include "ratshare/iterated_shares.hpp"

using namespace ratshare;

namespace {

// Four-leaf tree in heap layout: root 0, internal 1 and 2, leaves 3..6.
// Leaf shares straight from the line rule, without the library.
std::array<std::uint64_t, 4> four_leaf_shares(std::uint64_t q, std::uint64_t y, std::uint64_t m0, std::uint64_t m1,
                                              std::uint64_t m2) {
  const std::uint64_t l = (y + q - m0) % q, r = (y + m0) % q;
  return {(l + q - m1) % q, (l + m1) % q, (r + q - m2) % q, (r + m2) % q};
}

}  // namespace

TEST_CASE("line encoding examples") {
  const Field f(11);
  const TreeShape two = TreeShape::complete(2);
  const std::vector<Element> slopes{Element{2}, Element{0}, Element{0}};
  const ShareTree st = recursive_shares(two, f, Element{3}, slopes);
  CHECK(st.leaf_shares(two) == std::vector<Element>{Element{1}, Element{5}});

  const TreeShape eight = TreeShape::complete(8);
  const std::vector<Element> zeros(eight.size(), Element{0});
  const ShareTree z = recursive_shares(eight, f, Element{0}, zeros);
  for (Element v : z.values) CHECK(v == Element{0});
}

TEST_CASE("reconstruct_step examples") {
  CHECK(reconstruct_step(Field(11), Element{1}, Element{5}) == Element{3});
  CHECK(reconstruct_step(Field(11), Element{4}, Element{4}) == Element{4});
  CHECK(reconstruct_step(Field(7), Element{6}, Element{1}) == Element{0});
  const TreeShape two = TreeShape::complete(2);
  const std::vector<Element> shares{Element{1}, Element{5}};
  CHECK(reconstruct_root(two, Field(11), shares) == Element{3});
}

TEST_CASE("golden four-leaf vector over F_5") {
  const Field f(5);
  const TreeShape four = TreeShape::complete(4);
  Rng rng(20240611);
  const ShareTree st = recursive_shares(four, f, Element{2}, rng);
  const std::vector<Element> golden{Element{1}, Element{3}, Element{4}, Element{0}};
  CHECK(st.leaf_shares(four) == golden);
  CHECK(reconstruct_root(four, f, golden) == Element{2});
  // agrees with the hand-rolled line rule for the recorded slopes
  const auto hand = four_leaf_shares(5, 2, st.slopes[0].value, st.slopes[1].value, st.slopes[2].value);
  for (std::size_t i = 0; i < 4; ++i) CHECK(hand[i] == golden[i].value);
}

TEST_CASE("round trip for 2..64 leaves") {
  for (std::uint64_t q : {5ull, 11ull, 1031ull}) {
    const Field f(q);
    for (std::size_t leaves = 2; leaves <= 64; ++leaves) {
      const TreeShape shape = TreeShape::complete(leaves);
      Rng rng(leaves * 31 + q);
      for (int rep = 0; rep < 8; ++rep) {
        const Element y = f.random(rng);
        const ShareTree st = recursive_shares(shape, f, y, rng);
        const auto shares = st.leaf_shares(shape);
        CHECK(reconstruct_root(shape, f, shares) == y);
        CHECK(reconstruct_all(shape, f, shares) == st.values);
      }
    }
  }
  const TreeShape four = TreeShape::complete(4);
  for (std::uint64_t y = 0; y < 5; ++y) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const ShareTree st = recursive_shares(four, Field(5), Element{y}, rng);
      CHECK(reconstruct_root(four, Field(5), st.leaf_shares(four)) == Element{y});
    }
  }
}

TEST_CASE("reconstruction input checks") {
  const TreeShape four = TreeShape::complete(4);
  const std::vector<Element> three(3);
  CHECK_THROWS_AS(reconstruct_root(four, Field(5), three), std::invalid_argument);
  std::vector<std::optional<Element>> partial(4, Element{1});
  partial[2].reset();
  CHECK_THROWS_AS(reconstruct_root(four, Field(5), std::span<const std::optional<Element>>(partial)),
                  std::invalid_argument);
}

TEST_CASE("secrecy oracle matches brute force for every reveal over F_5") {
  const std::uint64_t q = 5;
  const Field f(q);
  const TreeShape four = TreeShape::complete(4);
  // counts[subset mask][observed values] -> root histogram
  std::map<std::pair<unsigned, std::vector<std::uint64_t>>, std::array<std::uint64_t, 5>> counts;
  for (std::uint64_t y = 0; y < q; ++y) {
    for (std::uint64_t a = 0; a < q; ++a) {
      for (std::uint64_t b = 0; b < q; ++b) {
        for (std::uint64_t c = 0; c < q; ++c) {
          const auto leaves = four_leaf_shares(q, y, a, b, c);
          for (unsigned mask = 0; mask < 16; ++mask) {
            std::vector<std::uint64_t> seen;
            for (unsigned i = 0; i < 4; ++i) {
              if (mask >> i & 1) seen.push_back(leaves[i]);
            }
            counts[{mask, seen}][y] += 1;
          }
        }
      }
    }
  }
  for (const auto& [key, hist] : counts) {
    const auto& [mask, seen] = key;
    std::vector<std::size_t> positions;
    for (unsigned i = 0; i < 4; ++i) {
      if (mask >> i & 1) positions.push_back(i);
    }
    std::vector<Element> values;
    for (auto v : seen) values.push_back(Element{v});
    const RootDistribution d = secrecy_oracle(four, f, positions, values);
    CAPTURE(mask);
    for (std::uint64_t y = 0; y < q; ++y) CHECK(d.weights[y] == hist[y]);
    if (mask != 15) {
      CHECK(d.uniform());
    } else {
      const Element root = reconstruct_root(four, f, values);
      CHECK(d.point_mass_at(root));
    }
  }
}

TEST_CASE("secrecy oracle budget") {
  const TreeShape big = TreeShape::complete(64);
  const std::vector<std::size_t> none;
  const std::vector<Element> no_values;
  CHECK_THROWS_AS(secrecy_oracle(big, Field(5), none, no_values), std::length_error);
}
