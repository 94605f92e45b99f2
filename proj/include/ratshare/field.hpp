#pragma once

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ratshare/rng.hpp"

namespace ratshare {

using Rational = boost::rational<std::int64_t>;

// Parses "7", "3/2" or "1.25" into an exact rational.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

// Canonical residue in [0, q).
struct Element {
  std::uint64_t value = 0;

  friend auto operator<=>(const Element&, const Element&) = default;
};

enum class ArithOp { add, sub, mul, inv, neg };

bool is_prime(std::uint64_t x);
// Smallest prime strictly greater than x.
std::uint64_t next_prime_above(std::uint64_t x);

// Arithmetic in the prime field F_q. Moduli are kept below 2^32 so that
// products fit in 64 bits.
class Field {
 public:
  explicit Field(std::uint64_t q);

  std::uint64_t modulus() const { return q_; }
  // ceil(log2 q): bits in the canonical encoding of one element.
  unsigned bit_width() const { return bits_; }
  unsigned byte_width() const { return (bits_ + 7) / 8; }

  Element element(std::int64_t v) const;
  bool contains(Element a) const { return a.value < q_; }

  Element add(Element a, Element b) const {
    const std::uint64_t s = a.value + b.value;
    return {s >= q_ ? s - q_ : s};
  }
  Element sub(Element a, Element b) const {
    return {a.value >= b.value ? a.value - b.value : a.value + q_ - b.value};
  }
  Element neg(Element a) const { return {a.value == 0 ? 0 : q_ - a.value}; }
  Element mul(Element a, Element b) const { return {(a.value * b.value) % q_}; }
  Element pow(Element a, std::uint64_t e) const;
  // Throws std::domain_error for a == 0.
  Element inv(Element a) const;
  // a / 2, using the cached inverse of 2.
  Element half(Element a) const { return mul(a, inv2_); }

  Element random(Rng& rng) const { return {rng.below(q_)}; }
  Element random_nonzero(Rng& rng) const { return {1 + rng.below(q_ - 1)}; }
  // Uniform over F \ {avoid}.
  Element random_other_than(Element avoid, Rng& rng) const {
    return add(avoid, random_nonzero(rng));
  }

  // Unsigned big-endian, exactly byte_width() bytes.
  void encode(Element a, std::vector<std::uint8_t>& out) const;
  // Throws std::invalid_argument on short input or a non-canonical value.
  Element decode(std::span<const std::uint8_t> bytes) const;

  friend bool operator==(const Field& a, const Field& b) { return a.q_ == b.q_; }

 private:
  std::uint64_t q_;
  unsigned bits_;
  Element inv2_;
};

Element arith(const Field& field, Element a, Element b, ArithOp op);

struct FieldSpec {
  std::uint64_t q = 0;
  std::uint32_t n = 0;
  std::uint64_t s_size = 0;

  Field field() const { return Field(q); }
};

// 2 U |S| / (|S| - U): below this player count the field is enlarged so
// that forgery stays unprofitable.
Rational small_n_bound(std::uint64_t s_size, Rational u_ratio);

// Smallest admissible prime for (n, |S|, U). Throws std::invalid_argument
// when n < 3, |S| < 2, U < 1 or U >= |S|.
FieldSpec select_field(std::uint32_t n, std::uint64_t s_size, Rational u_ratio);

}  // namespace ratshare
