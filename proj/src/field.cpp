#include "ratshare/field.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <stdexcept>

namespace ratshare {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw std::invalid_argument("not a rational number: '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = text;
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    const std::int64_t num = parse_int(text.substr(0, slash), whole);
    const std::int64_t den = parse_int(text.substr(slash + 1), whole);
    if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(whole) + "'");
    return Rational(num, den);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = text.substr(0, dot);
    const std::string_view frac = text.substr(dot + 1);
    bool negative = false;
    if (!int_part.empty() && (int_part.front() == '-' || int_part.front() == '+')) {
      negative = int_part.front() == '-';
      int_part.remove_prefix(1);
    }
    if (frac.size() > 15 || frac.empty()) {
      throw std::invalid_argument("unsupported decimal precision in '" + std::string(whole) + "'");
    }
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::int64_t ip = int_part.empty() ? 0 : parse_int(int_part, whole);
    const std::int64_t fp = parse_int(frac, whole);
    if (ip < 0 || fp < 0) throw std::invalid_argument("not a rational number: '" + std::string(whole) + "'");
    Rational r(ip * den + fp, den);
    return negative ? -r : r;
  }
  return Rational(parse_int(text, whole));
}

std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

bool is_prime(std::uint64_t x) {
  if (x < 2) return false;
  if (x % 2 == 0) return x == 2;
  for (std::uint64_t d = 3; d * d <= x; d += 2) {
    if (x % d == 0) return false;
  }
  return true;
}

std::uint64_t next_prime_above(std::uint64_t x) {
  std::uint64_t p = x + 1;
  while (!is_prime(p)) ++p;
  return p;
}

Field::Field(std::uint64_t q) : q_(q), bits_(0), inv2_{0} {
  if (q < 3 || q >= (1ULL << 32) || !is_prime(q)) {
    throw std::invalid_argument("field modulus must be an odd prime below 2^32, got " +
                                std::to_string(q));
  }
  bits_ = static_cast<unsigned>(std::bit_width(q - 1));
  inv2_ = Element{(q + 1) / 2};
}

Element Field::element(std::int64_t v) const {
  const auto m = static_cast<std::int64_t>(q_);
  std::int64_t r = v % m;
  if (r < 0) r += m;
  return {static_cast<std::uint64_t>(r)};
}

Element Field::pow(Element a, std::uint64_t e) const {
  Element result{1 % q_};
  while (e != 0) {
    if (e & 1) result = mul(result, a);
    a = mul(a, a);
    e >>= 1;
  }
  return result;
}

Element Field::inv(Element a) const {
  if (a.value % q_ == 0) throw std::domain_error("inverse of zero");
  return pow(a, q_ - 2);
}

void Field::encode(Element a, std::vector<std::uint8_t>& out) const {
  for (unsigned i = byte_width(); i-- > 0;) {
    out.push_back(static_cast<std::uint8_t>(a.value >> (8 * i)));
  }
}

Element Field::decode(std::span<const std::uint8_t> bytes) const {
  if (bytes.size() < byte_width()) throw std::invalid_argument("truncated field element");
  std::uint64_t v = 0;
  for (unsigned i = 0; i < byte_width(); ++i) v = (v << 8) | bytes[i];
  if (v >= q_) throw std::invalid_argument("non-canonical field element");
  return {v};
}

Element arith(const Field& field, Element a, Element b, ArithOp op) {
  switch (op) {
    case ArithOp::add: return field.add(a, b);
    case ArithOp::sub: return field.sub(a, b);
    case ArithOp::mul: return field.mul(a, b);
    case ArithOp::inv: return field.inv(a);
    case ArithOp::neg: return field.neg(a);
  }
  throw std::invalid_argument("unknown arithmetic op");
}

Rational small_n_bound(std::uint64_t s_size, Rational u_ratio) {
  const Rational s(static_cast<std::int64_t>(s_size));
  return 2 * u_ratio * s / (s - u_ratio);
}

FieldSpec select_field(std::uint32_t n, std::uint64_t s_size, Rational u_ratio) {
  if (n < 3) throw std::invalid_argument("need at least 3 players, got " + std::to_string(n));
  if (s_size < 2) throw std::invalid_argument("secret alphabet needs at least 2 symbols");
  if (u_ratio < 1) throw std::invalid_argument("utility ratio U must be >= 1");
  if (u_ratio >= Rational(static_cast<std::int64_t>(s_size))) {
    throw std::invalid_argument("utility ratio U = " + to_string(u_ratio) +
                                " violates U < |S| = " + std::to_string(s_size));
  }
  const Rational bound = small_n_bound(s_size, u_ratio);
  std::uint64_t floor_q = std::max<std::uint64_t>(n, s_size);
  if (Rational(n) < bound) {
    // q > B where B = max(|S|, bound); q integer so q > floor(B) suffices.
    const auto b_floor = static_cast<std::uint64_t>(bound.numerator() / bound.denominator());
    floor_q = std::max(floor_q, b_floor);
  }
  FieldSpec spec;
  spec.q = next_prime_above(floor_q);
  spec.n = n;
  spec.s_size = s_size;
  return spec;
}

}  // namespace ratshare
