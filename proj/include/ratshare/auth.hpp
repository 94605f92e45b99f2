#pragma once

#include "ratshare/field.hpp"
#include "ratshare/rng.hpp"

namespace ratshare {

// One-time information-theoretic authentication of a single field element:
// the sender holds a, the receiver holds (b, c) with c = y + b*a, b != 0.

struct AuthTag {
  Element a;

  friend bool operator==(const AuthTag&, const AuthTag&) = default;
};

struct VerificationVector {
  Element b;
  Element c;

  friend bool operator==(const VerificationVector&, const VerificationVector&) = default;
};

struct AuthData {
  AuthTag tag;
  VerificationVector check;
};

inline AuthData create_auth(const Field& field, Element y, Element a, Element b) {
  return {AuthTag{a}, VerificationVector{b, field.add(y, field.mul(b, a))}};
}

inline AuthData create_auth(const Field& field, Element y, Rng& rng) {
  const Element a = field.random(rng);
  const Element b = field.random_nonzero(rng);
  return create_auth(field, y, a, b);
}

// Receiver-side check; false is a fault signal, not an error.
inline bool verify(const Field& field, Element y, AuthTag tag, const VerificationVector& v) {
  return v.c == field.add(y, field.mul(v.b, tag.a));
}

// Padding indistinguishable from a real verification vector.
inline VerificationVector random_verification(const Field& field, Rng& rng) {
  const Element b = field.random_nonzero(rng);
  return {b, field.random(rng)};
}

}  // namespace ratshare
