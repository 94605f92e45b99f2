#pragma once

#include <cstdint>
#include <vector>

#include "ratshare/field.hpp"

namespace ratshare {

struct PlayerUtility {
  Rational u_plus{1};   // learns, someone else does not
  Rational u{1};        // everyone learns
  Rational u_minus{0};  // does not learn

  // (U+ - U-) / (U - U-)
  Rational ratio() const { return (u_plus - u_minus) / (u - u_minus); }
  // (U - U-) / (U+ - U-); the success probability above which cheating pays.
  double cheat_threshold() const;
};

class UtilityProfile {
 public:
  UtilityProfile() = default;
  static UtilityProfile uniform(std::uint32_t n, PlayerUtility u);
  explicit UtilityProfile(std::vector<PlayerUtility> players) : players_(std::move(players)) {}

  std::uint32_t size() const { return static_cast<std::uint32_t>(players_.size()); }
  const PlayerUtility& of(std::uint32_t player) const { return players_.at(player); }
  PlayerUtility& of(std::uint32_t player) { return players_.at(player); }

  // Throws std::invalid_argument naming the first player with U+ < U or U <= U-.
  void validate() const;
  // max over players of the per-player ratio.
  Rational max_ratio() const;

 private:
  std::vector<PlayerUtility> players_;
};

}  // namespace ratshare
