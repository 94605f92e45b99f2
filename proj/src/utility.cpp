#include "ratshare/utility.hpp"

#include <stdexcept>
#include <string>

namespace ratshare {

double PlayerUtility::cheat_threshold() const {
  if (u_plus == u_minus) return 1.0;
  return boost::rational_cast<double>((u - u_minus) / (u_plus - u_minus));
}

UtilityProfile UtilityProfile::uniform(std::uint32_t n, PlayerUtility u) {
  return UtilityProfile(std::vector<PlayerUtility>(n, u));
}

void UtilityProfile::validate() const {
  if (players_.empty()) throw std::invalid_argument("utility profile is empty");
  for (std::size_t j = 0; j < players_.size(); ++j) {
    const PlayerUtility& p = players_[j];
    if (!(p.u > p.u_minus)) {
      throw std::invalid_argument("player " + std::to_string(j) + ": U must exceed U- (got U=" + to_string(p.u) +
                                  ", U-=" + to_string(p.u_minus) + ")");
    }
    if (p.u_plus < p.u) {
      throw std::invalid_argument("player " + std::to_string(j) + ": U+ must be at least U (got U+=" +
                                  to_string(p.u_plus) + ", U=" + to_string(p.u) + ")");
    }
  }
}

Rational UtilityProfile::max_ratio() const {
  validate();
  Rational best = players_.front().ratio();
  for (const PlayerUtility& p : players_) best = std::max(best, p.ratio());
  return best;
}

}  // namespace ratshare
