#include "hrvtx/rng.hpp"

#include <cmath>
#include <numbers>

namespace hrvtx {

std::pair<double, double> SplitMix64::next_gaussian_pair() {
  const double u1 = next_double_open0();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

SplitMix64 SplitMix64::fork(std::uint64_t label) const {
  SplitMix64 mixer(state_ ^ (0x9e3779b97f4a7c15ULL * (label + 1)));
  return SplitMix64(mixer.next_u64());
}

}  // namespace hrvtx
