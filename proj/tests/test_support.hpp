#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "hrvtx/rng.hpp"

namespace testsup {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(HRVTX_FIXTURE_DIR) / name;
}

// Relative closeness with an absolute floor for values that are both
// essentially zero.
inline bool close_rel(double a, double b, double rel_tol, double abs_floor = 1e-12) {
  const double diff = std::abs(a - b);
  if (diff <= abs_floor) return true;
  return diff <= rel_tol * std::max(std::abs(a), std::abs(b));
}

// Plausible NN series in milliseconds: a wandering baseline plus jitter,
// clipped away from zero. Deterministic in (seed, n).
inline std::vector<double> random_nn_series(std::uint64_t seed, std::size_t n,
                                            double base_ms = 800.0,
                                            double wander_ms = 40.0,
                                            double jitter_ms = 35.0) {
  hrvtx::SplitMix64 rng(seed);
  std::vector<double> nn(n);
  double level = base_ms + wander_ms * rng.next_gaussian();
  for (std::size_t i = 0; i < n; ++i) {
    level += 0.2 * (base_ms - level) + wander_ms * 0.3 * rng.next_gaussian();
    double v = level + jitter_ms * rng.next_gaussian();
    nn[i] = std::max(250.0, v);
  }
  return nn;
}

// Long-interval series whose total duration comfortably exceeds one Welch
// window even at 50 beats.
inline std::vector<double> random_slow_series(std::uint64_t seed, std::size_t n) {
  hrvtx::SplitMix64 rng(seed);
  std::vector<double> nn(n);
  for (std::size_t i = 0; i < n; ++i) nn[i] = rng.next_in(1350.0, 1700.0);
  return nn;
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("hrvtx_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsup
