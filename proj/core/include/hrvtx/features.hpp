#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace hrvtx {

// Spectral band edges in Hz.
struct BandConfig {
  double lf_lo = 0.04;
  double lf_hi = 0.15;
  double hf_hi = 0.40;
  double vhf_hi = 0.50;
};

struct FeatureConfig {
  BandConfig bands;
  double resample_hz = 4.0;
  double welch_window_s = 64.0;
  double welch_overlap = 0.5;
  int apen_m = 2;
  double apen_r_factor = 0.2;   // tolerance = factor * SDNN
  double hist_bin_ms = 7.8125;  // 1/128 s, the conventional geometric bin
};

// One HRV observation. Field order below is the canonical vector order used
// everywhere: CSV columns, matrices, model coordinates.
struct HrvVector {
  double rmssd = 0.0;
  double meannn = 0.0;
  double sdnn = 0.0;
  double iqrnn = 0.0;
  double pnn50 = 0.0;
  double pnn20 = 0.0;
  double tinn = 0.0;
  double hti = 0.0;
  double lf = 0.0;
  double hf = 0.0;
  double vhf = 0.0;
  double sd1 = 0.0;
  double sd2 = 0.0;
  double pip = 0.0;
  double pas = 0.0;
  double ai = 0.0;
  double pi = 0.0;
  double apen = 0.0;

  static constexpr std::size_t kDim = 18;
  std::array<double, kDim> values() const;
  static HrvVector from_values(const std::array<double, kDim>& v);
  // Lower-case machine names, in vector order.
  static const std::array<std::string_view, kDim>& names();
  // Names used in rendered reports.
  static const std::array<std::string_view, kDim>& display_names();
};

// Time domain. Sample statistics use the n-1 divisor; RMSSD divides the sum
// of squared successive differences by n-1 (the difference count).
double mean_nn(std::span<const double> nn);
double sdnn(std::span<const double> nn);
double rmssd(std::span<const double> nn);
// Interquartile range with linear interpolation at h = (n-1)p.
double iqr_nn(std::span<const double> nn);
// Percentage of successive differences strictly above threshold_ms,
// denominator n-1.
double pnn_above(std::span<const double> nn, double threshold_ms);

struct GeometricResult {
  double tinn_ms = 0.0;
  double hti = 0.0;
};
// Histogram with bin_ms-wide bins aligned at 0. HTI = n / modal count.
// TINN = M - N for the best least-squares triangle over bin centers, with
// apex fixed at the modal bin center and (N, M) searched over bin edges on
// either side of the mode. A single occupied bin yields tinn 0, hti 1.
GeometricResult geometric_indices(std::span<const double> nn, double bin_ms);

struct SpectralResult {
  double lf = 0.0;
  double hf = 0.0;
  double vhf = 0.0;
};
// Tachogram spectrum: cubic-spline interpolation of (beat_time, nn) onto a
// uniform grid at resample_hz starting at the first beat, mean removal over
// the whole grid, Welch PSD, trapezoidal band integration. Units ms^2 when
// nn is in ms. Requires enough signal for one Welch window.
SpectralResult frequency_domain(std::span<const double> beat_times_s,
                                std::span<const double> nn_ms,
                                const FeatureConfig& cfg);

struct PoincareResult {
  double sd1 = 0.0;
  double sd2 = 0.0;
};
// sd1 = rmssd / sqrt(2) exactly (successive-difference form); sd2 from
// 2*sdnn^2 - rmssd^2/2, clamped at zero before the square root.
PoincareResult poincare_widths(std::span<const double> nn);

struct FragmentationResult {
  double pip = 0.0;  // % inflection points among successive differences
  double pas = 0.0;  // % of nn values inside alternation runs spanning >= 3 differences
};
FragmentationResult fragmentation_indices(std::span<const double> nn);

struct AsymmetryResult {
  double ai = 0.0;  // % of off-diagonal phase-weighted power below the identity line
  double pi = 0.0;  // % of off-diagonal points below the identity line
};
// Throws DataError when every Poincare point lies on the identity line
// (constant series have no defined asymmetry).
AsymmetryResult asymmetry_indices(std::span<const double> nn);

// Approximate entropy with self-matches and Chebyshev distance <= r,
// r = r_factor * sdnn. A constant series returns 0.
double approximate_entropy(std::span<const double> nn, int m, double r_factor);

// All 18 indices for one segment. Beat times are reconstructed as the
// running sum of nn starting at zero, which matches the stored artifacts
// and is legitimate because every index is time-shift invariant.
HrvVector compute_feature_vector(std::span<const double> nn_ms,
                                 const FeatureConfig& cfg);

}  // namespace hrvtx
