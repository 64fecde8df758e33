#pragma once

#include <complex>
#include <vector>

namespace hrvtx::dsp {

// Natural cubic spline (zero second derivative at both ends) through
// strictly increasing knots. Evaluation outside [x.front(), x.back()] is
// clamped to the end values; callers never sample there.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
};

// In-place iterative radix-2 transform; size must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& a);
// Direct O(n^2) transform for arbitrary sizes.
std::vector<std::complex<double>> dft(const std::vector<double>& x);
// Dispatches to fft_pow2 when the size allows, dft otherwise.
std::vector<std::complex<double>> forward_dft(const std::vector<double>& x);

struct Psd {
  std::vector<double> frequency_hz;
  std::vector<double> density;  // one-sided, input-units^2 per Hz
};

// Welch periodogram with a periodic Hann window and 50%-style overlap given
// by step = window_len - round(window_len * overlap). Segments are scaled by
// 1 / (fs * sum(w^2)) and one-sided bins are doubled (DC and Nyquist
// excepted). The signal must be at least one window long.
Psd welch_psd(const std::vector<double>& signal, double sample_rate_hz,
              std::size_t window_len, double overlap);

// Trapezoidal integral of the PSD over grid points with lo <= f <= hi.
double band_power(const Psd& psd, double lo_hz, double hi_hz);

}  // namespace hrvtx::dsp
