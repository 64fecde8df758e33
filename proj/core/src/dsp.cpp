#include "hrvtx/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hrvtx/errors.hpp"

namespace hrvtx::dsp {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw DataError("spline: x and y sizes differ");
  if (n < 2) throw DataError("spline: need at least two knots");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(x_[i] < x_[i + 1])) {
      throw DataError("spline: knots must be strictly increasing");
    }
  }

  m_.assign(n, 0.0);
  if (n == 2) return;  // degenerates to the connecting line

  // Thomas solve of the tridiagonal system for interior second derivatives;
  // natural ends pin m_0 = m_{n-1} = 0.
  const std::size_t interior = n - 2;
  std::vector<double> diag(interior), rhs(interior), upper(interior, 0.0);
  for (std::size_t i = 0; i < interior; ++i) {
    const double h0 = x_[i + 1] - x_[i];
    const double h1 = x_[i + 2] - x_[i + 1];
    diag[i] = 2.0 * (h0 + h1);
    upper[i] = h1;
    rhs[i] = 6.0 * ((y_[i + 2] - y_[i + 1]) / h1 - (y_[i + 1] - y_[i]) / h0);
  }
  for (std::size_t i = 1; i < interior; ++i) {
    const double lower = x_[i + 1] - x_[i];  // h_i, sub-diagonal entry
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[interior] = rhs[interior - 1] / diag[interior - 1];
  for (std::size_t i = interior - 1; i >= 1; --i) {
    m_[i] = (rhs[i - 1] - upper[i - 1] * m_[i + 1]) / diag[i - 1];
  }
}

double CubicSpline::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
}

void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0) throw Error("fft_pow2: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

std::vector<std::complex<double>> dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                         static_cast<double>(j) / static_cast<double>(n);
      acc += x[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<std::complex<double>> forward_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n > 0 && (n & (n - 1)) == 0) {
    std::vector<std::complex<double>> a(x.begin(), x.end());
    fft_pow2(a);
    return a;
  }
  return dft(x);
}

Psd welch_psd(const std::vector<double>& signal, double sample_rate_hz,
              std::size_t window_len, double overlap) {
  if (sample_rate_hz <= 0.0) throw ConfigError("welch: sample rate must be positive");
  if (window_len < 2) throw ConfigError("welch: window must hold at least 2 samples");
  if (overlap < 0.0 || overlap >= 1.0) {
    throw ConfigError("welch: overlap must lie in [0, 1)");
  }
  if (signal.size() < window_len) {
    throw DataError("welch: signal shorter than one window (" +
                    std::to_string(signal.size()) + " < " +
                    std::to_string(window_len) + " samples)");
  }

  const std::size_t step = std::max<std::size_t>(
      1, window_len - static_cast<std::size_t>(
                          std::llround(static_cast<double>(window_len) * overlap)));

  std::vector<double> window(window_len);
  double u = 0.0;  // sum of squared window samples
  for (std::size_t j = 0; j < window_len; ++j) {
    window[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                      static_cast<double>(window_len)));
    u += window[j] * window[j];
  }

  const std::size_t half = window_len / 2;
  std::vector<double> acc(half + 1, 0.0);
  std::size_t segments = 0;
  std::vector<double> buf(window_len);
  for (std::size_t start = 0; start + window_len <= signal.size(); start += step) {
    for (std::size_t j = 0; j < window_len; ++j) buf[j] = signal[start + j] * window[j];
    const auto spec = forward_dft(buf);
    for (std::size_t k = 0; k <= half; ++k) acc[k] += std::norm(spec[k]);
    ++segments;
  }

  const double scale = 1.0 / (sample_rate_hz * u * static_cast<double>(segments));
  Psd psd;
  psd.frequency_hz.resize(half + 1);
  psd.density.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    psd.frequency_hz[k] =
        static_cast<double>(k) * sample_rate_hz / static_cast<double>(window_len);
    double d = acc[k] * scale;
    const bool nyquist = (window_len % 2 == 0) && (k == half);
    if (k != 0 && !nyquist) d *= 2.0;
    psd.density[k] = d;
  }
  return psd;
}

double band_power(const Psd& psd, double lo_hz, double hi_hz) {
  if (hi_hz <= lo_hz) throw ConfigError("band_power: band must have positive width");
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < psd.frequency_hz.size(); ++k) {
    const double f0 = psd.frequency_hz[k];
    const double f1 = psd.frequency_hz[k + 1];
    if (f0 < lo_hz || f1 > hi_hz) continue;
    total += 0.5 * (psd.density[k] + psd.density[k + 1]) * (f1 - f0);
  }
  return total;
}

}  // namespace hrvtx::dsp
