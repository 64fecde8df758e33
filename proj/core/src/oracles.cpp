#include "hrvtx/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <vector>

#include "hrvtx/errors.hpp"

namespace hrvtx::oracle {

namespace {

std::vector<double> successive_diffs(std::span<const double> nn) {
  std::vector<double> d;
  for (std::size_t i = 1; i < nn.size(); ++i) d.push_back(nn[i] - nn[i - 1]);
  return d;
}

double percentile_linear(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const double lo = std::floor(h);
  const std::size_t i = static_cast<std::size_t>(lo);
  if (i + 1 >= values.size()) return values.back();
  return values[i] * (1.0 - (h - lo)) + values[i + 1] * (h - lo);
}

}  // namespace

double mean_nn(std::span<const double> nn) {
  double s = 0.0;
  for (double v : nn) s += v;
  return s / static_cast<double>(nn.size());
}

double sdnn(std::span<const double> nn) {
  const double mu = mean_nn(nn);
  double s = 0.0;
  for (double v : nn) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(nn.size() - 1));
}

double rmssd(std::span<const double> nn) {
  const auto d = successive_diffs(nn);
  double s = 0.0;
  for (double v : d) s += v * v;
  return std::sqrt(s / static_cast<double>(d.size()));
}

double iqr_nn(std::span<const double> nn) {
  std::vector<double> v(nn.begin(), nn.end());
  return percentile_linear(v, 0.75) - percentile_linear(v, 0.25);
}

double pnn_above(std::span<const double> nn, double threshold_ms) {
  const auto d = successive_diffs(nn);
  double count = 0.0;
  for (double v : d) {
    if (std::abs(v) > threshold_ms) count += 1.0;
  }
  return 100.0 * count / static_cast<double>(d.size());
}

GeometricResult geometric_indices(std::span<const double> nn, double bin_ms) {
  std::map<long, double> hist;
  for (double v : nn) hist[static_cast<long>(std::floor(v / bin_ms))] += 1.0;

  long modal = hist.begin()->first;
  double peak = 0.0;
  for (const auto& [bin, count] : hist) {
    if (count > peak) {
      peak = count;
      modal = bin;
    }
  }
  const double hti = static_cast<double>(nn.size()) / peak;
  if (hist.size() == 1) return {0.0, hti};

  const long first = hist.begin()->first;
  const long last = hist.rbegin()->first;
  const double apex_x = (static_cast<double>(modal) + 0.5) * bin_ms;

  // Triangle height at x for base [n_edge, m_edge] and apex (apex_x, peak).
  auto triangle = [&](double x, double n_edge, double m_edge) {
    if (x <= n_edge || x >= m_edge) return 0.0;
    if (x < apex_x) return peak * (x - n_edge) / (apex_x - n_edge);
    if (x > apex_x) return peak * (m_edge - x) / (m_edge - apex_x);
    return peak;
  };

  double best = std::numeric_limits<double>::infinity();
  double tinn = 0.0;
  for (long nb = first; nb <= modal; ++nb) {
    for (long mb = modal + 1; mb <= last + 1; ++mb) {
      const double n_edge = static_cast<double>(nb) * bin_ms;
      const double m_edge = static_cast<double>(mb) * bin_ms;
      double sse = 0.0;
      for (long bin = first; bin <= last; ++bin) {
        const double x = (static_cast<double>(bin) + 0.5) * bin_ms;
        const auto it = hist.find(bin);
        const double count = it == hist.end() ? 0.0 : it->second;
        const double err = count - triangle(x, n_edge, m_edge);
        sse += err * err;
      }
      if (sse < best) {
        best = sse;
        tinn = m_edge - n_edge;
      }
    }
  }
  return {tinn, hti};
}

namespace {

// Natural cubic spline second derivatives via a dense solve with partial
// pivoting; nothing shared with the production tridiagonal path.
std::vector<double> spline_second_derivatives(const std::vector<double>& x,
                                              const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  a[0][0] = 1.0;
  a[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    a[i][i - 1] = h0;
    a[i][i] = 2.0 * (h0 + h1);
    a[i][i + 1] = h1;
    a[i][n] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
  }
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = a[i][n] / a[i][i];
  return m;
}

double spline_eval(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& m, double t) {
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  std::size_t i = 0;
  while (i + 2 < x.size() && x[i + 1] <= t) ++i;
  const double h = x[i + 1] - x[i];
  const double a = (x[i + 1] - t) / h;
  const double b = (t - x[i]) / h;
  return a * y[i] + b * y[i + 1] +
         ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
}

}  // namespace

SpectralResult frequency_domain(std::span<const double> beat_times_s,
                                std::span<const double> nn_ms,
                                const FeatureConfig& cfg) {
  const std::vector<double> x(beat_times_s.begin(), beat_times_s.end());
  const std::vector<double> y(nn_ms.begin(), nn_ms.end());
  const auto second = spline_second_derivatives(x, y);

  const double fs = cfg.resample_hz;
  const std::size_t samples =
      static_cast<std::size_t>(std::floor((x.back() - x.front()) * fs)) + 1;
  std::vector<double> signal(samples);
  for (std::size_t j = 0; j < samples; ++j) {
    signal[j] = spline_eval(x, y, second, x.front() + static_cast<double>(j) / fs);
  }
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(samples);
  for (double& v : signal) v -= mean;

  const std::size_t window_len =
      static_cast<std::size_t>(std::llround(cfg.welch_window_s * fs));
  if (signal.size() < window_len) {
    throw DataError("oracle spectrum: signal shorter than one window");
  }
  const std::size_t step =
      std::max<std::size_t>(1, window_len - static_cast<std::size_t>(std::llround(
                                   static_cast<double>(window_len) * cfg.welch_overlap)));

  std::vector<double> window(window_len);
  double wss = 0.0;
  for (std::size_t j = 0; j < window_len; ++j) {
    window[j] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                      static_cast<double>(window_len)));
    wss += window[j] * window[j];
  }

  const std::size_t half = window_len / 2;
  std::vector<double> power(half + 1, 0.0);
  std::size_t segments = 0;
  for (std::size_t start = 0; start + window_len <= signal.size(); start += step) {
    for (std::size_t k = 0; k <= half; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t j = 0; j < window_len; ++j) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) *
                           static_cast<double>(j) / static_cast<double>(window_len);
        acc += signal[start + j] * window[j] *
               std::complex<double>(std::cos(ang), std::sin(ang));
      }
      power[k] += std::norm(acc);
    }
    ++segments;
  }
  std::vector<double> freq(half + 1);
  for (std::size_t k = 0; k <= half; ++k) {
    freq[k] = static_cast<double>(k) * fs / static_cast<double>(window_len);
    power[k] /= fs * wss * static_cast<double>(segments);
    const bool nyquist = (window_len % 2 == 0) && (k == half);
    if (k != 0 && !nyquist) power[k] *= 2.0;
  }

  auto band = [&](double lo, double hi) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k <= half; ++k) {
      if (freq[k] >= lo && freq[k] <= hi) idx.push_back(k);
    }
    double total = 0.0;
    for (std::size_t q = 0; q + 1 < idx.size(); ++q) {
      if (idx[q + 1] != idx[q] + 1) continue;
      total += 0.5 * (power[idx[q]] + power[idx[q + 1]]) * (freq[idx[q + 1]] - freq[idx[q]]);
    }
    return total;
  };

  SpectralResult out;
  out.lf = band(cfg.bands.lf_lo, cfg.bands.lf_hi);
  out.hf = band(cfg.bands.lf_hi, cfg.bands.hf_hi);
  out.vhf = band(cfg.bands.hf_hi, cfg.bands.vhf_hi);
  return out;
}

PoincareResult poincare_widths(std::span<const double> nn) {
  const auto d = successive_diffs(nn);
  double ssd = 0.0;
  for (double v : d) ssd += v * v;
  const double msd = ssd / static_cast<double>(d.size());
  const double var = sdnn(nn) * sdnn(nn);
  PoincareResult out;
  out.sd1 = std::sqrt(0.5 * msd);
  out.sd2 = std::sqrt(std::max(0.0, 2.0 * var - 0.5 * msd));
  return out;
}

FragmentationResult fragmentation_indices(std::span<const double> nn) {
  const auto d = successive_diffs(nn);
  auto sign_of = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };

  std::vector<std::size_t> inflections;
  for (std::size_t i = 1; i < d.size(); ++i) {
    const int s0 = sign_of(d[i - 1]);
    const int s1 = sign_of(d[i]);
    const bool change = (s0 * s1 < 0) || (s0 == 0) != (s1 == 0);
    if (change) inflections.push_back(i);
  }

  FragmentationResult out;
  out.pip = 100.0 * static_cast<double>(inflections.size()) /
            static_cast<double>(d.size());

  std::vector<bool> covered(nn.size(), false);
  std::size_t q = 0;
  while (q < inflections.size()) {
    std::size_t r = q;
    while (r + 1 < inflections.size() && inflections[r + 1] == inflections[r] + 1) ++r;
    const std::size_t run = r - q + 1;
    if (run + 1 >= 3) {
      for (std::size_t idx = inflections[q] - 1; idx <= inflections[r] + 1; ++idx) {
        covered[idx] = true;
      }
    }
    q = r + 1;
  }
  double c = 0.0;
  for (bool b : covered) c += b ? 1.0 : 0.0;
  out.pas = 100.0 * c / static_cast<double>(nn.size());
  return out;
}

AsymmetryResult asymmetry_indices(std::span<const double> nn) {
  double below = 0.0;
  double above = 0.0;
  double below_count = 0.0;
  double above_count = 0.0;
  for (std::size_t i = 1; i < nn.size(); ++i) {
    const double x = nn[i - 1];
    const double yv = nn[i];
    if (yv == x) continue;
    const double weight =
        (x * x + yv * yv) * std::abs(std::atan2(yv, x) - std::numbers::pi / 4.0);
    if (yv < x) {
      below += weight;
      below_count += 1.0;
    } else {
      above += weight;
      above_count += 1.0;
    }
  }
  if (below_count + above_count == 0.0) {
    throw DataError("oracle asymmetry: all points on the identity line");
  }
  return {100.0 * below / (below + above),
          100.0 * below_count / (below_count + above_count)};
}

double approximate_entropy(std::span<const double> nn, int m, double r_factor) {
  const double sd = sdnn(nn);
  if (sd == 0.0) return 0.0;
  const double r = r_factor * sd;
  const std::size_t n = nn.size();

  auto phi = [&](std::size_t order) {
    const std::size_t windows = n - order + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < windows; ++i) {
      double matches = 0.0;
      for (std::size_t j = 0; j < windows; ++j) {
        double worst = 0.0;
        for (std::size_t k = 0; k < order; ++k) {
          worst = std::max(worst, std::abs(nn[i + k] - nn[j + k]));
        }
        if (worst <= r) matches += 1.0;
      }
      total += std::log(matches / static_cast<double>(windows));
    }
    return total / static_cast<double>(windows);
  };
  return phi(static_cast<std::size_t>(m)) - phi(static_cast<std::size_t>(m) + 1);
}

HrvVector compute_feature_vector(std::span<const double> nn_ms,
                                 const FeatureConfig& cfg) {
  std::vector<double> times;
  double t = 0.0;
  for (double v : nn_ms) {
    times.push_back(t);
    t += v / 1000.0;
  }

  HrvVector v;
  v.rmssd = rmssd(nn_ms);
  v.meannn = mean_nn(nn_ms);
  v.sdnn = sdnn(nn_ms);
  v.iqrnn = iqr_nn(nn_ms);
  v.pnn50 = pnn_above(nn_ms, 50.0);
  v.pnn20 = pnn_above(nn_ms, 20.0);
  const auto geo = geometric_indices(nn_ms, cfg.hist_bin_ms);
  v.tinn = geo.tinn_ms;
  v.hti = geo.hti;
  const auto spec = oracle::frequency_domain(times, nn_ms, cfg);
  v.lf = spec.lf;
  v.hf = spec.hf;
  v.vhf = spec.vhf;
  const auto poin = poincare_widths(nn_ms);
  v.sd1 = poin.sd1;
  v.sd2 = poin.sd2;
  const auto frag = fragmentation_indices(nn_ms);
  v.pip = frag.pip;
  v.pas = frag.pas;
  const auto asym = asymmetry_indices(nn_ms);
  v.ai = asym.ai;
  v.pi = asym.pi;
  v.apen = approximate_entropy(nn_ms, cfg.apen_m, cfg.apen_r_factor);
  return v;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  std::vector<double> pooled(sa);
  pooled.insert(pooled.end(), sb.begin(), sb.end());
  std::sort(pooled.begin(), pooled.end());

  double d = 0.0;
  for (double t : pooled) {
    const double f1 =
        static_cast<double>(std::upper_bound(sa.begin(), sa.end(), t) - sa.begin()) /
        static_cast<double>(sa.size());
    const double f2 =
        static_cast<double>(std::upper_bound(sb.begin(), sb.end(), t) - sb.begin()) /
        static_cast<double>(sb.size());
    d = std::max(d, std::abs(f1 - f2));
  }
  return d;
}

}  // namespace hrvtx::oracle
