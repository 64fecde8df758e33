#include "hrvtx/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "hrvtx/dsp.hpp"
#include "hrvtx/errors.hpp"

namespace hrvtx {

std::array<double, HrvVector::kDim> HrvVector::values() const {
  return {rmssd, meannn, sdnn, iqrnn, pnn50, pnn20, tinn, hti, lf,
          hf,    vhf,    sd1,  sd2,   pip,   pas,   ai,   pi,  apen};
}

HrvVector HrvVector::from_values(const std::array<double, kDim>& v) {
  HrvVector h;
  h.rmssd = v[0];
  h.meannn = v[1];
  h.sdnn = v[2];
  h.iqrnn = v[3];
  h.pnn50 = v[4];
  h.pnn20 = v[5];
  h.tinn = v[6];
  h.hti = v[7];
  h.lf = v[8];
  h.hf = v[9];
  h.vhf = v[10];
  h.sd1 = v[11];
  h.sd2 = v[12];
  h.pip = v[13];
  h.pas = v[14];
  h.ai = v[15];
  h.pi = v[16];
  h.apen = v[17];
  return h;
}

const std::array<std::string_view, HrvVector::kDim>& HrvVector::names() {
  static const std::array<std::string_view, kDim> kNames = {
      "rmssd", "meannn", "sdnn", "iqrnn", "pnn50", "pnn20", "tinn", "hti", "lf",
      "hf",    "vhf",    "sd1",  "sd2",   "pip",   "pas",   "ai",   "pi",  "apen"};
  return kNames;
}

const std::array<std::string_view, HrvVector::kDim>& HrvVector::display_names() {
  static const std::array<std::string_view, kDim> kNames = {
      "RMSSD", "MeanNN", "SDNN", "IQRNN", "pNN50", "pNN20", "TINN", "HTI", "LF",
      "HF",    "VHF",    "SD1",  "SD2",   "PIP",   "PAS",   "AI",   "PI",  "ApEn"};
  return kNames;
}

namespace {

void require_size(std::span<const double> nn, std::size_t min, const char* who) {
  if (nn.size() < min) {
    throw DataError(std::string(who) + ": need at least " + std::to_string(min) +
                    " values, got " + std::to_string(nn.size()));
  }
}

// Quantile with linear interpolation at rank h = (n-1) * p over sorted data.
double quantile_sorted(const std::vector<double>& s, double p) {
  const std::size_t n = s.size();
  const double h = static_cast<double>(n - 1) * p;
  const std::size_t i = static_cast<std::size_t>(h);
  if (i + 1 >= n) return s[n - 1];
  return s[i] + (h - static_cast<double>(i)) * (s[i + 1] - s[i]);
}

double sum_squared_succ_diff(std::span<const double> nn) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < nn.size(); ++i) {
    const double d = nn[i + 1] - nn[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

double mean_nn(std::span<const double> nn) {
  require_size(nn, 1, "mean_nn");
  double acc = 0.0;
  for (double v : nn) acc += v;
  return acc / static_cast<double>(nn.size());
}

double sdnn(std::span<const double> nn) {
  require_size(nn, 2, "sdnn");
  const double mu = mean_nn(nn);
  double acc = 0.0;
  for (double v : nn) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(nn.size() - 1));
}

double rmssd(std::span<const double> nn) {
  require_size(nn, 2, "rmssd");
  return std::sqrt(sum_squared_succ_diff(nn) / static_cast<double>(nn.size() - 1));
}

double iqr_nn(std::span<const double> nn) {
  require_size(nn, 1, "iqr_nn");
  std::vector<double> s(nn.begin(), nn.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
}

double pnn_above(std::span<const double> nn, double threshold_ms) {
  require_size(nn, 2, "pnn_above");
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < nn.size(); ++i) {
    if (std::abs(nn[i + 1] - nn[i]) > threshold_ms) ++count;
  }
  return 100.0 * static_cast<double>(count) / static_cast<double>(nn.size() - 1);
}

GeometricResult geometric_indices(std::span<const double> nn, double bin_ms) {
  require_size(nn, 1, "geometric_indices");
  if (bin_ms <= 0.0) throw ConfigError("histogram bin width must be positive");

  std::map<long, double> counts;
  for (double v : nn) {
    counts[static_cast<long>(std::floor(v / bin_ms))] += 1.0;
  }

  long modal = counts.begin()->first;
  double peak = 0.0;
  for (const auto& [j, c] : counts) {  // ascending j, so first max wins ties
    if (c > peak) {
      peak = c;
      modal = j;
    }
  }
  const double n = static_cast<double>(nn.size());
  if (counts.size() == 1) return {0.0, n / peak};

  const long jmin = counts.begin()->first;
  const long jmax = counts.rbegin()->first;
  const double apex_t = (static_cast<double>(modal) + 0.5) * bin_ms;

  auto bin_count = [&](long j) {
    auto it = counts.find(j);
    return it == counts.end() ? 0.0 : it->second;
  };

  // Exhaustive least-squares fit of a triangle rising from base point N to
  // the modal bin center and falling to base point M, both on bin edges.
  double best_sse = std::numeric_limits<double>::infinity();
  double best_n = 0.0;
  double best_m = 0.0;
  for (long jn = jmin; jn <= modal; ++jn) {
    const double np = static_cast<double>(jn) * bin_ms;
    for (long jm = modal + 1; jm <= jmax + 1; ++jm) {
      const double mp = static_cast<double>(jm) * bin_ms;
      double sse = 0.0;
      for (long j = jmin; j <= jmax; ++j) {
        const double c = (static_cast<double>(j) + 0.5) * bin_ms;
        double t = 0.0;
        if (c > np && c < mp) {
          if (c < apex_t) {
            t = peak * (c - np) / (apex_t - np);
          } else if (c > apex_t) {
            t = peak * (mp - c) / (mp - apex_t);
          } else {
            t = peak;
          }
        }
        const double d = bin_count(j) - t;
        sse += d * d;
      }
      if (sse < best_sse) {
        best_sse = sse;
        best_n = np;
        best_m = mp;
      }
    }
  }
  return {best_m - best_n, n / peak};
}

SpectralResult frequency_domain(std::span<const double> beat_times_s,
                                std::span<const double> nn_ms,
                                const FeatureConfig& cfg) {
  if (beat_times_s.size() != nn_ms.size()) {
    throw DataError("frequency_domain: beat_times and nn sizes differ");
  }
  require_size(nn_ms, 2, "frequency_domain");
  if (cfg.resample_hz <= 0.0) throw ConfigError("resample rate must be positive");
  if (!(cfg.bands.lf_lo < cfg.bands.lf_hi && cfg.bands.lf_hi <= cfg.bands.hf_hi &&
        cfg.bands.hf_hi <= cfg.bands.vhf_hi)) {
    throw ConfigError("band edges must be increasing");
  }

  const double t0 = beat_times_s.front();
  const double span = beat_times_s.back() - t0;
  const std::size_t samples =
      static_cast<std::size_t>(std::floor(span * cfg.resample_hz)) + 1;

  dsp::CubicSpline spline(std::vector<double>(beat_times_s.begin(), beat_times_s.end()),
                          std::vector<double>(nn_ms.begin(), nn_ms.end()));
  std::vector<double> signal(samples);
  double mean = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    signal[j] = spline(t0 + static_cast<double>(j) / cfg.resample_hz);
    mean += signal[j];
  }
  mean /= static_cast<double>(samples);
  for (double& v : signal) v -= mean;

  const std::size_t window_len = static_cast<std::size_t>(
      std::llround(cfg.welch_window_s * cfg.resample_hz));
  const auto psd = dsp::welch_psd(signal, cfg.resample_hz, window_len, cfg.welch_overlap);

  SpectralResult out;
  out.lf = dsp::band_power(psd, cfg.bands.lf_lo, cfg.bands.lf_hi);
  out.hf = dsp::band_power(psd, cfg.bands.lf_hi, cfg.bands.hf_hi);
  out.vhf = dsp::band_power(psd, cfg.bands.hf_hi, cfg.bands.vhf_hi);
  return out;
}

PoincareResult poincare_widths(std::span<const double> nn) {
  require_size(nn, 2, "poincare_widths");
  const double rm = rmssd(nn);
  const double sd = sdnn(nn);
  PoincareResult out;
  out.sd1 = rm / std::numbers::sqrt2;
  out.sd2 = std::sqrt(std::max(0.0, 2.0 * sd * sd - 0.5 * rm * rm));
  return out;
}

FragmentationResult fragmentation_indices(std::span<const double> nn) {
  require_size(nn, 4, "fragmentation_indices");
  const std::size_t m = nn.size() - 1;  // number of successive differences
  std::vector<double> d(m);
  for (std::size_t i = 0; i < m; ++i) d[i] = nn[i + 1] - nn[i];

  // Inflection between differences i-1 and i: sign change, or exactly one of
  // the two is zero (a pause next to movement still breaks the trend).
  std::vector<bool> inflection(m, false);
  std::size_t inflections = 0;
  for (std::size_t i = 1; i < m; ++i) {
    const double p = d[i - 1] * d[i];
    const bool flagged = p < 0.0 || (p == 0.0 && ((d[i - 1] == 0.0) != (d[i] == 0.0)));
    inflection[i] = flagged;
    if (flagged) ++inflections;
  }

  FragmentationResult out;
  out.pip = 100.0 * static_cast<double>(inflections) / static_cast<double>(m);

  // Alternation segments: maximal runs of consecutive inflections. A run of
  // L flags spans L+1 differences; keep runs spanning at least 3. The nn
  // values under kept runs are counted once via a mask.
  std::vector<bool> covered(nn.size(), false);
  std::size_t i = 1;
  while (i < m) {
    if (!inflection[i]) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end + 1 < m && inflection[run_end + 1]) ++run_end;
    const std::size_t run_len = run_end - i + 1;
    if (run_len + 1 >= 3) {
      // Differences d[i-1] .. d[run_end] touch nn indices i-1 .. run_end+1.
      for (std::size_t j = i - 1; j <= run_end + 1; ++j) covered[j] = true;
    }
    i = run_end + 1;
  }
  std::size_t covered_count = 0;
  for (bool b : covered) covered_count += b ? 1 : 0;
  out.pas = 100.0 * static_cast<double>(covered_count) / static_cast<double>(nn.size());
  return out;
}

AsymmetryResult asymmetry_indices(std::span<const double> nn) {
  require_size(nn, 2, "asymmetry_indices");
  double below_w = 0.0;
  double above_w = 0.0;
  std::size_t below_n = 0;
  std::size_t above_n = 0;
  for (std::size_t i = 0; i + 1 < nn.size(); ++i) {
    const double x = nn[i];
    const double y = nn[i + 1];
    if (x == y) continue;  // on the identity line, carries no asymmetry
    const double phi = std::atan2(y, x) - std::numbers::pi / 4.0;
    const double w = (x * x + y * y) * std::abs(phi);
    if (y < x) {
      below_w += w;
      ++below_n;
    } else {
      above_w += w;
      ++above_n;
    }
  }
  if (below_n + above_n == 0) {
    throw DataError("asymmetry_indices: all Poincare points on the identity line");
  }
  AsymmetryResult out;
  out.ai = 100.0 * below_w / (below_w + above_w);
  out.pi = 100.0 * static_cast<double>(below_n) /
           static_cast<double>(below_n + above_n);
  return out;
}

double approximate_entropy(std::span<const double> nn, int m, double r_factor) {
  if (m < 1) throw ConfigError("approximate_entropy: m must be at least 1");
  require_size(nn, static_cast<std::size_t>(m) + 2, "approximate_entropy");
  const double sd = sdnn(nn);
  if (sd == 0.0) return 0.0;
  const double r = r_factor * sd;

  auto phi = [&](int order) {
    const std::size_t count = nn.size() - static_cast<std::size_t>(order) + 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t matches = 0;
      for (std::size_t j = 0; j < count; ++j) {
        bool ok = true;
        for (int q = 0; q < order; ++q) {
          if (std::abs(nn[i + static_cast<std::size_t>(q)] -
                       nn[j + static_cast<std::size_t>(q)]) > r) {
            ok = false;
            break;
          }
        }
        if (ok) ++matches;
      }
      acc += std::log(static_cast<double>(matches) / static_cast<double>(count));
    }
    return acc / static_cast<double>(count);
  };
  return phi(m) - phi(m + 1);
}

HrvVector compute_feature_vector(std::span<const double> nn_ms,
                                 const FeatureConfig& cfg) {
  require_size(nn_ms, 4, "compute_feature_vector");
  for (double v : nn_ms) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DataError("compute_feature_vector: nn values must be positive and finite");
    }
  }

  std::vector<double> beat_times(nn_ms.size());
  double t = 0.0;
  for (std::size_t i = 0; i < nn_ms.size(); ++i) {
    beat_times[i] = t;
    t += nn_ms[i] / 1000.0;
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
  const auto spec = frequency_domain(beat_times, nn_ms, cfg);
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

  for (double x : v.values()) {
    if (!std::isfinite(x)) {
      throw DataError("compute_feature_vector: non-finite index value");
    }
  }
  return v;
}

}  // namespace hrvtx
