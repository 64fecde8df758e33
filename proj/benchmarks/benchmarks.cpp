// Microbenchmarks for the pipeline hot paths: per-segment feature
// extraction (ApEn dominates), Welch spectral estimation, model fitting,
// and per-vector prediction.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hrvtx/features.hpp"
#include "hrvtx/gaussian.hpp"
#include "hrvtx/rng.hpp"
#include "hrvtx/stats.hpp"
#include "hrvtx/synth.hpp"

namespace {

using namespace hrvtx;

// A realistic 10-minute sinus tachogram (~750 NN intervals).
std::vector<double> sinus_segment() {
  const auto series = gen_rr_series(42, Rhythm::kNsr, 600.0);
  std::vector<double> nn;
  nn.reserve(series.intervals.size());
  for (const auto& interval : series.intervals) nn.push_back(interval.ms);
  return nn;
}

Eigen::MatrixXd gaussian_rows(std::uint64_t seed, int n, int d) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd rows(n, d);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < d; ++c) {
      rows(r, c) = 2.0 * (c + 1) + (c + 1) * rng.next_gaussian();
    }
  }
  return rows;
}

void bm_feature_vector(benchmark::State& state) {
  const auto nn = sinus_segment();
  const FeatureConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_feature_vector(nn, cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_feature_vector)->Unit(benchmark::kMillisecond);

void bm_welch_spectrum(benchmark::State& state) {
  const auto nn = sinus_segment();
  std::vector<double> beat_times(nn.size(), 0.0);
  for (std::size_t i = 1; i < nn.size(); ++i) {
    beat_times[i] = beat_times[i - 1] + nn[i - 1] / 1000.0;
  }
  const FeatureConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(frequency_domain(beat_times, nn, cfg));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_welch_spectrum)->Unit(benchmark::kMillisecond);

void bm_approximate_entropy(benchmark::State& state) {
  const auto nn = sinus_segment();
  for (auto _ : state) {
    benchmark::DoNotOptimize(approximate_entropy(nn, 2, 0.2));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_approximate_entropy)->Unit(benchmark::kMillisecond);

void bm_fit_pair_18d(benchmark::State& state) {
  const auto src = gaussian_rows(1, 60, 18);
  const auto tgt = gaussian_rows(2, 60, 18);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_pair("p", src, tgt, 1e-3));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_fit_pair_18d);

void bm_predict_target(benchmark::State& state) {
  const int patients = static_cast<int>(state.range(0));
  std::vector<std::string> ids;
  std::vector<Eigen::MatrixXd> src, tgt;
  for (int p = 0; p < patients; ++p) {
    ids.push_back("p" + std::to_string(p));
    src.push_back(gaussian_rows(100 + p, 60, 18));
    tgt.push_back(gaussian_rows(200 + p, 60, 18));
  }
  const auto model = fit_transfer_model(ids, src, tgt, 1e-3, 0, false, "bench");
  const Eigen::VectorXd x = gaussian_rows(3, 1, 18).row(0).transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_target(model, x));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_predict_target)->Arg(10)->Arg(30);

void bm_bhattacharyya_18d(benchmark::State& state) {
  const auto a = estimate_distribution(gaussian_rows(4, 200, 18), 1e-3, "a");
  const auto b = estimate_distribution(gaussian_rows(5, 200, 18), 1e-3, "b");
  for (auto _ : state) {
    benchmark::DoNotOptimize(bhattacharyya(a, b));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_bhattacharyya_18d);

}  // namespace

BENCHMARK_MAIN();
