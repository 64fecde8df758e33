#include "hrvtx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "hrvtx/errors.hpp"
#include "hrvtx/rng.hpp"

namespace hrvtx {

namespace {

// Symmetric square root via eigendecomposition; tolerates semi-definite
// inputs by flooring tiny negative eigenvalues at zero.
Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success) {
    throw ConditioningError("matrix square root failed to converge");
  }
  const double scale = std::max(1.0, solver.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd lambda = solver.eigenvalues();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-10 * scale) {
      throw DataError("covariance for synthetic data is not positive semi-definite");
    }
    lambda(i) = std::sqrt(std::max(lambda(i), 0.0));
  }
  return solver.eigenvectors() * lambda.asDiagonal() *
         solver.eigenvectors().transpose();
}

Eigen::VectorXd standard_normal(SplitMix64& rng, Eigen::Index d) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.next_gaussian();
  return v;
}

}  // namespace

SynthSpec SynthSpec::defaults(std::uint64_t seed) {
  SynthSpec spec;
  spec.seed = seed;

  const Eigen::Index d = 18;
  // Rough NSR-scale magnitudes per index (ms, %, ms^2, unitless), so the
  // synthetic clouds live where real feature vectors do.
  Eigen::VectorXd mean(d);
  mean << 35.0, 850.0, 50.0, 60.0, 12.0, 35.0, 180.0, 9.0, 600.0, 400.0, 60.0,
      25.0, 65.0, 55.0, 20.0, 48.0, 49.0, 1.1;
  spec.base_mean = mean;

  // Deviations are kept pairwise well separated (adjacent sorted variances
  // differ by 40%+) so the covariance has no near-degenerate eigenvalue
  // pairs; degenerate axes would make sample eigenvectors unstable and the
  // blended per-patient maps systematically contractive.
  Eigen::VectorXd sd(d);
  sd << 7.8, 62.0, 11.1, 16.0, 3.75, 9.3, 44.0, 2.15, 175.0, 115.0, 26.0, 4.5,
      13.4, 6.5, 5.4, 3.1, 2.6, 0.16;

  // Mild, banded correlation keeps the covariance well-conditioned while
  // still exercising the rotation machinery.
  Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      const double gap = static_cast<double>(std::abs(static_cast<long>(i - j)));
      corr(i, j) = 0.35 * std::exp(-gap / 3.0);
    }
  }
  spec.base_covariance = sd.asDiagonal() * corr * sd.asDiagonal();

  // Shared NSR->AF ground truth: per-axis stretch with a gentle cross-axis
  // mix, plus an offset that moves the cloud the way AF moves HRV (shorter,
  // far more irregular intervals).
  SplitMix64 rng(SplitMix64(seed).fork(0xAF).next_u64());
  Eigen::MatrixXd linear = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    linear(i, i) = rng.next_in(0.8, 1.6);
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i != j) linear(i, j) = rng.next_in(-0.05, 0.05);
    }
  }
  Eigen::VectorXd offset(d);
  offset << 90.0, -180.0, 40.0, 55.0, 45.0, 40.0, 140.0, 8.0, 900.0, 700.0,
      160.0, 60.0, 30.0, 25.0, 35.0, 4.0, 2.0, 0.5;
  spec.af_map = {std::move(linear), std::move(offset)};
  return spec;
}

SynthDataset gen_feature_dataset(const SynthSpec& spec) {
  const Eigen::Index d = spec.base_mean.size();
  if (d == 0) throw ConfigError("synthetic spec needs a base mean");
  if (spec.base_covariance.rows() != d || spec.base_covariance.cols() != d) {
    throw DataError("synthetic base covariance does not match the mean dimension");
  }
  if (spec.af_map.linear.rows() != d || spec.af_map.linear.cols() != d ||
      spec.af_map.offset.size() != d) {
    throw DataError("synthetic affine map does not match the mean dimension");
  }
  if (spec.patients < 1) throw ConfigError("synthetic patient count must be positive");
  if (spec.rows_per_rhythm < 15) {
    throw ConfigError("synthetic rows per rhythm must be at least 15");
  }
  if (spec.noise_scale < 0.0) throw ConfigError("noise scale must be non-negative");

  const Eigen::MatrixXd base_sqrt = matrix_sqrt_psd(spec.base_covariance);

  // Per-axis deviation of the mapped cloud, used to size the noise.
  const Eigen::MatrixXd mapped_cov =
      spec.af_map.linear * spec.base_covariance * spec.af_map.linear.transpose();
  Eigen::VectorXd noise_sd(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    noise_sd(i) = spec.noise_scale * std::sqrt(std::max(mapped_cov(i, i), 0.0));
  }

  SplitMix64 master(spec.seed);
  SynthDataset out;
  out.ground_truth = spec.af_map;
  for (int p = 0; p < spec.patients; ++p) {
    SplitMix64 rng = master.fork(static_cast<std::uint64_t>(p) + 1);

    char id[16];
    std::snprintf(id, sizeof(id), "S%03d", p + 1);
    PatientFeatures patient;
    patient.patient_id = id;

    const Eigen::VectorXd mean_p =
        spec.base_mean + spec.mean_spread * (base_sqrt * standard_normal(rng, d));
    const double cov_scale = std::exp(spec.cov_scale_jitter * rng.next_in(-1.0, 1.0));
    const Eigen::MatrixXd sqrt_p = std::sqrt(cov_scale) * base_sqrt;

    patient.nsr.resize(spec.rows_per_rhythm, d);
    patient.af.resize(spec.rows_per_rhythm, d);
    for (int r = 0; r < spec.rows_per_rhythm; ++r) {
      const Eigen::VectorXd x = mean_p + sqrt_p * standard_normal(rng, d);
      Eigen::VectorXd y = spec.af_map.linear * x + spec.af_map.offset;
      for (Eigen::Index i = 0; i < d; ++i) {
        y(i) += noise_sd(i) * rng.next_gaussian();
      }
      patient.nsr.row(r) = x.transpose();
      patient.af.row(r) = y.transpose();
    }
    out.patients.push_back(std::move(patient));
  }
  return out;
}

wfdb::NnSeries gen_rr_series(std::uint64_t seed, Rhythm regime, double duration_s) {
  if (duration_s <= 0.0) throw ConfigError("series duration must be positive");
  if (regime == Rhythm::kOther) {
    throw ConfigError("synthetic series support only NSR and AF regimes");
  }

  SplitMix64 rng(seed);
  wfdb::NnSeries series;
  series.rhythm = regime;
  series.span_start_s = 0.0;
  series.span_end_s = duration_s;

  double t = 0.0;
  double ar = 0.0;
  while (t < duration_s) {
    series.beat_times.push_back(t);
    double nn_ms = 0.0;
    if (regime == Rhythm::kNsr) {
      ar = 0.9 * ar + 15.0 * rng.next_gaussian();
      nn_ms = 800.0 + ar +
              20.0 * std::sin(2.0 * std::numbers::pi * 0.1 * t) +
              10.0 * std::sin(2.0 * std::numbers::pi * 0.25 * t);
      nn_ms = std::clamp(nn_ms, 400.0, 1600.0);
    } else {
      nn_ms = 700.0 + 120.0 * rng.next_gaussian();
      nn_ms = std::clamp(nn_ms, 300.0, 1800.0);
    }
    const double next = t + nn_ms / 1000.0;
    if (next >= duration_s) break;
    series.intervals.push_back({t, nn_ms});
    t = next;
  }
  return series;
}

}  // namespace hrvtx
