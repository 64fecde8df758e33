#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hrvtx/validate.hpp"
#include "hrvtx/wfdb.hpp"

namespace hrvtx {

struct AffineMap {
  Eigen::MatrixXd linear;
  Eigen::VectorXd offset;
};

// Ground-truth generator for feature-space experiments: every patient's AF
// rows are the shared affine image of their NSR rows plus optional Gaussian
// noise. Patients differ in NSR mean (spread along the base covariance) and
// in covariance scale, so a per-patient model has something to gain over a
// pooled one.
struct SynthSpec {
  std::uint64_t seed = 20240101;
  int patients = 30;
  int rows_per_rhythm = 40;
  Eigen::VectorXd base_mean;       // dimension d
  Eigen::MatrixXd base_covariance; // d x d, positive semi-definite
  AffineMap af_map;                // shared ground truth
  double noise_scale = 0.05;       // fraction of per-axis target deviation
  // Patient separation is calibrated so per-patient transfer visibly beats a
  // pooled predictor: much smaller spreads drown the gain in covariance
  // estimation noise, much larger ones make every transform extrapolate far
  // from the cloud it was fitted on.
  double mean_spread = 1.6;        // patient mean offset, in covariance units
  double cov_scale_jitter = 0.15;  // log-range of per-patient covariance scaling

  // 18-dimensional defaults with plausible HRV-like magnitudes.
  static SynthSpec defaults(std::uint64_t seed);
};

struct SynthDataset {
  std::vector<PatientFeatures> patients;
  AffineMap ground_truth;
};

// Deterministic for a fixed spec; per-patient substreams are forked from
// the master seed so patient p's rows do not depend on how many other
// patients are generated.
SynthDataset gen_feature_dataset(const SynthSpec& spec);

// Synthetic beat-interval series for exercising the ingest-side pipeline.
// kNsr: AR(1)-modulated intervals around 800 ms with 0.1 Hz and 0.25 Hz
// sinusoidal components. kAf: independent draws around 700 ms with a wide
// spread. The result is a single span [0, duration_s) of normal beats.
wfdb::NnSeries gen_rr_series(std::uint64_t seed, Rhythm regime, double duration_s);

}  // namespace hrvtx
