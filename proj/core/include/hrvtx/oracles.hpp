#pragma once

#include <span>
#include <vector>

#include "hrvtx/features.hpp"

namespace hrvtx::oracle {

// Deliberately plain re-derivations of every statistic, kept free of the
// library's fast paths so the two can check each other. Where a result must
// agree exactly (triangle-fit argmin, KS supremum), the oracle follows the
// same candidate enumeration order; everywhere else it only shares the
// mathematical definition.

double mean_nn(std::span<const double> nn);
double sdnn(std::span<const double> nn);
double rmssd(std::span<const double> nn);
double iqr_nn(std::span<const double> nn);
double pnn_above(std::span<const double> nn, double threshold_ms);

GeometricResult geometric_indices(std::span<const double> nn, double bin_ms);

// Dense-solve natural cubic spline, direct DFT Welch, trapezoidal bands.
SpectralResult frequency_domain(std::span<const double> beat_times_s,
                                std::span<const double> nn_ms,
                                const FeatureConfig& cfg);

PoincareResult poincare_widths(std::span<const double> nn);
FragmentationResult fragmentation_indices(std::span<const double> nn);
AsymmetryResult asymmetry_indices(std::span<const double> nn);
double approximate_entropy(std::span<const double> nn, int m, double r_factor);

HrvVector compute_feature_vector(std::span<const double> nn_ms,
                                 const FeatureConfig& cfg);

// KS statistic by evaluating |F1 - F2| at every pooled sample point.
double ks_statistic(std::span<const double> a, std::span<const double> b);

}  // namespace hrvtx::oracle
