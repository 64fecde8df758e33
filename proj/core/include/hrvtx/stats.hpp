#pragma once

#include <Eigen/Dense>
#include <span>

namespace hrvtx {

struct PatientDistribution;

// Bhattacharyya distance between two Gaussians:
//   1/8 (mu1-mu2)^T M^-1 (mu1-mu2) + 1/2 ln(det M / sqrt(det S1 det S2)),
// M = (S1+S2)/2. Log-determinants come from Cholesky factors, so both
// covariances (and M) must be positive definite; otherwise a
// ConditioningError names `label`.
double bhattacharyya(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                     const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2,
                     const std::string& label = "");
double bhattacharyya(const PatientDistribution& a, const PatientDistribution& b,
                     const std::string& label = "");

struct KsResult {
  double statistic = 0.0;  // sup |F1 - F2|
  double p_value = 1.0;    // asymptotic Kolmogorov tail
  bool reject = false;     // statistic above the alpha critical value
};

// Two-sample Kolmogorov-Smirnov test. The statistic is the exact supremum
// over the pooled sample; the p-value is the asymptotic series
// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2) at
// lambda = D sqrt(nm/(n+m)), clamped to [0, 1].
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                       double alpha);

// Critical D value: c(alpha) * sqrt((n+m)/(n*m)) with
// c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha);

// Kolmogorov tail sum Q(lambda); Q(<=0) = 1. Terms below 1e-12 are dropped.
double kolmogorov_q(double lambda);

}  // namespace hrvtx
