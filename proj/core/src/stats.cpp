#include "hrvtx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hrvtx/errors.hpp"
#include "hrvtx/gaussian.hpp"

namespace hrvtx {

namespace {

// Log-determinant via Cholesky; throws when the matrix is not positive
// definite. `label` names the offending input in the message.
double cholesky_log_det(const Eigen::MatrixXd& m, const std::string& label,
                        const char* which) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError(std::string("bhattacharyya: ") + which +
                            " covariance not positive definite" +
                            (label.empty() ? std::string() : " for " + label));
  }
  const Eigen::MatrixXd l = llt.matrixL();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

}  // namespace

double bhattacharyya(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                     const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2,
                     const std::string& label) {
  if (mean1.size() != mean2.size() || cov1.rows() != cov1.cols() ||
      cov2.rows() != cov2.cols() || cov1.rows() != mean1.size() ||
      cov2.rows() != mean2.size()) {
    throw DataError("bhattacharyya: dimension mismatch" +
                    (label.empty() ? std::string() : " for " + label));
  }
  const Eigen::MatrixXd mid = 0.5 * (cov1 + cov2);
  const double log_det_mid = cholesky_log_det(mid, label, "averaged");
  const double log_det_1 = cholesky_log_det(cov1, label, "first");
  const double log_det_2 = cholesky_log_det(cov2, label, "second");

  Eigen::LLT<Eigen::MatrixXd> llt(mid);
  const Eigen::VectorXd diff = mean1 - mean2;
  const double quad = diff.dot(llt.solve(diff));

  return 0.125 * quad + 0.5 * (log_det_mid - 0.5 * (log_det_1 + log_det_2));
}

double bhattacharyya(const PatientDistribution& a, const PatientDistribution& b,
                     const std::string& label) {
  return bhattacharyya(a.mean, a.covariance, b.mean, b.covariance, label);
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double acc = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 1000; ++j) {
    const double term = std::exp(-2.0 * static_cast<double>(j) * static_cast<double>(j) *
                                 lambda * lambda);
    if (term < 1e-12) break;
    acc += sign * term;
    sign = -sign;
  }
  return std::clamp(2.0 * acc, 0.0, 1.0);
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  if (n == 0 || m == 0) throw DataError("ks_critical_value: empty sample");
  if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("alpha must lie in (0, 1)");
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                       double alpha) {
  if (a.empty() || b.empty()) throw DataError("ks_two_sample: empty sample");

  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  // Walk the pooled order; the supremum of |F1 - F2| is attained just after
  // a batch of equal values is consumed from both sides.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  // Remaining tail only shrinks one CDF toward 1 while the other is already
  // 1; the supremum cannot grow there.

  KsResult out;
  out.statistic = d;
  const double lambda = d * std::sqrt(na * nb / (na + nb));
  out.p_value = kolmogorov_q(lambda);
  out.reject = d > ks_critical_value(sa.size(), sb.size(), alpha);
  return out;
}

}  // namespace hrvtx
