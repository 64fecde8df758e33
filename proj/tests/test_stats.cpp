#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "hrvtx/errors.hpp"
#include "hrvtx/gaussian.hpp"
#include "hrvtx/oracles.hpp"
#include "hrvtx/rng.hpp"
#include "hrvtx/stats.hpp"
#include "test_support.hpp"

using namespace hrvtx;
using testsup::close_rel;

namespace {

Eigen::MatrixXd random_spd(SplitMix64& rng, Eigen::Index d) {
  Eigen::MatrixXd l(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      l(r, c) = (r == c ? 1.0 : 0.0) + 0.25 * rng.next_gaussian();
    }
  }
  return l * l.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d);
}

Eigen::VectorXd random_vec(SplitMix64& rng, Eigen::Index d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = scale * rng.next_gaussian();
  return v;
}

std::vector<double> random_sample(SplitMix64& rng, std::size_t n, bool quantized) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = rng.next_gaussian();
    if (quantized) x = std::round(x * 4.0) / 4.0;  // force cross-sample ties
  }
  return v;
}

}  // namespace

TEST_CASE("bhattacharyya closed forms") {
  Eigen::VectorXd m0(1), m1(1);
  m0 << 0.0;
  m1 << 1.0;
  Eigen::MatrixXd unit(1, 1), four(1, 1);
  unit << 1.0;
  four << 4.0;

  CHECK(bhattacharyya(m0, unit, m0, unit) == 0.0);
  CHECK(close_rel(bhattacharyya(m0, unit, m1, unit), 0.125, 1e-12));
  CHECK(close_rel(bhattacharyya(m0, unit, m0, four), 0.5 * std::log(2.5 / 2.0), 1e-12));

  // Multivariate identity-covariance case reduces to 1/8 squared distance.
  Eigen::VectorXd a = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd b(3);
  b << 1.0, 2.0, 2.0;  // squared norm 9
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  CHECK(close_rel(bhattacharyya(a, eye, b, eye), 9.0 / 8.0, 1e-12));
}

TEST_CASE("bhattacharyya is symmetric and positive off the diagonal case") {
  SplitMix64 rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.next_below(6));
    const auto c1 = random_spd(rng, d);
    const auto c2 = random_spd(rng, d);
    const auto m1 = random_vec(rng, d);
    const auto m2 = random_vec(rng, d);
    const double ab = bhattacharyya(m1, c1, m2, c2);
    const double ba = bhattacharyya(m2, c2, m1, c1);
    CHECK(std::abs(ab - ba) <= 1e-12 * std::max(1.0, std::abs(ab)));
    CHECK(ab > 0.0);
    CHECK(bhattacharyya(m1, c1, m1, c1) == 0.0);
  }
}

TEST_CASE("bhattacharyya is invariant under shared affine maps") {
  SplitMix64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.next_below(5));
    const auto c1 = random_spd(rng, d);
    const auto c2 = random_spd(rng, d);
    const auto m1 = random_vec(rng, d);
    const auto m2 = random_vec(rng, d);

    Eigen::MatrixXd a(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        a(r, c) = (r == c ? 1.0 : 0.0) + 0.3 * rng.next_gaussian();
      }
    }
    const Eigen::VectorXd shift = random_vec(rng, d, 10.0);

    const double before = bhattacharyya(m1, c1, m2, c2);
    const double after = bhattacharyya(a * m1 + shift, a * c1 * a.transpose(),
                                       a * m2 + shift, a * c2 * a.transpose());
    CHECK(close_rel(after, before, 1e-8));
  }
}

TEST_CASE("bhattacharyya conditioning errors carry the label") {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_WITH_AS(
      bhattacharyya(m, bad, m, Eigen::MatrixXd::Identity(2, 2), "patient42"),
      doctest::Contains("patient42"), ConditioningError);
  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(
      bhattacharyya(wrong, bad, m, Eigen::MatrixXd::Identity(2, 2)), DataError);
}

TEST_CASE("bhattacharyya accepts distribution summaries") {
  SplitMix64 rng(27);
  Eigen::MatrixXd rows1(40, 3), rows2(40, 3);
  for (Eigen::Index i = 0; i < 40; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      rows1(i, j) = rng.next_gaussian();
      rows2(i, j) = 2.0 + rng.next_gaussian();
    }
  }
  const auto d1 = estimate_distribution(rows1, 1e-3);
  const auto d2 = estimate_distribution(rows2, 1e-3);
  CHECK(bhattacharyya(d1, d2) ==
        bhattacharyya(d1.mean, d1.covariance, d2.mean, d2.covariance));
  CHECK(bhattacharyya(d1, d1) == 0.0);
}

TEST_CASE("ks pinned cases") {
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  const auto same = ks_two_sample(a, a, 0.05);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK(!same.reject);

  const std::vector<double> zeros = {0, 0, 0, 0};
  const std::vector<double> ones = {1, 1, 1, 1};
  const auto disjoint = ks_two_sample(zeros, ones, 0.05);
  CHECK(disjoint.statistic == 1.0);
  CHECK(disjoint.reject);
  CHECK(disjoint.p_value < 0.1);

  CHECK_THROWS_AS(ks_two_sample({}, a, 0.05), DataError);
  CHECK_THROWS_AS(ks_two_sample(a, {}, 0.05), DataError);
}

TEST_CASE("ks critical constant c(0.05)") {
  // c(alpha) = sqrt(-ln(alpha/2)/2); the n,m factor is divided back out.
  for (auto [n, m] : {std::pair<std::size_t, std::size_t>{100, 50},
                      {15, 15},
                      {7, 200}}) {
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    const double c =
        ks_critical_value(n, m, 0.05) / std::sqrt((nn + mm) / (nn * mm));
    CHECK(std::abs(c - 1.35810) < 1e-5);
  }
  CHECK_THROWS_AS(ks_critical_value(0, 5, 0.05), DataError);
  CHECK_THROWS_AS(ks_critical_value(5, 5, 0.0), ConfigError);
  CHECK_THROWS_AS(ks_critical_value(5, 5, 1.0), ConfigError);
}

TEST_CASE("kolmogorov tail series") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(-3.0) == 1.0);
  // 2*(e^-2 - e^-8 + e^-18 - ...) evaluated independently.
  const double q1 = 2.0 * (std::exp(-2.0) - std::exp(-8.0) + std::exp(-18.0) -
                           std::exp(-32.0));
  CHECK(close_rel(kolmogorov_q(1.0), q1, 1e-9));
  CHECK(std::abs(kolmogorov_q(1.0) - 0.27000) < 1e-4);
  CHECK(kolmogorov_q(0.5) > kolmogorov_q(1.0));
  CHECK(kolmogorov_q(1.0) > kolmogorov_q(2.0));
  CHECK(kolmogorov_q(10.0) == 0.0);
}

TEST_CASE("ks statistic equals the brute-force pooled scan exactly") {
  SplitMix64 rng(37);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.next_below(100);
    const std::size_t m = 1 + rng.next_below(100);
    const bool quantized = (rep % 2) == 0;
    const auto a = random_sample(rng, n, quantized);
    const auto b = random_sample(rng, m, quantized);
    const auto r = ks_two_sample(a, b, 0.05);
    CAPTURE(rep);
    CHECK(r.statistic == oracle::ks_statistic(a, b));
    CHECK(r.statistic >= 0.0);
    CHECK(r.statistic <= 1.0);
    CHECK(r.p_value >= 0.0);
    CHECK(r.p_value <= 1.0);
    CHECK(r.reject == (r.statistic > ks_critical_value(n, m, 0.05)));
  }
}

TEST_CASE("ks statistic ignores input order") {
  SplitMix64 rng(47);
  auto a = random_sample(rng, 31, true);
  auto b = random_sample(rng, 44, true);
  const double before = ks_two_sample(a, b, 0.05).statistic;
  std::reverse(a.begin(), a.end());
  std::swap(b.front(), b.back());
  CHECK(ks_two_sample(a, b, 0.05).statistic == before);
  CHECK(oracle::ks_statistic(b, a) == before);  // symmetric in the samples
}

TEST_CASE("ks detects a clear location shift") {
  SplitMix64 rng(57);
  std::vector<double> a(60), b(60);
  for (double& x : a) x = rng.next_gaussian();
  for (double& x : b) x = 3.0 + rng.next_gaussian();
  const auto r = ks_two_sample(a, b, 0.05);
  CHECK(r.reject);
  CHECK(r.p_value < 0.001);
}
