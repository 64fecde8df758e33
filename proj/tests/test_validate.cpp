// Cross-validation driver: fold construction, per-split scoring, report
// serialization, and the rendered summary tables.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "hrvtx/errors.hpp"
#include "hrvtx/gaussian.hpp"
#include "hrvtx/stats.hpp"
#include "hrvtx/synth.hpp"
#include "hrvtx/validate.hpp"
#include "test_support.hpp"

using namespace hrvtx;

namespace {

std::vector<std::string> numbered_ids(int n) {
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%02d", i);
    ids.emplace_back(buf);
  }
  return ids;
}

// Small deterministic feature dataset shared by the kfold tests.
const SynthDataset& small_dataset() {
  static const SynthDataset data = [] {
    SynthSpec spec = SynthSpec::defaults(991);
    spec.patients = 8;
    spec.rows_per_rhythm = 40;
    return gen_feature_dataset(spec);
  }();
  return data;
}

ValidateConfig small_config() {
  ValidateConfig cfg;
  cfg.folds = 4;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("folds partition the patients as evenly as possible") {
  const auto ids = numbered_ids(30);
  const auto folds = make_folds(ids, 5, 123);
  REQUIRE(folds.size() == 5);
  std::vector<std::string> seen;
  for (const auto& fold : folds) {
    CHECK(fold.size() == 6);
    seen.insert(seen.end(), fold.begin(), fold.end());
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen == ids);  // disjoint + exhaustive: 30 members, all distinct

  // 26 patients over 4 folds: the first two folds absorb the remainder.
  const auto uneven = make_folds(numbered_ids(26), 4, 123);
  REQUIRE(uneven.size() == 4);
  CHECK(uneven[0].size() == 7);
  CHECK(uneven[1].size() == 7);
  CHECK(uneven[2].size() == 6);
  CHECK(uneven[3].size() == 6);
}

TEST_CASE("fold assignment is a deterministic function of ids and seed") {
  const auto ids = numbered_ids(30);
  const auto a = make_folds(ids, 5, 2024);
  const auto b = make_folds(ids, 5, 2024);
  CHECK(a == b);

  // Input order is irrelevant: ids are sorted before shuffling.
  auto shuffled = ids;
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(make_folds(shuffled, 5, 2024) == a);

  // Duplicate ids collapse to one membership.
  auto dup = ids;
  dup.insert(dup.end(), ids.begin(), ids.end());
  CHECK(make_folds(dup, 5, 2024) == a);

  const auto c = make_folds(ids, 5, 2025);
  CHECK(a != c);
}

TEST_CASE("fold construction rejects bad parameters") {
  const auto ids = numbered_ids(6);
  CHECK_THROWS_WITH_AS(make_folds(ids, 1, 1), doctest::Contains("at least 2 folds"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(make_folds(ids, 0, 1), doctest::Contains("at least 2 folds"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(make_folds(ids, 7, 1),
                       doctest::Contains("more folds than patients"), DataError);
}

TEST_CASE("cross-validation covers every patient exactly once") {
  const auto& data = small_dataset();
  const auto report = kfold_validate(data.patients, small_config(), "fp-test");

  CHECK(report.config_fingerprint == "fp-test");
  CHECK(report.seed == 77);
  CHECK(report.folds == 4);
  CHECK(report.alpha == 0.05);
  REQUIRE(report.patients.size() == 8);
  CHECK(std::is_sorted(report.patients.begin(), report.patients.end()));
  REQUIRE(report.splits.size() == 4);

  std::vector<std::string> tested;
  for (const auto& split : report.splits) {
    CHECK(split.test_patients.size() == 2);
    CHECK(std::is_sorted(split.test_patients.begin(), split.test_patients.end()));
    tested.insert(tested.end(), split.test_patients.begin(), split.test_patients.end());
  }
  std::sort(tested.begin(), tested.end());
  CHECK(tested == report.patients);

  for (std::size_t f = 0; f < report.splits.size(); ++f) {
    CHECK(report.splits[f].split_id == static_cast<int>(f) + 1);
  }
}

TEST_CASE("per-split scores aggregate their per-patient values") {
  const auto& data = small_dataset();
  const auto report = kfold_validate(data.patients, small_config(), "fp-test");

  double overall_sum = 0.0;
  double overall_baseline_sum = 0.0;
  double overall_best = std::numeric_limits<double>::infinity();
  double overall_worst = -overall_best;
  std::size_t overall_count = 0;

  for (const auto& split : report.splits) {
    REQUIRE(split.bhattacharyya.size() == split.test_patients.size());
    REQUIRE(split.baseline_bhattacharyya.size() == split.test_patients.size());
    double sum = 0.0;
    double baseline_sum = 0.0;
    double best = std::numeric_limits<double>::infinity();
    double worst = -best;
    for (const auto& id : split.test_patients) {
      REQUIRE(split.bhattacharyya.count(id) == 1);
      const double b = split.bhattacharyya.at(id);
      CHECK(std::isfinite(b));
      CHECK(b >= 0.0);
      sum += b;
      best = std::min(best, b);
      worst = std::max(worst, b);
      const double bb = split.baseline_bhattacharyya.at(id);
      CHECK(std::isfinite(bb));
      CHECK(bb >= 0.0);
      baseline_sum += bb;
      overall_sum += b;
      overall_baseline_sum += bb;
      overall_best = std::min(overall_best, b);
      overall_worst = std::max(overall_worst, b);
      ++overall_count;
    }
    const double n = static_cast<double>(split.test_patients.size());
    CHECK(split.mean_bhattacharyya == doctest::Approx(sum / n).epsilon(1e-12));
    CHECK(split.best_bhattacharyya == best);
    CHECK(split.worst_bhattacharyya == worst);
    CHECK(split.baseline_mean_bhattacharyya ==
          doctest::Approx(baseline_sum / n).epsilon(1e-12));
    CHECK(split.best_bhattacharyya <= split.mean_bhattacharyya);
    CHECK(split.mean_bhattacharyya <= split.worst_bhattacharyya);

    // Every index has a KS p-value for every tested patient, inside [0, 1].
    for (std::size_t i = 0; i < HrvVector::kDim; ++i) {
      REQUIRE(split.ks_p[i].size() == split.test_patients.size());
      for (const auto& [id, p] : split.ks_p[i]) {
        CHECK(split.bhattacharyya.count(id) == 1);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
      }
    }
  }

  const double n = static_cast<double>(overall_count);
  CHECK(report.overall_mean_bhattacharyya ==
        doctest::Approx(overall_sum / n).epsilon(1e-12));
  CHECK(report.overall_best_bhattacharyya == overall_best);
  CHECK(report.overall_worst_bhattacharyya == overall_worst);
  CHECK(report.overall_baseline_mean_bhattacharyya ==
        doctest::Approx(overall_baseline_sum / n).epsilon(1e-12));
  REQUIRE(report.notes.size() == 3);
  for (const auto& note : report.notes) CHECK(!note.empty());
}

TEST_CASE("predicted rows equal the per-row model prediction") {
  const auto& data = small_dataset();
  std::vector<std::string> ids;
  std::vector<Eigen::MatrixXd> nsr;
  std::vector<Eigen::MatrixXd> af;
  for (int i = 0; i < 4; ++i) {
    ids.push_back(data.patients[static_cast<std::size_t>(i)].patient_id);
    nsr.push_back(data.patients[static_cast<std::size_t>(i)].nsr);
    af.push_back(data.patients[static_cast<std::size_t>(i)].af);
  }
  const TransferModel model = fit_transfer_model(ids, nsr, af, 1e-3, 0, false, "fp");

  const Eigen::MatrixXd& probe = data.patients[5].nsr;
  const Eigen::MatrixXd rows = predict_rows(model, probe);
  REQUIRE(rows.rows() == probe.rows());
  REQUIRE(rows.cols() == probe.cols());
  for (Eigen::Index r = 0; r < probe.rows(); ++r) {
    const Eigen::VectorXd one = predict_target(model, probe.row(r).transpose());
    CHECK((rows.row(r).transpose() - one).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("identical patients with a noiseless shared map score near zero") {
  SynthSpec spec = SynthSpec::defaults(17);
  spec.patients = 6;
  spec.rows_per_rhythm = 200;
  spec.mean_spread = 0.0;
  spec.cov_scale_jitter = 0.0;
  spec.noise_scale = 0.0;
  const auto data = gen_feature_dataset(spec);

  ValidateConfig cfg;
  cfg.folds = 3;
  cfg.seed = 5;
  const auto report = kfold_validate(data.patients, cfg, "fp");
  for (const auto& split : report.splits) {
    for (const auto& [id, b] : split.bhattacharyya) {
      INFO("patient ", id);
      CHECK(b < 1.0);
    }
  }
}

TEST_CASE("repeated runs serialize to byte-identical reports") {
  const auto& data = small_dataset();
  const auto a = kfold_validate(data.patients, small_config(), "fp-test");
  const auto b = kfold_validate(data.patients, small_config(), "fp-test");
  CHECK(report_to_json(a) == report_to_json(b));
}

TEST_CASE("report json round trip is byte identical") {
  const auto& data = small_dataset();
  const auto report = kfold_validate(data.patients, small_config(), "fp-test");
  const std::string text = report_to_json(report);
  const ValidationReport back = report_from_json(text);
  CHECK(report_to_json(back) == text);
  CHECK(back.patients == report.patients);
  CHECK(back.splits.size() == report.splits.size());
  CHECK(back.notes == report.notes);
  CHECK(back.splits[0].bhattacharyya == report.splits[0].bhattacharyya);
}

TEST_CASE("report json parsing rejects malformed input") {
  CHECK_THROWS_AS(report_from_json("not json at all"), ParseError);
  CHECK_THROWS_WITH_AS(report_from_json("{}"),
                       doctest::Contains("missing or unknown schema marker"),
                       ParseError);
  CHECK_THROWS_WITH_AS(report_from_json("{\"schema\": \"hrvtx.report.v2\"}"),
                       doctest::Contains("missing or unknown schema marker"),
                       ParseError);

  const auto& data = small_dataset();
  const auto report = kfold_validate(data.patients, small_config(), "fp-test");
  auto j = nlohmann::ordered_json::parse(report_to_json(report));

  auto truncated = j;
  truncated.erase("overall");
  CHECK_THROWS_AS(report_from_json(truncated.dump()), ParseError);

  auto missing_index = j;
  missing_index["splits"][0]["ks_p_values"].erase("rmssd");
  CHECK_THROWS_WITH_AS(report_from_json(missing_index.dump()),
                       doctest::Contains("missing KS entry"), ParseError);
}

TEST_CASE("cross-validation rejects malformed datasets") {
  const auto& data = small_dataset();
  const ValidateConfig cfg = small_config();

  std::vector<PatientFeatures> one(data.patients.begin(), data.patients.begin() + 1);
  CHECK_THROWS_WITH_AS(kfold_validate(one, cfg, "fp"),
                       doctest::Contains("at least 2 patients"), DataError);

  auto narrow = std::vector<PatientFeatures>(data.patients.begin(),
                                             data.patients.begin() + 2);
  narrow[0].nsr = Eigen::MatrixXd::Zero(5, 17);
  CHECK_THROWS_WITH_AS(kfold_validate(narrow, cfg, "fp"),
                       doctest::Contains("must have 18 columns"), DataError);

  auto thin = std::vector<PatientFeatures>(data.patients.begin(),
                                           data.patients.begin() + 2);
  thin[1].af = thin[1].af.topRows(1).eval();
  CHECK_THROWS_WITH_AS(kfold_validate(thin, cfg, "fp"),
                       doctest::Contains("at least 2 segments per rhythm"), DataError);

  auto dup = std::vector<PatientFeatures>(data.patients.begin(),
                                          data.patients.begin() + 2);
  dup[1].patient_id = dup[0].patient_id;
  CHECK_THROWS_WITH_AS(kfold_validate(dup, cfg, "fp"),
                       doctest::Contains("duplicate patient id"), DataError);

  ValidateConfig bad = cfg;
  bad.folds = 1;
  CHECK_THROWS_AS(kfold_validate(data.patients, bad, "fp"), ConfigError);
  bad.folds = 99;
  CHECK_THROWS_AS(kfold_validate(data.patients, bad, "fp"), DataError);
}

TEST_CASE("rendered report lays out one row per split plus totals") {
  const auto& data = small_dataset();
  const auto report = kfold_validate(data.patients, small_config(), "fp-test");
  const std::string text = render_report(report);

  CHECK(text.find("Patients: 8   Folds: 4   Seed: 77") != std::string::npos);
  CHECK(text.find("Split   Tested  Mean        Best        Worst       PooledBase") !=
        std::string::npos);
  CHECK(text.find("\nAll") != std::string::npos);
  CHECK(text.find("Index   ") != std::string::npos);
  CHECK(text.find("below_t above_a") != std::string::npos);
  for (int s = 1; s <= 4; ++s) {
    CHECK(text.find("S" + std::to_string(s)) != std::string::npos);
  }
  // All 18 index rows are present, labelled by display name.
  for (const auto& name : HrvVector::display_names()) {
    CHECK(text.find(std::string(name)) != std::string::npos);
  }
  CHECK(text.find("Indices with max p below") != std::string::npos);
  CHECK(text.find("Indices with max p above alpha") != std::string::npos);
}

TEST_CASE("rendering an empty report yields headers without rows") {
  const ValidationReport empty;
  const std::string text = render_report(empty);
  CHECK(text.find("Patients: 0") != std::string::npos);
  CHECK(text.find("Split   Tested") != std::string::npos);
  CHECK(text.find("below_t above_a") != std::string::npos);
  CHECK(text.find("\nAll") == std::string::npos);
  CHECK(text.find("Indices with max p below") == std::string::npos);
}
