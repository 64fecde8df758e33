// CSV artifacts, run configuration JSON, and the lineage sidecars that tie
// pipeline stages together.

#include <doctest.h>

#include <array>
#include <cctype>
#include <filesystem>
#include <string>
#include <vector>

#include "hrvtx/config.hpp"
#include "hrvtx/csv.hpp"
#include "hrvtx/errors.hpp"
#include "hrvtx/util.hpp"
#include "test_support.hpp"

using namespace hrvtx;

namespace {

std::vector<csv::RecordSeries> sample_records() {
  wfdb::NnSeries nsr;
  nsr.rhythm = Rhythm::kNsr;
  nsr.span_start_s = 0.0;
  nsr.span_end_s = 10.0;
  nsr.beat_times = {0.0, 0.8, 1.6123456789};
  nsr.intervals = {{0.0, 800.0}, {0.8, 812.3456789}};

  wfdb::NnSeries other;
  other.rhythm = Rhythm::kOther;
  other.span_start_s = 10.0;
  other.span_end_s = 20.0;
  other.beat_times = {12.5};

  wfdb::NnSeries empty_af;  // span with no beats at all
  empty_af.rhythm = Rhythm::kAf;
  empty_af.span_start_s = 20.0;
  empty_af.span_end_s = 30.5;

  wfdb::NnSeries second;
  second.rhythm = Rhythm::kNsr;
  second.span_start_s = 5.0;
  second.span_end_s = 64.0;
  second.beat_times = {5.0, 6.0, 7.0};
  second.intervals = {{5.0, 1000.0}, {6.0, 1000.0}};

  return {{"r1", {nsr, other, empty_af}}, {"r2", {second}}};
}

void check_same_series(const wfdb::NnSeries& got, const wfdb::NnSeries& want) {
  CHECK(got.rhythm == want.rhythm);
  CHECK(got.span_start_s == want.span_start_s);
  CHECK(got.span_end_s == want.span_end_s);
  REQUIRE(got.beat_times.size() == want.beat_times.size());
  CHECK(got.beat_times == want.beat_times);
  REQUIRE(got.intervals.size() == want.intervals.size());
  for (std::size_t i = 0; i < got.intervals.size(); ++i) {
    CHECK(got.intervals[i].onset_s == want.intervals[i].onset_s);
    CHECK(got.intervals[i].ms == want.intervals[i].ms);
  }
}

std::vector<csv::FeatureRow> sample_feature_rows() {
  std::vector<csv::FeatureRow> rows;
  double salt = 0.0;
  for (const auto& [id, rhythm, start] :
       std::vector<std::tuple<std::string, Rhythm, double>>{
           {"p2", Rhythm::kNsr, 0.0},
           {"p1", Rhythm::kAf, 300.0},
           {"p1", Rhythm::kNsr, 0.0},
           {"p1", Rhythm::kNsr, 300.0},
           {"p2", Rhythm::kAf, 600.5}}) {
    csv::FeatureRow row;
    row.patient_id = id;
    row.rhythm = rhythm;
    row.segment_start_s = start;
    std::array<double, HrvVector::kDim> vals{};
    for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
      vals[c] = 0.125 + static_cast<double>(c) * 1.0625 + salt;
    }
    row.v = HrvVector::from_values(vals);
    rows.push_back(std::move(row));
    salt += 0.0078125;
  }
  return rows;
}

bool is_hex16(const std::string& s) {
  if (s.size() != 16) return false;
  for (const char c : s) {
    if (std::isxdigit(static_cast<unsigned char>(c)) == 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("beat stream csv round trips exactly, empty spans included") {
  const auto dir = testsup::fresh_temp_dir("nn_rt");
  const auto path = dir / "nn.csv";
  const auto records = sample_records();
  csv::write_nn_csv(path, records);

  CHECK(csv::spans_companion_path(path).filename() == "nn.csv.spans.csv");
  CHECK(std::filesystem::exists(csv::spans_companion_path(path)));

  const auto back = csv::read_nn_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].record == "r1");
  CHECK(back[1].record == "r2");
  REQUIRE(back[0].series.size() == 3);
  REQUIRE(back[1].series.size() == 1);
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t s = 0; s < records[r].series.size(); ++s) {
      check_same_series(back[r].series[s], records[r].series[s]);
    }
  }
}

TEST_CASE("beat stream writer rejects unusable inputs") {
  const auto dir = testsup::fresh_temp_dir("nn_writer");

  auto bad_name = sample_records();
  bad_name[0].record = "a,b";
  CHECK_THROWS_WITH_AS(csv::write_nn_csv(dir / "x.csv", bad_name),
                       doctest::Contains("record name unusable"), DataError);

  auto stray = sample_records();
  stray[1].series[0].intervals.push_back({6.5, 900.0});  // onset is not a beat
  CHECK_THROWS_WITH_AS(csv::write_nn_csv(dir / "y.csv", stray),
                       doctest::Contains("does not coincide"), DataError);
}

TEST_CASE("beat stream reader validates both files") {
  const auto dir = testsup::fresh_temp_dir("nn_reader");
  const auto path = dir / "nn.csv";
  csv::write_nn_csv(path, sample_records());
  const auto spans_path = csv::spans_companion_path(path);
  const std::string good_beats = read_text_file(path);
  const std::string good_spans = read_text_file(spans_path);

  SUBCASE("missing spans companion") {
    std::filesystem::remove(spans_path);
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path), doctest::Contains("cannot open"),
                         DataError);
  }
  SUBCASE("wrong beats header") {
    write_text_file(path, "beat,stream\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path), doctest::Contains("expected header"),
                         ParseError);
  }
  SUBCASE("short beat row") {
    write_text_file(path, good_beats + "r1,NSR,9.9\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path), doctest::Contains("expected 4 fields"),
                         ParseError);
  }
  SUBCASE("record absent from the spans companion") {
    write_text_file(path, good_beats + "zz,NSR,1.0,800\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("missing from the spans companion"),
                         DataError);
  }
  SUBCASE("beat outside every span") {
    write_text_file(path, good_beats + "r1,NSR,999.0,\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("falls outside every span"), DataError);
  }
  SUBCASE("beat rhythm disagrees with its span") {
    write_text_file(path, good_beats + "r1,AF,9.9,\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("disagrees with the spans companion"),
                         DataError);
  }
  SUBCASE("beats must increase within a span") {
    write_text_file(path, good_beats + "r1,OTHER,12.5,\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("not strictly increasing"), DataError);
  }
  SUBCASE("unknown rhythm label") {
    write_text_file(path, good_beats + "r1,XX,9.9,\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("unknown rhythm label"), ParseError);
  }
  SUBCASE("zero-length span") {
    write_text_file(spans_path, good_spans + "r9,NSR,5,5\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("positive length"), DataError);
  }
  SUBCASE("overlapping spans") {
    write_text_file(spans_path, good_spans + "r2,AF,10,70\n");
    CHECK_THROWS_WITH_AS(csv::read_nn_csv(path),
                         doctest::Contains("overlap or run backwards"), DataError);
  }
}

TEST_CASE("segment csv round trips exactly") {
  const auto dir = testsup::fresh_temp_dir("segments_rt");
  const auto path = dir / "segments.csv";

  std::vector<Segment> segments;
  segments.push_back({"p1", 0.0, 600.0, Rhythm::kNsr, {800.0, 810.5, 795.25}});
  segments.push_back({"p1", 300.0, 600.0, Rhythm::kAf, {650.0}});
  segments.push_back({"p2", 0.0, 600.0, Rhythm::kNsr, {}});

  csv::write_segments_csv(path, segments);
  const auto back = csv::read_segments_csv(path);
  REQUIRE(back.size() == segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    CHECK(back[i].patient_id == segments[i].patient_id);
    CHECK(back[i].start_s == segments[i].start_s);
    CHECK(back[i].duration_s == segments[i].duration_s);
    CHECK(back[i].rhythm == segments[i].rhythm);
    CHECK(back[i].nn_ms == segments[i].nn_ms);
  }

  std::vector<Segment> bad = segments;
  bad[0].patient_id = "p,1";
  CHECK_THROWS_WITH_AS(csv::write_segments_csv(dir / "bad.csv", bad),
                       doctest::Contains("patient id unusable"), DataError);

  write_text_file(path, "patient_id,rhythm\n");
  CHECK_THROWS_WITH_AS(csv::read_segments_csv(path),
                       doctest::Contains("expected header"), ParseError);
  write_text_file(path,
                  "patient_id,rhythm,start_s,duration_s,nn_ms_list\np1,NSR,0,600\n");
  CHECK_THROWS_WITH_AS(csv::read_segments_csv(path),
                       doctest::Contains("expected 5 fields"), ParseError);
}

TEST_CASE("feature csv round trips exactly") {
  const auto dir = testsup::fresh_temp_dir("features_rt");
  const auto path = dir / "features.csv";
  const auto rows = sample_feature_rows();
  csv::write_features_csv(path, rows);

  const std::string text = read_text_file(path);
  CHECK(text.rfind("patient_id,rhythm,segment_start_s,rmssd,", 0) == 0);

  const auto back = csv::read_features_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].patient_id == rows[i].patient_id);
    CHECK(back[i].rhythm == rows[i].rhythm);
    CHECK(back[i].segment_start_s == rows[i].segment_start_s);
    CHECK(back[i].v.values() == rows[i].v.values());
  }

  write_text_file(path, text + "p3,NSR,0,1\n");
  CHECK_THROWS_WITH_AS(csv::read_features_csv(path), doctest::Contains("fields"),
                       ParseError);
}

TEST_CASE("feature rows group into per-patient matrices") {
  const auto rows = sample_feature_rows();
  const auto patients = csv::rows_to_patients(rows);
  REQUIRE(patients.size() == 2);
  CHECK(patients[0].patient_id == "p1");
  CHECK(patients[1].patient_id == "p2");
  CHECK(patients[0].nsr.rows() == 2);
  CHECK(patients[0].af.rows() == 1);
  CHECK(patients[1].nsr.rows() == 1);
  CHECK(patients[1].af.rows() == 1);

  // Row order within a rhythm follows the input order.
  const auto p1_first_nsr = rows[2].v.values();
  for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
    CHECK(patients[0].nsr(0, static_cast<Eigen::Index>(c)) == p1_first_nsr[c]);
  }
  const auto p1_af = rows[1].v.values();
  for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
    CHECK(patients[0].af(0, static_cast<Eigen::Index>(c)) == p1_af[c]);
  }

  // patients -> rows -> patients reproduces the matrices bit for bit.
  const auto rows_again = csv::patients_to_rows(patients);
  REQUIRE(rows_again.size() == rows.size());
  const auto patients_again = csv::rows_to_patients(rows_again);
  REQUIRE(patients_again.size() == patients.size());
  for (std::size_t p = 0; p < patients.size(); ++p) {
    CHECK(patients_again[p].patient_id == patients[p].patient_id);
    CHECK(patients_again[p].nsr == patients[p].nsr);
    CHECK(patients_again[p].af == patients[p].af);
  }

  auto with_other = rows;
  with_other[0].rhythm = Rhythm::kOther;
  CHECK_THROWS_WITH_AS(csv::rows_to_patients(with_other),
                       doctest::Contains("must be NSR or AF"), DataError);
}

TEST_CASE("config json round trips and rejects unknown knobs") {
  const RunConfig base;
  const RunConfig back = config_from_json(config_to_json(base));
  CHECK(config_fingerprint(back) == config_fingerprint(base));

  const RunConfig overlaid = config_from_json(
      R"({"segment": {"window_s": 300.0}, "model": {"k_neighbours": 3}})", base);
  CHECK(overlaid.segment.window_s == 300.0);
  CHECK(overlaid.model.k_neighbours == 3);
  CHECK(overlaid.segment.step_s == base.segment.step_s);
  CHECK(overlaid.features.welch_window_s == base.features.welch_window_s);
  CHECK(overlaid.validate.seed == base.validate.seed);

  CHECK_THROWS_WITH_AS(config_from_json(R"({"segment": {"window": 300}})"),
                       doctest::Contains("unknown key 'window'"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"segmnt": {}})"),
                       doctest::Contains("unknown config section"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json(R"({"segment": 3})"),
                       doctest::Contains("must be an object"), ConfigError);
  CHECK_THROWS_WITH_AS(config_from_json("[1, 2]"),
                       doctest::Contains("top level must be an object"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{"), ConfigError);
}

TEST_CASE("config files load with overlay semantics") {
  const auto dir = testsup::fresh_temp_dir("config_file");
  const auto path = dir / "run.json";
  write_text_file(path, R"({"validate": {"folds": 7, "seed": 9}})");
  const RunConfig cfg = config_from_file(path);
  CHECK(cfg.validate.folds == 7);
  CHECK(cfg.validate.seed == 9);
  CHECK(cfg.validate.alpha == RunConfig{}.validate.alpha);
  CHECK_THROWS_AS(config_from_file(dir / "absent.json"), DataError);
}

TEST_CASE("validation settings are assembled from both config sections") {
  RunConfig cfg;
  cfg.model.ridge = 0.5;
  cfg.model.k_neighbours = 2;
  cfg.model.strict_printed_forms = true;
  cfg.validate.folds = 7;
  cfg.validate.seed = 9;
  cfg.validate.alpha = 0.01;
  cfg.validate.pass_p_threshold = 0.2;
  const ValidateConfig v = cfg.validate_config();
  CHECK(v.folds == 7);
  CHECK(v.seed == 9);
  CHECK(v.alpha == 0.01);
  CHECK(v.pass_p_threshold == 0.2);
  CHECK(v.ridge == 0.5);
  CHECK(v.k_neighbours == 2);
  CHECK(v.strict_printed_forms == true);
}

TEST_CASE("fingerprints and section hashes track the knobs they cover") {
  const RunConfig base;
  CHECK(is_hex16(config_fingerprint(base)));
  CHECK(config_fingerprint(base) == config_fingerprint(RunConfig{}));

  RunConfig tweaked;
  tweaked.features.welch_window_s = 32.0;
  CHECK(config_fingerprint(tweaked) != config_fingerprint(base));
  CHECK(section_hash(tweaked, kSectionFeatures) != section_hash(base, kSectionFeatures));
  CHECK(section_hash(tweaked, kSectionSegment) == section_hash(base, kSectionSegment));
  CHECK(section_hash(tweaked, kSectionIngest) == section_hash(base, kSectionIngest));
  CHECK(is_hex16(section_hash(base, kSectionModel)));
  CHECK_THROWS_WITH_AS(section_hash(base, "nope"),
                       doctest::Contains("unknown config section"), ConfigError);
}

TEST_CASE("artifact sidecars round trip and report missing files") {
  const auto dir = testsup::fresh_temp_dir("meta_rt");
  const auto artifact = dir / "features.csv";
  write_text_file(artifact, "stub\n");
  CHECK(meta_path(artifact).filename() == "features.csv.meta.json");

  RunConfig cfg;
  cfg.segment.window_s = 480.0;
  ArtifactMeta meta;
  meta.command = "features";
  meta.config_fingerprint = config_fingerprint(cfg);
  meta.lineage = {{kSectionIngest, section_hash(cfg, kSectionIngest)},
                  {kSectionSegment, section_hash(cfg, kSectionSegment)}};
  meta.inputs = {{"nn.csv", "0011223344556677"}};
  meta.config = cfg;
  write_meta(artifact, meta);

  const auto got = read_meta(artifact);
  REQUIRE(got.has_value());
  CHECK(got->command == "features");
  CHECK(got->config_fingerprint == meta.config_fingerprint);
  CHECK(got->lineage == meta.lineage);
  REQUIRE(got->inputs.size() == 1);
  CHECK(got->inputs[0].path == "nn.csv");
  CHECK(got->inputs[0].digest == "0011223344556677");
  CHECK(config_fingerprint(got->config) == config_fingerprint(cfg));

  CHECK(!read_meta(dir / "absent.csv").has_value());

  write_text_file(meta_path(artifact), "{\"schema\": \"wrong\"}");
  CHECK_THROWS_WITH_AS(read_meta(artifact),
                       doctest::Contains("missing or unknown schema marker"),
                       ParseError);
  write_text_file(meta_path(artifact), "not json");
  CHECK_THROWS_AS(read_meta(artifact), ParseError);
}

TEST_CASE("lineage checks catch artifacts from a different configuration") {
  const auto dir = testsup::fresh_temp_dir("lineage");
  const auto artifact = dir / "segments.csv";
  write_text_file(artifact, "stub\n");

  RunConfig cfg;
  ArtifactMeta meta;
  meta.command = "segment";
  meta.config_fingerprint = config_fingerprint(cfg);
  meta.lineage = {{kSectionIngest, section_hash(cfg, kSectionIngest)},
                  {kSectionSegment, section_hash(cfg, kSectionSegment)}};
  meta.config = cfg;
  write_meta(artifact, meta);

  CHECK(check_input_lineage(artifact, cfg, {kSectionIngest, kSectionSegment}));

  RunConfig changed = cfg;
  changed.segment.window_s = 300.0;
  CHECK_THROWS_WITH_AS(check_input_lineage(artifact, changed, {kSectionSegment}),
                       doctest::Contains("different 'segment' configuration"),
                       DataError);
  // Sections the sidecar never recorded are not checked.
  CHECK(check_input_lineage(artifact, changed, {kSectionFeatures}));
  // Ingest knobs did not change, so an ingest-only consumer is unaffected.
  CHECK(check_input_lineage(artifact, changed, {kSectionIngest}));

  CHECK(!check_input_lineage(dir / "absent.csv", cfg, {kSectionSegment}));
}

TEST_CASE("file digests follow the raw bytes") {
  const auto dir = testsup::fresh_temp_dir("digest");
  const auto a = dir / "a.txt";
  write_text_file(a, "hello\n");
  CHECK(file_digest(a) == fnv1a64_hex("hello\n"));
  const auto b = dir / "b.txt";
  write_text_file(b, "hello!");
  CHECK(file_digest(a) != file_digest(b));
  CHECK(is_hex16(file_digest(a)));
}
