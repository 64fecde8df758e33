// hrvtx: command-line driver for the HRV transfer-modeling pipeline.
//
// Stages: ingest -> segment -> features -> fit -> predict -> validate ->
// report, plus synthetic-data generators (`synth features`, `synth rr`) and
// a 2-D `demo-transform` that dumps each transform stage for plotting.
//
// Every artifact is written next to a "<artifact>.meta.json" sidecar holding
// the tool version, the full-config fingerprint, the per-stage section
// hashes that shaped the artifact, and digests of the inputs. Stages check
// their inputs' sidecars, so chaining artifacts produced under different
// upstream settings fails loudly instead of silently mixing definitions.
//
// Configuration comes from --config <json> overlaid on built-in defaults;
// individual flags override the file (flags win). Exit codes: 0 success,
// 1 usage/configuration error, 2 data error, 3 numerical-conditioning error.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hrvtx/config.hpp"
#include "hrvtx/csv.hpp"
#include "hrvtx/errors.hpp"
#include "hrvtx/features.hpp"
#include "hrvtx/gaussian.hpp"
#include "hrvtx/rng.hpp"
#include "hrvtx/segment.hpp"
#include "hrvtx/synth.hpp"
#include "hrvtx/util.hpp"
#include "hrvtx/validate.hpp"
#include "hrvtx/version.hpp"
#include "hrvtx/wfdb.hpp"

using namespace hrvtx;

namespace {

namespace fs = std::filesystem;

// Registers --config plus one override flag per pipeline knob. Overrides are
// recorded at parse time and applied on top of the config file, so a flag
// always wins over the same key in the file.
class ConfigCli {
 public:
  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path_,
                    "JSON config file overlaid on defaults (flags win)");

    const auto dbl = [this, cmd](const char* name, const char* help,
                                 void (*set)(RunConfig&, double)) {
      cmd->add_option_function<double>(
          name,
          [this, set](const double& v) {
            overrides_.push_back([v, set](RunConfig& c) { set(c, v); });
          },
          help);
    };
    const auto integer = [this, cmd](const char* name, const char* help,
                                     void (*set)(RunConfig&, int)) {
      cmd->add_option_function<int>(
          name,
          [this, set](const int& v) {
            overrides_.push_back([v, set](RunConfig& c) { set(c, v); });
          },
          help);
    };

    dbl("--nn-min-ms", "shortest NN interval kept (ms)",
        [](RunConfig& c, double v) { c.ingest.nn_min_ms = v; });
    dbl("--nn-max-ms", "longest NN interval kept (ms)",
        [](RunConfig& c, double v) { c.ingest.nn_max_ms = v; });

    dbl("--window-s", "segment window length (s)",
        [](RunConfig& c, double v) { c.segment.window_s = v; });
    dbl("--step-s", "segment window step (s)",
        [](RunConfig& c, double v) { c.segment.step_s = v; });
    dbl("--anchor-s", "start of the first window (s)",
        [](RunConfig& c, double v) { c.segment.anchor_s = v; });
    integer("--min-nn", "minimum NN intervals per segment",
            [](RunConfig& c, int v) { c.segment.min_nn_per_segment = v; });
    integer("--min-segments", "minimum segments per rhythm per patient",
            [](RunConfig& c, int v) { c.segment.min_segments_per_rhythm = v; });

    dbl("--lf-lo-hz", "low-frequency band lower edge (Hz)",
        [](RunConfig& c, double v) { c.features.bands.lf_lo = v; });
    dbl("--lf-hi-hz", "LF/HF band boundary (Hz)",
        [](RunConfig& c, double v) { c.features.bands.lf_hi = v; });
    dbl("--hf-hi-hz", "HF/VHF band boundary (Hz)",
        [](RunConfig& c, double v) { c.features.bands.hf_hi = v; });
    dbl("--vhf-hi-hz", "very-high-frequency band upper edge (Hz)",
        [](RunConfig& c, double v) { c.features.bands.vhf_hi = v; });
    dbl("--resample-hz", "tachogram resampling rate (Hz)",
        [](RunConfig& c, double v) { c.features.resample_hz = v; });
    dbl("--welch-window-s", "Welch window length (s)",
        [](RunConfig& c, double v) { c.features.welch_window_s = v; });
    dbl("--welch-overlap", "Welch window overlap fraction",
        [](RunConfig& c, double v) { c.features.welch_overlap = v; });
    integer("--apen-m", "approximate-entropy template length",
            [](RunConfig& c, int v) { c.features.apen_m = v; });
    dbl("--apen-r-factor", "approximate-entropy tolerance as a fraction of SDNN",
        [](RunConfig& c, double v) { c.features.apen_r_factor = v; });
    dbl("--hist-bin-ms", "NN histogram bin width (ms)",
        [](RunConfig& c, double v) { c.features.hist_bin_ms = v; });

    dbl("--ridge", "covariance ridge (relative to mean eigenvalue)",
        [](RunConfig& c, double v) { c.model.ridge = v; });
    integer("--k-neighbours", "blend over the k nearest patients (0 = all)",
            [](RunConfig& c, int v) { c.model.k_neighbours = v; });
    cmd->add_flag_function(
        "--strict-printed-forms",
        [this](std::int64_t count) {
          if (count > 0) {
            overrides_.push_back(
                [](RunConfig& c) { c.model.strict_printed_forms = true; });
          }
        },
        "evaluate the as-printed variant formulas instead of the corrected ones");

    integer("--folds", "cross-validation fold count",
            [](RunConfig& c, int v) { c.validate.folds = v; });
    cmd->add_option_function<std::uint64_t>(
        "--seed",
        [this](const std::uint64_t& v) {
          overrides_.push_back([v](RunConfig& c) { c.validate.seed = v; });
        },
        "fold-shuffle seed");
    dbl("--alpha", "KS significance level",
        [](RunConfig& c, double v) { c.validate.alpha = v; });
    dbl("--pass-p-threshold", "p threshold for the as-printed pass reading",
        [](RunConfig& c, double v) { c.validate.pass_p_threshold = v; });
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path_.empty()) cfg = config_from_file(config_path_);
    for (const auto& apply : overrides_) apply(cfg);
    return cfg;
  }

 private:
  std::string config_path_;
  std::vector<std::function<void(RunConfig&)>> overrides_;
};

ArtifactMeta make_meta(const std::string& command, const RunConfig& cfg,
                       const std::vector<fs::path>& inputs,
                       const std::vector<std::string>& lineage_sections) {
  ArtifactMeta meta;
  meta.command = command;
  meta.config_fingerprint = config_fingerprint(cfg);
  for (const auto& section : lineage_sections) {
    meta.lineage[section] = section_hash(cfg, section);
  }
  for (const auto& path : inputs) {
    meta.inputs.push_back({path.string(), file_digest(path)});
  }
  meta.config = cfg;
  return meta;
}

// ---------------------------------------------------------------------- ingest

struct IngestArgs {
  ConfigCli config;
  std::vector<std::string> stems;
  std::string out;
};

fs::path strip_known_extension(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".hea" || ext == ".atr") return fs::path(p).replace_extension();
  return p;
}

void run_ingest(const IngestArgs& args) {
  const RunConfig cfg = args.config.resolve();
  std::vector<csv::RecordSeries> records;
  std::vector<fs::path> inputs;
  for (const auto& stem_arg : args.stems) {
    const fs::path stem = strip_known_extension(stem_arg);
    const fs::path hea = fs::path(stem).concat(".hea");
    const fs::path atr = fs::path(stem).concat(".atr");
    const auto header = wfdb::parse_header(read_text_file(hea));
    const auto events = wfdb::parse_annotations(read_binary_file(atr));
    double end_s = header.duration_s.value_or(0.0);
    if (!events.empty()) {
      end_s = std::max(end_s, static_cast<double>(events.back().sample_index) /
                                  header.sampling_frequency);
    }
    const auto spans =
        wfdb::extract_rhythm_spans(events, header.sampling_frequency, end_s);
    csv::RecordSeries rec;
    rec.record = stem.filename().string();
    rec.series = wfdb::extract_nn_series(events, spans, header.sampling_frequency,
                                         cfg.ingest);
    std::size_t beats = 0, intervals = 0;
    for (const auto& s : rec.series) {
      beats += s.beat_times.size();
      intervals += s.intervals.size();
    }
    std::cout << rec.record << ": " << rec.series.size() << " spans, " << beats
              << " beats, " << intervals << " NN intervals\n";
    records.push_back(std::move(rec));
    inputs.push_back(hea);
    inputs.push_back(atr);
  }
  csv::write_nn_csv(args.out, records);
  write_meta(args.out, make_meta("ingest", cfg, inputs, {kSectionIngest}));
  std::cout << "wrote " << args.out << " (" << records.size() << " records)\n";
}

// --------------------------------------------------------------------- segment

struct SegmentArgs {
  ConfigCli config;
  std::string nn;
  std::string out;
};

void run_segment(const SegmentArgs& args) {
  const RunConfig cfg = args.config.resolve();
  check_input_lineage(args.nn, cfg, {kSectionIngest});
  const auto records = csv::read_nn_csv(args.nn);
  std::vector<Segment> windows;
  for (const auto& rec : records) {
    const auto segs = make_segments(rec.record, rec.series, cfg.segment);
    windows.insert(windows.end(), segs.begin(), segs.end());
  }
  const auto kept = filter_patients(windows, cfg.segment);
  std::vector<Segment> flat;
  for (const auto& p : kept) {
    flat.insert(flat.end(), p.nsr.begin(), p.nsr.end());
    flat.insert(flat.end(), p.af.begin(), p.af.end());
  }
  csv::write_segments_csv(args.out, flat);
  write_meta(args.out,
             make_meta("segment", cfg,
                       {args.nn, csv::spans_companion_path(args.nn)},
                       {kSectionIngest, kSectionSegment}));
  std::cout << records.size() << " records -> " << windows.size()
            << " rhythm-pure windows; kept " << kept.size() << " of "
            << records.size() << " patients (" << flat.size() << " segments)\n"
            << "wrote " << args.out << "\n";
}

// -------------------------------------------------------------------- features

struct FeaturesArgs {
  ConfigCli config;
  std::string segments;
  std::string out;
};

void run_features(const FeaturesArgs& args) {
  const RunConfig cfg = args.config.resolve();
  check_input_lineage(args.segments, cfg, {kSectionIngest, kSectionSegment});
  const auto segments = csv::read_segments_csv(args.segments);
  std::vector<csv::FeatureRow> rows;
  rows.reserve(segments.size());
  for (const auto& seg : segments) {
    csv::FeatureRow row;
    row.patient_id = seg.patient_id;
    row.rhythm = seg.rhythm;
    row.segment_start_s = seg.start_s;
    try {
      row.v = compute_feature_vector(seg.nn_ms, cfg.features);
    } catch (const Error& e) {
      throw DataError("segment " + seg.patient_id + "/" +
                      std::string(rhythm_name(seg.rhythm)) + " at " +
                      format_double(seg.start_s) + " s: " + e.what());
    }
    rows.push_back(std::move(row));
  }
  csv::write_features_csv(args.out, rows);
  write_meta(args.out,
             make_meta("features", cfg, {args.segments},
                       {kSectionIngest, kSectionSegment, kSectionFeatures}));
  std::cout << "wrote " << args.out << " (" << rows.size()
            << " feature vectors)\n";
}

// ------------------------------------------------------------------------- fit

struct FitArgs {
  ConfigCli config;
  std::string features;
  std::string out;
};

void run_fit(const FitArgs& args) {
  const RunConfig cfg = args.config.resolve();
  check_input_lineage(args.features, cfg,
                      {kSectionIngest, kSectionSegment, kSectionFeatures});
  const auto patients = csv::rows_to_patients(csv::read_features_csv(args.features));
  std::vector<std::string> ids;
  std::vector<Eigen::MatrixXd> sources, targets;
  int excluded = 0;
  for (const auto& p : patients) {
    try {
      // Dry-run the per-patient pieces so one bad patient is excluded with a
      // reason instead of failing the whole fit.
      (void)estimate_distribution(p.nsr, cfg.model.ridge, p.patient_id);
      (void)fit_pair(p.patient_id, p.nsr, p.af, cfg.model.ridge,
                     cfg.model.strict_printed_forms);
    } catch (const Error& e) {
      std::cerr << "hrvtx fit: excluding patient " << p.patient_id << ": "
                << e.what() << "\n";
      ++excluded;
      continue;
    }
    ids.push_back(p.patient_id);
    sources.push_back(p.nsr);
    targets.push_back(p.af);
  }
  if (ids.empty()) {
    throw DataError("fit: no usable training patients remain (" +
                    std::to_string(excluded) + " excluded)");
  }
  const auto model = fit_transfer_model(ids, sources, targets, cfg.model.ridge,
                                        cfg.model.k_neighbours,
                                        cfg.model.strict_printed_forms,
                                        config_fingerprint(cfg));
  save_model(model, args.out);
  write_meta(args.out,
             make_meta("fit", cfg, {args.features},
                       {kSectionIngest, kSectionSegment, kSectionFeatures,
                        kSectionModel}));
  std::cout << "fitted " << ids.size() << " patients";
  if (excluded > 0) std::cout << " (" << excluded << " excluded)";
  std::cout << "; wrote " << args.out << "\n";
}

// --------------------------------------------------------------------- predict

struct PredictArgs {
  ConfigCli config;
  std::string model;
  std::string features;
  std::string out;
};

void run_predict(const PredictArgs& args) {
  const RunConfig cfg = args.config.resolve();
  check_input_lineage(args.features, cfg,
                      {kSectionIngest, kSectionSegment, kSectionFeatures});
  check_input_lineage(args.model, cfg,
                      {kSectionIngest, kSectionSegment, kSectionFeatures,
                       kSectionModel});
  const auto model = load_model(args.model);
  const auto rows = csv::read_features_csv(args.features);
  std::vector<csv::FeatureRow> predicted;
  std::size_t skipped = 0;
  for (const auto& row : rows) {
    if (row.rhythm != Rhythm::kNsr) {
      ++skipped;
      continue;
    }
    const auto values = row.v.values();
    Eigen::VectorXd x(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) {
      x(static_cast<Eigen::Index>(i)) = values[i];
    }
    const Eigen::VectorXd y = predict_target(model, x);
    std::array<double, HrvVector::kDim> out_values{};
    for (std::size_t i = 0; i < HrvVector::kDim; ++i) {
      out_values[i] = y(static_cast<Eigen::Index>(i));
    }
    csv::FeatureRow out_row;
    out_row.patient_id = row.patient_id;
    out_row.rhythm = Rhythm::kAf;  // the prediction targets the AF distribution
    out_row.segment_start_s = row.segment_start_s;
    out_row.v = HrvVector::from_values(out_values);
    predicted.push_back(std::move(out_row));
  }
  csv::write_features_csv(args.out, predicted);
  write_meta(args.out,
             make_meta("predict", cfg, {args.model, args.features},
                       {kSectionIngest, kSectionSegment, kSectionFeatures,
                        kSectionModel}));
  std::cout << "predicted " << predicted.size() << " AF vectors from NSR rows";
  if (skipped > 0) std::cout << " (" << skipped << " non-NSR rows skipped)";
  std::cout << "; wrote " << args.out << "\n";
}

// -------------------------------------------------------------------- validate

struct ValidateArgs {
  ConfigCli config;
  std::string features;
  std::string out;
};

void run_validate(const ValidateArgs& args) {
  const RunConfig cfg = args.config.resolve();
  check_input_lineage(args.features, cfg,
                      {kSectionIngest, kSectionSegment, kSectionFeatures});
  const auto patients = csv::rows_to_patients(csv::read_features_csv(args.features));
  const auto report =
      kfold_validate(patients, cfg.validate_config(), config_fingerprint(cfg));
  write_text_file(args.out, report_to_json(report));
  write_meta(args.out,
             make_meta("validate", cfg, {args.features},
                       {kSectionIngest, kSectionSegment, kSectionFeatures,
                        kSectionModel, kSectionValidate}));
  std::cout << render_report(report) << "\nwrote " << args.out << "\n";
}

// ---------------------------------------------------------------------- report

struct ReportArgs {
  std::string in;
  std::string out;
};

void run_report(const ReportArgs& args) {
  const auto report = report_from_json(read_text_file(args.in));
  const std::string rendered = render_report(report);
  std::cout << rendered;
  if (!args.out.empty()) {
    write_text_file(args.out, rendered);
    ArtifactMeta meta = make_meta("report", RunConfig{}, {args.in}, {});
    // Rendering depends only on the report file, not on the active config.
    meta.config_fingerprint = "";
    write_meta(args.out, meta);
    std::cout << "wrote " << args.out << "\n";
  }
}

// ------------------------------------------------------------- synth features

struct SynthFeaturesArgs {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 20240101;
  int patients = 30;
  int rows = 40;
  double mean_spread = -1.0;      // <0: keep generator default
  double cov_jitter = -1.0;       // <0: keep generator default
  double noise_scale = -1.0;      // <0: keep generator default
};

void run_synth_features(const SynthFeaturesArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = config_from_file(args.config_path);
  auto spec = SynthSpec::defaults(args.seed);
  spec.patients = args.patients;
  spec.rows_per_rhythm = args.rows;
  if (args.mean_spread >= 0.0) spec.mean_spread = args.mean_spread;
  if (args.cov_jitter >= 0.0) spec.cov_scale_jitter = args.cov_jitter;
  if (args.noise_scale >= 0.0) spec.noise_scale = args.noise_scale;

  const auto dataset = gen_feature_dataset(spec);
  csv::write_features_csv(args.out, csv::patients_to_rows(dataset.patients));

  std::ostringstream command;
  command << "synth features seed=" << spec.seed << " patients=" << spec.patients
          << " rows=" << spec.rows_per_rhythm
          << " mean_spread=" << format_double(spec.mean_spread)
          << " cov_scale_jitter=" << format_double(spec.cov_scale_jitter)
          << " noise_scale=" << format_double(spec.noise_scale)
          << " generator=splitmix64";
  // Feature-space synthesis has no upstream stages, so the sidecar records no
  // lineage sections and downstream checks pass by construction.
  write_meta(args.out, make_meta(command.str(), cfg, {}, {}));

  // Ground truth for oracle comparisons against the fitted model.
  nlohmann::json truth;
  truth["schema"] = "hrvtx.synth-truth.v1";
  truth["tool_version"] = kVersion;
  truth["seed"] = spec.seed;
  truth["patients"] = spec.patients;
  truth["rows_per_rhythm"] = spec.rows_per_rhythm;
  truth["mean_spread"] = spec.mean_spread;
  truth["cov_scale_jitter"] = spec.cov_scale_jitter;
  truth["noise_scale"] = spec.noise_scale;
  auto& linear = truth["af_map"]["linear"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < dataset.ground_truth.linear.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < dataset.ground_truth.linear.cols(); ++j) {
      row.push_back(dataset.ground_truth.linear(i, j));
    }
    linear.push_back(std::move(row));
  }
  auto& offset = truth["af_map"]["offset"] = nlohmann::json::array();
  for (Eigen::Index i = 0; i < dataset.ground_truth.offset.size(); ++i) {
    offset.push_back(dataset.ground_truth.offset(i));
  }
  const fs::path truth_path = fs::path(args.out).concat(".truth.json");
  write_text_file(truth_path, truth.dump(2) + "\n");

  std::cout << "wrote " << args.out << " (" << spec.patients << " patients x 2x"
            << spec.rows_per_rhythm << " rows) and " << truth_path.string()
            << "\n";
}

// ------------------------------------------------------------------- synth rr

struct SynthRrArgs {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 20240101;
  int records = 1;
  double nsr_s = 5400.0;
  double af_s = 5400.0;
  std::string prefix = "SYN";
};

void run_synth_rr(const SynthRrArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = config_from_file(args.config_path);
  if (args.records < 1) throw ConfigError("synth rr needs at least one record");
  std::vector<csv::RecordSeries> records;
  for (int r = 0; r < args.records; ++r) {
    SplitMix64 master =
        SplitMix64(args.seed).fork(static_cast<std::uint64_t>(r) + 1);
    auto nsr = gen_rr_series(master.next_u64(), Rhythm::kNsr, args.nsr_s);
    auto af = gen_rr_series(master.next_u64(), Rhythm::kAf, args.af_s);
    // The AF stretch follows the sinus stretch on the same virtual tape.
    af.span_start_s += args.nsr_s;
    af.span_end_s += args.nsr_s;
    for (double& t : af.beat_times) t += args.nsr_s;
    for (auto& interval : af.intervals) interval.onset_s += args.nsr_s;

    std::ostringstream id;
    id << args.prefix << std::setw(3) << std::setfill('0') << r + 1;
    csv::RecordSeries rec;
    rec.record = id.str();
    rec.series = {std::move(nsr), std::move(af)};
    records.push_back(std::move(rec));
  }
  csv::write_nn_csv(args.out, records);
  std::ostringstream command;
  command << "synth rr seed=" << args.seed << " records=" << args.records
          << " nsr_s=" << format_double(args.nsr_s)
          << " af_s=" << format_double(args.af_s) << " generator=splitmix64";
  write_meta(args.out, make_meta(command.str(), cfg, {}, {}));
  std::cout << "wrote " << args.out << " (" << records.size()
            << " records, one sinus + one AF stretch each)\n";
}

// -------------------------------------------------------------- demo-transform

struct DemoArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 20240101;
  int samples = 400;
  double ridge = -1.0;  // <0: keep config value
};

void write_cloud_csv(const fs::path& path, const std::vector<Eigen::Vector2d>& pts) {
  std::string text = "x,y\n";
  for (const auto& p : pts) {
    text += format_double(p.x()) + "," + format_double(p.y()) + "\n";
  }
  write_text_file(path, text);
}

void run_demo(const DemoArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) cfg = config_from_file(args.config_path);
  if (args.ridge >= 0.0) cfg.model.ridge = args.ridge;
  if (args.samples < 3) throw ConfigError("demo-transform needs at least 3 samples");

  SplitMix64 rng(args.seed);
  const auto rotation = [](double angle) {
    Eigen::Matrix2d r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
  };
  const Eigen::Vector2d mean_src(rng.next_in(-3.0, 3.0), rng.next_in(-3.0, 3.0));
  const Eigen::Vector2d mean_tgt(rng.next_in(4.0, 9.0), rng.next_in(4.0, 9.0));
  const Eigen::Vector2d sd_src(rng.next_in(2.0, 4.0), rng.next_in(0.5, 1.0));
  const Eigen::Vector2d sd_tgt(rng.next_in(0.5, 1.0), rng.next_in(2.5, 5.0));
  const Eigen::Matrix2d rot_src = rotation(rng.next_in(0.0, 3.14159));
  const Eigen::Matrix2d rot_tgt = rotation(rng.next_in(0.0, 3.14159));

  const auto draw = [&](const Eigen::Vector2d& mean, const Eigen::Matrix2d& rot,
                        const Eigen::Vector2d& sd) {
    Eigen::MatrixXd rows(args.samples, 2);
    for (int i = 0; i < args.samples; ++i) {
      const Eigen::Vector2d g(rng.next_gaussian(), rng.next_gaussian());
      rows.row(i) = (mean + rot * sd.cwiseProduct(g)).transpose();
    }
    return rows;
  };
  const Eigen::MatrixXd source = draw(mean_src, rot_src, sd_src);
  const Eigen::MatrixXd target = draw(mean_tgt, rot_tgt, sd_tgt);

  const auto transform = fit_pair("demo", source, target, cfg.model.ridge);
  std::vector<Eigen::Vector2d> input, centered, rotated, scaled, result;
  for (int i = 0; i < args.samples; ++i) {
    const Eigen::VectorXd x = source.row(i).transpose();
    const auto stages = apply_transform_stages(transform, x);
    input.emplace_back(x(0), x(1));
    centered.emplace_back(stages.centered(0), stages.centered(1));
    rotated.emplace_back(stages.rotated(0), stages.rotated(1));
    scaled.emplace_back(stages.scaled(0), stages.scaled(1));
    result.emplace_back(stages.result(0), stages.result(1));
  }

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  const std::vector<std::pair<std::string, const std::vector<Eigen::Vector2d>*>>
      stages = {{"00_input.csv", &input},
                {"01_centered.csv", &centered},
                {"02_rotated.csv", &rotated},
                {"03_scaled.csv", &scaled},
                {"04_result.csv", &result}};
  for (const auto& [name, pts] : stages) {
    const fs::path path = dir / name;
    write_cloud_csv(path, *pts);
    write_meta(path, make_meta("demo-transform seed=" + std::to_string(args.seed),
                               cfg, {}, {kSectionModel}));
  }

  // How close the mapped cloud's sample moments came to the target's.
  const auto moments = [](const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    cov /= static_cast<double>(pts.size() - 1);
    return std::make_pair(mean, cov);
  };
  std::vector<Eigen::Vector2d> target_pts;
  for (int i = 0; i < args.samples; ++i) {
    target_pts.emplace_back(target(i, 0), target(i, 1));
  }
  const auto [result_mean, result_cov] = moments(result);
  const auto [target_mean, target_cov] = moments(target_pts);
  std::cout << "wrote 5 stage CSVs to " << args.out_dir << "\n"
            << "target mean (" << format_double(target_mean.x()) << ", "
            << format_double(target_mean.y()) << "); mapped-cloud moment errors: mean "
            << format_double((result_mean - target_mean).norm()) << ", cov "
            << format_double((result_cov - target_cov).norm()) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HRV transfer-modeling pipeline (WFDB ingest, segmentation, "
               "HRV features, per-patient Gaussian transfer, validation)"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest", "parse WFDB records into a beat/NN-interval artifact");
  ingest_args.config.attach(ingest);
  ingest->add_option("records", ingest_args.stems,
                     "record path stems (expects <stem>.hea and <stem>.atr)")
      ->required();
  ingest->add_option("--out", ingest_args.out, "output NN CSV")->required();
  ingest->callback([&] { run_ingest(ingest_args); });

  SegmentArgs segment_args;
  auto* segment = app.add_subcommand(
      "segment", "slide rhythm-pure windows over the beat artifact");
  segment_args.config.attach(segment);
  segment->add_option("--nn", segment_args.nn, "NN CSV from ingest")->required();
  segment->add_option("--out", segment_args.out, "output segments CSV")->required();
  segment->callback([&] { run_segment(segment_args); });

  FeaturesArgs features_args;
  auto* features = app.add_subcommand(
      "features", "compute the 18 HRV indices for every segment");
  features_args.config.attach(features);
  features->add_option("--segments", features_args.segments,
                       "segments CSV from segment")->required();
  features->add_option("--out", features_args.out, "output features CSV")->required();
  features->callback([&] { run_features(features_args); });

  FitArgs fit_args;
  auto* fit = app.add_subcommand(
      "fit", "fit the per-patient NSR->AF transfer model");
  fit_args.config.attach(fit);
  fit->add_option("--features", fit_args.features, "features CSV")->required();
  fit->add_option("--out", fit_args.out, "output model JSON")->required();
  fit->callback([&] { run_fit(fit_args); });

  PredictArgs predict_args;
  auto* predict = app.add_subcommand(
      "predict", "map NSR feature rows to predicted AF rows");
  predict_args.config.attach(predict);
  predict->add_option("--model", predict_args.model, "model JSON from fit")->required();
  predict->add_option("--features", predict_args.features,
                      "features CSV with NSR rows")->required();
  predict->add_option("--out", predict_args.out, "output predicted-features CSV")
      ->required();
  predict->callback([&] { run_predict(predict_args); });

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand(
      "validate", "k-fold cross-validated evaluation with report tables");
  validate_args.config.attach(validate);
  validate->add_option("--features", validate_args.features, "features CSV")
      ->required();
  validate->add_option("--out", validate_args.out, "output report JSON")->required();
  validate->callback([&] { run_validate(validate_args); });

  ReportArgs report_args;
  auto* report = app.add_subcommand(
      "report", "render a report JSON as fixed-width tables");
  report->add_option("--in", report_args.in, "report JSON from validate")->required();
  report->add_option("--out", report_args.out, "also write the rendered text here");
  report->callback([&] { run_report(report_args); });

  auto* synth = app.add_subcommand("synth", "synthetic data generators");
  synth->require_subcommand(1);

  SynthFeaturesArgs synth_features_args;
  auto* synth_features = synth->add_subcommand(
      "features", "feature-space dataset with a shared ground-truth AF map");
  synth_features->add_option("--config", synth_features_args.config_path,
                             "JSON config (recorded in the sidecar)");
  synth_features->add_option("--out", synth_features_args.out, "output features CSV")
      ->required();
  synth_features->add_option("--seed", synth_features_args.seed, "generator seed");
  synth_features->add_option("--patients", synth_features_args.patients,
                             "number of patients");
  synth_features->add_option("--rows", synth_features_args.rows,
                             "rows per rhythm per patient");
  synth_features->add_option("--mean-spread", synth_features_args.mean_spread,
                             "patient mean offset in covariance units");
  synth_features->add_option("--cov-jitter", synth_features_args.cov_jitter,
                             "log-range of per-patient covariance scaling");
  synth_features->add_option("--noise-scale", synth_features_args.noise_scale,
                             "noise fraction of per-axis target deviation");
  synth_features->callback([&] { run_synth_features(synth_features_args); });

  SynthRrArgs synth_rr_args;
  auto* synth_rr = synth->add_subcommand(
      "rr", "beat-interval records with one sinus and one AF stretch");
  synth_rr->add_option("--config", synth_rr_args.config_path,
                       "JSON config (recorded in the sidecar)");
  synth_rr->add_option("--out", synth_rr_args.out, "output NN CSV")->required();
  synth_rr->add_option("--seed", synth_rr_args.seed, "generator seed");
  synth_rr->add_option("--records", synth_rr_args.records, "number of records");
  synth_rr->add_option("--nsr-s", synth_rr_args.nsr_s, "sinus stretch length (s)");
  synth_rr->add_option("--af-s", synth_rr_args.af_s, "AF stretch length (s)");
  synth_rr->add_option("--prefix", synth_rr_args.prefix, "record id prefix");
  synth_rr->callback([&] { run_synth_rr(synth_rr_args); });

  DemoArgs demo_args;
  auto* demo = app.add_subcommand(
      "demo-transform",
      "dump a 2-D cloud and its four transform stages as CSVs");
  demo->add_option("--config", demo_args.config_path, "JSON config");
  demo->add_option("--out-dir", demo_args.out_dir, "output directory")->required();
  demo->add_option("--seed", demo_args.seed, "cloud seed");
  demo->add_option("--samples", demo_args.samples, "points per cloud");
  demo->add_option("--ridge", demo_args.ridge, "covariance ridge override");
  demo->callback([&] { run_demo(demo_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "hrvtx: " << e.what() << "\n";
    return 1;
  } catch (const ConditioningError& e) {
    std::cerr << "hrvtx: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "hrvtx: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hrvtx: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
