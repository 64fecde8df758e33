#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hrvtx/features.hpp"
#include "hrvtx/segment.hpp"
#include "hrvtx/validate.hpp"
#include "hrvtx/wfdb.hpp"

namespace hrvtx::csv {

// Beat-stream artifact. The main file holds one row per QRS beat
// (record,span_rhythm,beat_time_s,nn_ms with nn_ms empty when no NN
// interval starts at that beat); a companion "<path>.spans.csv" preserves
// the span boundaries, including spans without beats, so reading the pair
// reproduces the NnSeries list exactly.
struct RecordSeries {
  std::string record;
  std::vector<wfdb::NnSeries> series;
};

std::filesystem::path spans_companion_path(const std::filesystem::path& nn_csv);
void write_nn_csv(const std::filesystem::path& path,
                  const std::vector<RecordSeries>& records);
std::vector<RecordSeries> read_nn_csv(const std::filesystem::path& path);

// Segment artifact: one row per window, NN values ';'-joined in one field.
void write_segments_csv(const std::filesystem::path& path,
                        const std::vector<Segment>& segments);
std::vector<Segment> read_segments_csv(const std::filesystem::path& path);

// Feature artifact: patient_id,rhythm,segment_start_s plus the 18 index
// columns in canonical order.
struct FeatureRow {
  std::string patient_id;
  Rhythm rhythm = Rhythm::kOther;
  double segment_start_s = 0.0;
  HrvVector v;
};

void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path);

// Groups feature rows into per-patient NSR/AF matrices (row order preserved,
// kOther rows rejected). Patients sorted by id.
std::vector<PatientFeatures> rows_to_patients(const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> patients_to_rows(const std::vector<PatientFeatures>& patients);

}  // namespace hrvtx::csv
