#pragma once

#include <map>
#include <string>
#include <vector>

#include "hrvtx/wfdb.hpp"

namespace hrvtx {

struct SegmentConfig {
  double window_s = 600.0;
  double step_s = 300.0;
  double anchor_s = 0.0;      // start of the first window
  int min_nn_per_segment = 30;
  int min_segments_per_rhythm = 15;  // per-patient withdrawal threshold
};

struct Segment {
  std::string patient_id;
  double start_s = 0.0;
  double duration_s = 0.0;
  Rhythm rhythm = Rhythm::kOther;
  std::vector<double> nn_ms;  // onset order
};

struct PatientSegments {
  std::string patient_id;
  std::vector<Segment> nsr;
  std::vector<Segment> af;
};

// Slides half-open windows [anchor + k*step, +window) over one record's
// annotated time and keeps the rhythm-pure ones. A window is dropped when
// the QRS beats inside it come from more than one rhythm, when that rhythm
// is kOther, or when fewer than min_nn_per_segment NN intervals lie fully
// inside it. Emitted segments carry the window's NN values in onset order.
std::vector<Segment> make_segments(const std::string& patient_id,
                                   const std::vector<wfdb::NnSeries>& series,
                                   const SegmentConfig& cfg);

// Groups segments by patient and drops patients with fewer than
// min_segments_per_rhythm segments in either rhythm. Output sorted by
// patient id.
std::vector<PatientSegments> filter_patients(const std::vector<Segment>& segments,
                                             const SegmentConfig& cfg);

}  // namespace hrvtx
