#include "hrvtx/segment.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hrvtx/errors.hpp"

namespace hrvtx {

namespace {

// Absorbs sub-nanosecond float noise at window edges without letting a real
// beat slip across one.
constexpr double kEdgeTolerance = 1e-9;

}  // namespace

std::vector<Segment> make_segments(const std::string& patient_id,
                                   const std::vector<wfdb::NnSeries>& series,
                                   const SegmentConfig& cfg) {
  if (cfg.window_s <= 0.0) throw ConfigError("window length must be positive");
  if (cfg.step_s <= 0.0) throw ConfigError("window step must be positive");
  if (cfg.min_nn_per_segment < 2) {
    throw ConfigError("minimum NN count per segment must be at least 2");
  }

  double record_end = cfg.anchor_s;
  for (const auto& s : series) record_end = std::max(record_end, s.span_end_s);

  std::vector<Segment> out;
  for (std::size_t k = 0;; ++k) {
    const double ws = cfg.anchor_s + static_cast<double>(k) * cfg.step_s;
    const double we = ws + cfg.window_s;
    if (we > record_end + kEdgeTolerance) break;

    bool mixed = false;
    bool any_beat = false;
    Rhythm rhythm = Rhythm::kOther;
    std::vector<const wfdb::NnSeries*> touching;
    for (const auto& s : series) {
      auto lo = std::lower_bound(s.beat_times.begin(), s.beat_times.end(), ws);
      if (lo == s.beat_times.end() || *lo >= we) continue;
      touching.push_back(&s);
      if (!any_beat) {
        rhythm = s.rhythm;
        any_beat = true;
      } else if (s.rhythm != rhythm) {
        mixed = true;
      }
    }
    if (!any_beat || mixed || rhythm == Rhythm::kOther) continue;

    Segment seg;
    seg.patient_id = patient_id;
    seg.start_s = ws;
    seg.duration_s = cfg.window_s;
    seg.rhythm = rhythm;
    for (const auto* s : touching) {
      for (const auto& nn : s->intervals) {
        // Both endpoints of the interval must sit inside the window.
        if (nn.onset_s < ws) continue;
        if (nn.onset_s + nn.ms / 1000.0 >= we) continue;
        seg.nn_ms.push_back(nn.ms);
      }
    }
    if (static_cast<int>(seg.nn_ms.size()) < cfg.min_nn_per_segment) continue;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<PatientSegments> filter_patients(const std::vector<Segment>& segments,
                                             const SegmentConfig& cfg) {
  std::map<std::string, PatientSegments> by_patient;
  for (const auto& seg : segments) {
    auto& p = by_patient[seg.patient_id];
    p.patient_id = seg.patient_id;
    if (seg.rhythm == Rhythm::kNsr) {
      p.nsr.push_back(seg);
    } else if (seg.rhythm == Rhythm::kAf) {
      p.af.push_back(seg);
    }
    // kOther never reaches here via make_segments; tolerate and drop if a
    // hand-written CSV carries one.
  }

  std::vector<PatientSegments> out;
  for (auto& [id, p] : by_patient) {
    if (static_cast<int>(p.nsr.size()) < cfg.min_segments_per_rhythm) continue;
    if (static_cast<int>(p.af.size()) < cfg.min_segments_per_rhythm) continue;
    auto by_start = [](const Segment& a, const Segment& b) {
      return a.start_s < b.start_s;
    };
    std::sort(p.nsr.begin(), p.nsr.end(), by_start);
    std::sort(p.af.begin(), p.af.end(), by_start);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace hrvtx
