#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hrvtx {

enum class Rhythm { kNsr, kAf, kOther };

// Names used in CSV artifacts and reports.
std::string_view rhythm_name(Rhythm r);
Rhythm rhythm_from_name(std::string_view name);

namespace wfdb {

struct RecordHeader {
  std::string record_name;
  int signal_count = 0;
  double sampling_frequency = 250.0;  // format default when the field is absent
  // Seconds of recorded signal, when the sample count is present in the header.
  std::optional<double> duration_s;
};

struct AnnotationEvent {
  std::int64_t sample_index = 0;
  int type_code = 0;  // 1..49 beat/non-beat codes; pseudo-codes never appear here
  int subtype = 0;
  int channel = 0;
  int num = 0;
  std::optional<std::string> aux;  // raw bytes, trailing NULs preserved
};

struct RhythmSpan {
  Rhythm rhythm = Rhythm::kOther;
  double start_s = 0.0;
  double end_s = 0.0;  // half-open [start_s, end_s)
};

struct NnInterval {
  double onset_s = 0.0;  // time of the beat that opens the interval
  double ms = 0.0;
};

// One rhythm span's worth of beats. beat_times holds every QRS event inside
// the span (ectopics included); intervals holds only normal-to-normal gaps
// that passed the physiologic bounds. Spans with rhythm kOther never carry
// intervals.
struct NnSeries {
  Rhythm rhythm = Rhythm::kOther;
  double span_start_s = 0.0;
  double span_end_s = 0.0;
  std::vector<double> beat_times;
  std::vector<NnInterval> intervals;
};

struct IngestConfig {
  double nn_min_ms = 200.0;
  double nn_max_ms = 3000.0;
};

// True for annotation codes that mark a QRS complex of any morphology.
bool is_beat_code(int type_code);
// The single code for a normal sinus beat.
inline constexpr int kNormalBeatCode = 1;

// Parses the first non-comment line of a header file. Missing sampling
// frequency falls back to 250 Hz; a "fs/counter" form keeps only fs.
RecordHeader parse_header(std::string_view text);

// Decodes the binary annotation stream: little-endian 16-bit words, 6-bit
// type code over a 10-bit time increment, pseudo-codes 59..63 for extended
// intervals and the subtype/num/channel/aux fields, zero word terminator.
// Modifier words apply to the event they follow; channel and num persist
// onto later events, subtype and aux do not.
std::vector<AnnotationEvent> parse_annotations(std::span<const std::uint8_t> data);

// Turns rhythm-change aux strings ("(" prefix) into a half-open span list
// covering up to record_end_s. "(N" is sinus rhythm and "(AFIB" atrial
// fibrillation, by exact match after stripping trailing NULs; every other
// "(" marker is kOther.
std::vector<RhythmSpan> extract_rhythm_spans(const std::vector<AnnotationEvent>& events,
                                             double sampling_frequency,
                                             double record_end_s);

// Splits beats by span and derives NN intervals between consecutive normal
// beats with no other QRS between them. Intervals outside
// [nn_min_ms, nn_max_ms] are dropped. One NnSeries per span, span order.
std::vector<NnSeries> extract_nn_series(const std::vector<AnnotationEvent>& events,
                                        const std::vector<RhythmSpan>& spans,
                                        double sampling_frequency,
                                        const IngestConfig& cfg);

}  // namespace wfdb
}  // namespace hrvtx
