#include "hrvtx/wfdb.hpp"

#include <algorithm>
#include <array>

#include "hrvtx/errors.hpp"
#include "hrvtx/util.hpp"

namespace hrvtx {

std::string_view rhythm_name(Rhythm r) {
  switch (r) {
    case Rhythm::kNsr: return "NSR";
    case Rhythm::kAf: return "AF";
    case Rhythm::kOther: return "OTHER";
  }
  return "OTHER";
}

Rhythm rhythm_from_name(std::string_view name) {
  if (name == "NSR") return Rhythm::kNsr;
  if (name == "AF") return Rhythm::kAf;
  if (name == "OTHER") return Rhythm::kOther;
  throw ParseError("unknown rhythm label '" + std::string(name) + "'");
}

namespace wfdb {
namespace {

constexpr int kSkip = 59;
constexpr int kNum = 60;
constexpr int kSub = 61;
constexpr int kChn = 62;
constexpr int kAux = 63;

std::string offset_msg(std::size_t offset) {
  return " (byte offset " + std::to_string(offset) + ")";
}

}  // namespace

bool is_beat_code(int type_code) {
  static constexpr std::array<int, 18> kQrsCodes = {1,  2,  3,  4,  5,  6,
                                                    7,  8,  9,  10, 11, 12,
                                                    13, 25, 34, 35, 38, 41};
  return std::find(kQrsCodes.begin(), kQrsCodes.end(), type_code) != kQrsCodes.end();
}

RecordHeader parse_header(std::string_view text) {
  for (std::string_view raw_line : split(text, '\n')) {
    std::string_view line = trim(raw_line);
    if (line.empty() || line.front() == '#') continue;

    auto tokens = split_ws(line);
    if (tokens.size() < 2) {
      throw ParseError("header record line needs at least a name and a signal "
                       "count: '" + std::string(line) + "'");
    }

    RecordHeader hdr;
    // Multi-segment names carry a "/segments" suffix that is not part of the
    // record name proper.
    std::string_view name = tokens[0];
    if (auto slash = name.find('/'); slash != std::string_view::npos) {
      name = name.substr(0, slash);
    }
    if (name.empty()) throw ParseError("header record line: empty record name");
    hdr.record_name = std::string(name);

    hdr.signal_count = static_cast<int>(parse_long(tokens[1], "header signal count"));
    if (hdr.signal_count < 0) {
      throw ParseError("header signal count must be non-negative");
    }

    if (tokens.size() >= 3) {
      // Field shape is fs[/counter[(base)]]; only fs matters here.
      std::string_view fs_tok = tokens[2];
      if (auto cut = fs_tok.find_first_of("/("); cut != std::string_view::npos) {
        fs_tok = fs_tok.substr(0, cut);
      }
      hdr.sampling_frequency = parse_double(fs_tok, "header sampling frequency");
      if (hdr.sampling_frequency <= 0.0) {
        throw ParseError("header sampling frequency must be positive, got " +
                         std::string(tokens[2]));
      }
    }

    if (tokens.size() >= 4) {
      long nsamples = parse_long(tokens[3], "header sample count");
      if (nsamples < 0) throw ParseError("header sample count must be non-negative");
      hdr.duration_s = static_cast<double>(nsamples) / hdr.sampling_frequency;
    }
    return hdr;
  }
  throw ParseError("header has no record line");
}

std::vector<AnnotationEvent> parse_annotations(std::span<const std::uint8_t> data) {
  std::vector<AnnotationEvent> events;
  std::int64_t current_sample = 0;
  std::int64_t pending_skip = 0;
  int sticky_channel = 0;
  int sticky_num = 0;
  std::size_t i = 0;

  auto read_word = [&](std::size_t at) -> std::uint16_t {
    return static_cast<std::uint16_t>(data[at] | (data[at + 1] << 8));
  };

  bool terminated = false;
  while (i < data.size()) {
    if (i + 2 > data.size()) {
      throw ParseError("annotation stream ends mid-word" + offset_msg(i));
    }
    const std::size_t word_offset = i;
    const std::uint16_t word = read_word(i);
    i += 2;
    if (word == 0) {
      terminated = true;
      break;
    }

    const int code = word >> 10;
    const int increment = word & 0x3FF;

    if (code == kSkip) {
      // Four extra bytes hold a signed 32-bit interval, high word first.
      // It is added to the running time; the skip word's own increment
      // field carries no information.
      if (i + 4 > data.size()) {
        throw ParseError("truncated extended interval" + offset_msg(word_offset));
      }
      const std::uint32_t high = read_word(i);
      const std::uint32_t low = read_word(i + 2);
      i += 4;
      pending_skip += static_cast<std::int32_t>((high << 16) | low);
      continue;
    }

    if (code == kSub) {
      if (events.empty()) {
        throw ParseError("subtype modifier before any event" + offset_msg(word_offset));
      }
      events.back().subtype = static_cast<std::int8_t>(word & 0xFF);
      continue;
    }

    if (code == kChn) {
      sticky_channel = static_cast<std::uint8_t>(word & 0xFF);
      if (!events.empty()) events.back().channel = sticky_channel;
      continue;
    }

    if (code == kNum) {
      sticky_num = static_cast<std::int8_t>(word & 0xFF);
      if (!events.empty()) events.back().num = sticky_num;
      continue;
    }

    if (code == kAux) {
      if (events.empty()) {
        throw ParseError("aux string before any event" + offset_msg(word_offset));
      }
      const std::size_t len = static_cast<std::size_t>(increment);
      const std::size_t padded = len + (len & 1);  // strings occupy whole words
      if (i + padded > data.size()) {
        throw ParseError("truncated aux string" + offset_msg(word_offset));
      }
      events.back().aux =
          std::string(reinterpret_cast<const char*>(data.data() + i), len);
      i += padded;
      continue;
    }

    if (code == 0) {
      // A zero code is only legal as part of the all-zero terminator word.
      throw ParseError("zero type code with nonzero increment" + offset_msg(word_offset));
    }

    const std::int64_t sample = current_sample + pending_skip + increment;
    if (!events.empty() && sample < events.back().sample_index) {
      throw ParseError("event time moves backwards at sample " +
                       std::to_string(sample) + offset_msg(word_offset));
    }
    AnnotationEvent ev;
    ev.sample_index = sample;
    ev.type_code = code;
    ev.channel = sticky_channel;
    ev.num = sticky_num;
    events.push_back(std::move(ev));
    current_sample = sample;
    pending_skip = 0;
  }

  if (!terminated) {
    throw ParseError("annotation stream missing zero-word terminator" + offset_msg(i));
  }
  return events;
}

namespace {

std::string strip_trailing_nuls(std::string_view s) {
  while (!s.empty() && s.back() == '\0') s.remove_suffix(1);
  return std::string(s);
}

Rhythm classify_rhythm_marker(std::string_view label) {
  if (label == "(N") return Rhythm::kNsr;
  if (label == "(AFIB") return Rhythm::kAf;
  return Rhythm::kOther;
}

}  // namespace

std::vector<RhythmSpan> extract_rhythm_spans(const std::vector<AnnotationEvent>& events,
                                             double sampling_frequency,
                                             double record_end_s) {
  if (sampling_frequency <= 0.0) {
    throw ConfigError("sampling frequency must be positive");
  }

  struct Marker {
    double t;
    Rhythm rhythm;
  };
  std::vector<Marker> markers;
  for (const auto& ev : events) {
    if (!ev.aux) continue;
    std::string label = strip_trailing_nuls(*ev.aux);
    if (label.empty() || label.front() != '(') continue;
    markers.push_back({static_cast<double>(ev.sample_index) / sampling_frequency,
                       classify_rhythm_marker(label)});
  }

  std::vector<RhythmSpan> spans;
  for (std::size_t m = 0; m < markers.size(); ++m) {
    const double start = markers[m].t;
    const double end =
        (m + 1 < markers.size()) ? std::min(markers[m + 1].t, record_end_s)
                                 : record_end_s;
    if (end > start) spans.push_back({markers[m].rhythm, start, end});
  }
  return spans;
}

std::vector<NnSeries> extract_nn_series(const std::vector<AnnotationEvent>& events,
                                        const std::vector<RhythmSpan>& spans,
                                        double sampling_frequency,
                                        const IngestConfig& cfg) {
  if (sampling_frequency <= 0.0) {
    throw ConfigError("sampling frequency must be positive");
  }
  if (cfg.nn_min_ms <= 0.0 || cfg.nn_max_ms <= cfg.nn_min_ms) {
    throw ConfigError("NN bounds must satisfy 0 < min < max");
  }

  struct Beat {
    double t;
    int type_code;
  };
  std::vector<Beat> beats;
  for (const auto& ev : events) {
    if (!is_beat_code(ev.type_code)) continue;
    const double t = static_cast<double>(ev.sample_index) / sampling_frequency;
    if (!beats.empty() && t <= beats.back().t) {
      throw DataError("beat times not strictly increasing at sample " +
                      std::to_string(ev.sample_index));
    }
    beats.push_back({t, ev.type_code});
  }

  std::vector<NnSeries> series;
  series.reserve(spans.size());
  for (const auto& span : spans) {
    NnSeries s;
    s.rhythm = span.rhythm;
    s.span_start_s = span.start_s;
    s.span_end_s = span.end_s;

    auto lo = std::lower_bound(beats.begin(), beats.end(), span.start_s,
                               [](const Beat& b, double t) { return b.t < t; });
    auto hi = std::lower_bound(lo, beats.end(), span.end_s,
                               [](const Beat& b, double t) { return b.t < t; });
    for (auto it = lo; it != hi; ++it) s.beat_times.push_back(it->t);

    if (span.rhythm != Rhythm::kOther) {
      for (auto it = lo; it != hi && it + 1 != hi; ++it) {
        if (it->type_code != kNormalBeatCode) continue;
        if ((it + 1)->type_code != kNormalBeatCode) continue;
        const double nn = ((it + 1)->t - it->t) * 1000.0;
        if (nn < cfg.nn_min_ms || nn > cfg.nn_max_ms) continue;
        s.intervals.push_back({it->t, nn});
      }
    }
    series.push_back(std::move(s));
  }
  return series;
}

}  // namespace wfdb
}  // namespace hrvtx
