#include "hrvtx/csv.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "hrvtx/errors.hpp"
#include "hrvtx/util.hpp"

namespace hrvtx::csv {

namespace {

constexpr const char* kNnHeader = "record,span_rhythm,beat_time_s,nn_ms";
constexpr const char* kSpansHeader = "record,rhythm,start_s,end_s";
constexpr const char* kSegmentsHeader = "patient_id,rhythm,start_s,duration_s,nn_ms_list";

std::string features_header() {
  std::string h = "patient_id,rhythm,segment_start_s";
  for (const auto& name : HrvVector::names()) {
    h += ',';
    h += name;
  }
  return h;
}

std::vector<std::string_view> content_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

void expect_header(const std::vector<std::string_view>& lines, std::string_view want,
                   const std::filesystem::path& path) {
  if (lines.empty() || lines.front() != want) {
    throw ParseError(path.string() + ": expected header '" + std::string(want) + "'");
  }
}

std::string row_context(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + " line " + std::to_string(line_no + 1);
}

}  // namespace

std::filesystem::path spans_companion_path(const std::filesystem::path& nn_csv) {
  std::filesystem::path p = nn_csv;
  p += ".spans.csv";
  return p;
}

void write_nn_csv(const std::filesystem::path& path,
                  const std::vector<RecordSeries>& records) {
  std::string beats = std::string(kNnHeader) + "\n";
  std::string spans = std::string(kSpansHeader) + "\n";
  for (const auto& rec : records) {
    if (rec.record.empty() || rec.record.find(',') != std::string::npos) {
      throw DataError("record name unusable in CSV: '" + rec.record + "'");
    }
    for (const auto& s : rec.series) {
      spans += rec.record;
      spans += ',';
      spans += rhythm_name(s.rhythm);
      spans += ',';
      spans += format_double(s.span_start_s);
      spans += ',';
      spans += format_double(s.span_end_s);
      spans += '\n';

      std::size_t next_interval = 0;
      for (double t : s.beat_times) {
        beats += rec.record;
        beats += ',';
        beats += rhythm_name(s.rhythm);
        beats += ',';
        beats += format_double(t);
        beats += ',';
        if (next_interval < s.intervals.size() &&
            s.intervals[next_interval].onset_s == t) {
          beats += format_double(s.intervals[next_interval].ms);
          ++next_interval;
        }
        beats += '\n';
      }
      if (next_interval != s.intervals.size()) {
        throw DataError("interval onset does not coincide with a beat time in record " +
                        rec.record);
      }
    }
  }
  write_text_file(path, beats);
  write_text_file(spans_companion_path(path), spans);
}

std::vector<RecordSeries> read_nn_csv(const std::filesystem::path& path) {
  const auto spans_path = spans_companion_path(path);
  const std::string spans_text = read_text_file(spans_path);
  const auto span_lines = content_lines(spans_text);
  expect_header(span_lines, kSpansHeader, spans_path);

  std::vector<RecordSeries> records;
  std::map<std::string, std::size_t> record_index;
  for (std::size_t i = 1; i < span_lines.size(); ++i) {
    const auto fields = split(span_lines[i], ',');
    if (fields.size() != 4) {
      throw ParseError(row_context(spans_path, i) + ": expected 4 fields");
    }
    const std::string rec(fields[0]);
    auto [it, inserted] = record_index.emplace(rec, records.size());
    if (inserted) records.push_back({rec, {}});

    wfdb::NnSeries s;
    s.rhythm = rhythm_from_name(fields[1]);
    s.span_start_s = parse_double(fields[2], "span start_s");
    s.span_end_s = parse_double(fields[3], "span end_s");
    if (!(s.span_end_s > s.span_start_s)) {
      throw DataError(row_context(spans_path, i) + ": span must have positive length");
    }
    auto& series = records[it->second].series;
    if (!series.empty() && s.span_start_s < series.back().span_end_s) {
      throw DataError(row_context(spans_path, i) + ": spans overlap or run backwards");
    }
    series.push_back(std::move(s));
  }

  const std::string text = read_text_file(path);
  const auto lines = content_lines(text);
  expect_header(lines, kNnHeader, path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != 4) {
      throw ParseError(row_context(path, i) + ": expected 4 fields");
    }
    const std::string rec(fields[0]);
    const auto it = record_index.find(rec);
    if (it == record_index.end()) {
      throw DataError(row_context(path, i) + ": record '" + rec +
                      "' missing from the spans companion");
    }
    const Rhythm rhythm = rhythm_from_name(fields[1]);
    const double t = parse_double(fields[2], "beat_time_s");

    auto& series = records[it->second].series;
    wfdb::NnSeries* home = nullptr;
    for (auto& s : series) {
      if (t >= s.span_start_s && t < s.span_end_s) {
        home = &s;
        break;
      }
    }
    if (home == nullptr) {
      throw DataError(row_context(path, i) + ": beat at " + std::string(fields[2]) +
                      " s falls outside every span of record " + rec);
    }
    if (home->rhythm != rhythm) {
      throw DataError(row_context(path, i) + ": span_rhythm disagrees with the "
                      "spans companion");
    }
    if (!home->beat_times.empty() && t <= home->beat_times.back()) {
      throw DataError(row_context(path, i) + ": beat times not strictly increasing");
    }
    home->beat_times.push_back(t);
    if (!trim(fields[3]).empty()) {
      const double nn = parse_double(fields[3], "nn_ms");
      home->intervals.push_back({t, nn});
    }
  }
  return records;
}

void write_segments_csv(const std::filesystem::path& path,
                        const std::vector<Segment>& segments) {
  std::string out = std::string(kSegmentsHeader) + "\n";
  for (const auto& seg : segments) {
    if (seg.patient_id.empty() || seg.patient_id.find(',') != std::string::npos) {
      throw DataError("patient id unusable in CSV: '" + seg.patient_id + "'");
    }
    out += seg.patient_id;
    out += ',';
    out += rhythm_name(seg.rhythm);
    out += ',';
    out += format_double(seg.start_s);
    out += ',';
    out += format_double(seg.duration_s);
    out += ',';
    for (std::size_t i = 0; i < seg.nn_ms.size(); ++i) {
      if (i) out += ';';
      out += format_double(seg.nn_ms[i]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<Segment> read_segments_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = content_lines(text);
  expect_header(lines, kSegmentsHeader, path);

  std::vector<Segment> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != 5) {
      throw ParseError(row_context(path, i) + ": expected 5 fields");
    }
    Segment seg;
    seg.patient_id = std::string(fields[0]);
    seg.rhythm = rhythm_from_name(fields[1]);
    seg.start_s = parse_double(fields[2], "segment start_s");
    seg.duration_s = parse_double(fields[3], "segment duration_s");
    if (!trim(fields[4]).empty()) {
      for (auto tok : split(fields[4], ';')) {
        seg.nn_ms.push_back(parse_double(tok, "nn_ms"));
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

void write_features_csv(const std::filesystem::path& path,
                        const std::vector<FeatureRow>& rows) {
  std::string out = features_header() + "\n";
  for (const auto& row : rows) {
    if (row.patient_id.empty() || row.patient_id.find(',') != std::string::npos) {
      throw DataError("patient id unusable in CSV: '" + row.patient_id + "'");
    }
    out += row.patient_id;
    out += ',';
    out += rhythm_name(row.rhythm);
    out += ',';
    out += format_double(row.segment_start_s);
    for (double v : row.v.values()) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<FeatureRow> read_features_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto lines = content_lines(text);
  expect_header(lines, features_header(), path);

  std::vector<FeatureRow> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], ',');
    if (fields.size() != 3 + HrvVector::kDim) {
      throw ParseError(row_context(path, i) + ": expected " +
                       std::to_string(3 + HrvVector::kDim) + " fields");
    }
    FeatureRow row;
    row.patient_id = std::string(fields[0]);
    row.rhythm = rhythm_from_name(fields[1]);
    row.segment_start_s = parse_double(fields[2], "segment_start_s");
    std::array<double, HrvVector::kDim> values{};
    for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
      values[c] = parse_double(fields[3 + c], HrvVector::names()[c]);
    }
    row.v = HrvVector::from_values(values);
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<PatientFeatures> rows_to_patients(const std::vector<FeatureRow>& rows) {
  std::map<std::string, std::pair<std::vector<HrvVector>, std::vector<HrvVector>>> acc;
  for (const auto& row : rows) {
    if (row.rhythm == Rhythm::kOther) {
      throw DataError("feature rows must be NSR or AF, got OTHER for patient " +
                      row.patient_id);
    }
    auto& slot = acc[row.patient_id];
    (row.rhythm == Rhythm::kNsr ? slot.first : slot.second).push_back(row.v);
  }

  std::vector<PatientFeatures> out;
  for (const auto& [id, slot] : acc) {
    PatientFeatures p;
    p.patient_id = id;
    p.nsr.resize(static_cast<Eigen::Index>(slot.first.size()),
                 static_cast<Eigen::Index>(HrvVector::kDim));
    for (std::size_t r = 0; r < slot.first.size(); ++r) {
      const auto vals = slot.first[r].values();
      for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
        p.nsr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vals[c];
      }
    }
    p.af.resize(static_cast<Eigen::Index>(slot.second.size()),
                static_cast<Eigen::Index>(HrvVector::kDim));
    for (std::size_t r = 0; r < slot.second.size(); ++r) {
      const auto vals = slot.second[r].values();
      for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
        p.af(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vals[c];
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<FeatureRow> patients_to_rows(const std::vector<PatientFeatures>& patients) {
  std::vector<FeatureRow> rows;
  for (const auto& p : patients) {
    for (Eigen::Index r = 0; r < p.nsr.rows(); ++r) {
      FeatureRow row;
      row.patient_id = p.patient_id;
      row.rhythm = Rhythm::kNsr;
      row.segment_start_s = static_cast<double>(r);
      std::array<double, HrvVector::kDim> vals{};
      for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
        vals[c] = p.nsr(r, static_cast<Eigen::Index>(c));
      }
      row.v = HrvVector::from_values(vals);
      rows.push_back(std::move(row));
    }
    for (Eigen::Index r = 0; r < p.af.rows(); ++r) {
      FeatureRow row;
      row.patient_id = p.patient_id;
      row.rhythm = Rhythm::kAf;
      row.segment_start_s = static_cast<double>(r);
      std::array<double, HrvVector::kDim> vals{};
      for (std::size_t c = 0; c < HrvVector::kDim; ++c) {
        vals[c] = p.af(r, static_cast<Eigen::Index>(c));
      }
      row.v = HrvVector::from_values(vals);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace hrvtx::csv
