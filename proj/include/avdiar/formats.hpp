// avdiar/formats.hpp
//
// Readers and writers for RTTM, UEM, and the toolkit interchange files
// (detections, shots, embeddings, score streams).  All time fields written
// in seconds use exactly 3 decimal places; parsing converts to integer
// milliseconds rounding half away from zero, so write -> read -> write is
// byte-identical.

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef AVDIAR_FORMATS_HPP
#define AVDIAR_FORMATS_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avdiar/errors.hpp"
#include "avdiar/timeline.hpp"

namespace avdiar {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Turn {
  std::string speaker;
  Interval interval;

  friend bool operator==(const Turn& a, const Turn& b) {
    return a.speaker == b.speaker && a.interval == b.interval;
  }
};

// One recording's speaker turns.  Different speakers may overlap
// (cross-talk); one speaker's own turns may not.
struct Diarization {
  std::string recording_id;
  std::vector<Turn> turns;

  // Canonical turn order: onset, then speaker label, then offset.
  void normalize() {
    std::sort(turns.begin(), turns.end(), [](const Turn& a, const Turn& b) {
      if (a.interval.onset_ms != b.interval.onset_ms)
        return a.interval.onset_ms < b.interval.onset_ms;
      if (a.speaker != b.speaker) return a.speaker < b.speaker;
      return a.interval.offset_ms < b.interval.offset_ms;
    });
  }

  std::vector<std::string> speakers() const {
    std::vector<std::string> out;
    for (const Turn& t : turns) out.push_back(t.speaker);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Timeline speaker_timeline(const std::string& speaker) const {
    std::vector<Interval> ivs;
    for (const Turn& t : turns)
      if (t.speaker == speaker) ivs.push_back(t.interval);
    return Timeline(std::move(ivs));
  }

  Timeline all_speech() const {
    std::vector<Interval> ivs;
    ivs.reserve(turns.size());
    for (const Turn& t : turns) ivs.push_back(t.interval);
    return Timeline(std::move(ivs));
  }

  // Rejects self-overlapping turns per speaker, naming speaker and time.
  void validate() const {
    std::map<std::string, std::vector<Interval>> per_speaker;
    for (const Turn& t : turns) per_speaker[t.speaker].push_back(t.interval);
    for (auto& [speaker, ivs] : per_speaker) {
      std::sort(ivs.begin(), ivs.end());
      for (std::size_t i = 1; i < ivs.size(); ++i) {
        if (ivs[i].onset_ms < ivs[i - 1].offset_ms)
          throw ValidationError("recording " + recording_id + ": speaker " +
                                speaker + " overlaps itself at " +
                                std::to_string(ivs[i].onset_ms) + " ms");
      }
    }
  }

  friend bool operator==(const Diarization& a, const Diarization& b) {
    return a.recording_id == b.recording_id && a.turns == b.turns;
  }
};

// Embedding attached to a face track or a speech segment.
struct EmbeddingRecord {
  std::string owner_id;
  Interval interval;
  std::vector<double> vector;
};

// Uniformly sampled scalar stream (ASD confidence or 0/1 VAD).
// Sample i covers [start_ms + i*hop_ms, start_ms + (i+1)*hop_ms).
struct ScoreStream {
  std::string owner_id;
  std::int64_t start_ms = 0;
  std::int64_t hop_ms = 1;
  std::vector<double> values;

  std::int64_t span_end_ms() const {
    return start_ms + hop_ms * static_cast<std::int64_t>(values.size());
  }
};

struct DetectionRecord {
  std::int64_t frame_index = 0;
  double x = 0, y = 0, width = 0, height = 0;
  double confidence = 0;
};

// ---------------------------------------------------------------------------
// Low-level helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string strip(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

inline std::int64_t parse_int(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected integer, got '" + tok + "'");
  }
  if (pos != tok.size())
    throw ParseError(line, "expected integer, got '" + tok + "'");
  return v;
}

inline double parse_real(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected real number, got '" + tok + "'");
  }
  if (pos != tok.size())
    throw ParseError(line, "expected real number, got '" + tok + "'");
  if (!std::isfinite(v))
    throw ValidationError("line " + std::to_string(line) +
                          ": non-finite value '" + tok + "'");
  return v;
}

// Iterates non-blank lines, tracking 1-based line numbers.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = strip(raw);
    if (line.empty()) continue;
    fn(line_no, line);
  }
}

}  // namespace detail

// Parses a decimal seconds field ("0.250", "-1.5", "12") to integer
// milliseconds, rounding half away from zero on the digits themselves so
// the result never depends on binary float representation.
inline std::int64_t seconds_to_ms(const std::string& token,
                                  std::size_t line = 0) {
  const std::string bad = "expected seconds value, got '" + token + "'";
  std::size_t i = 0;
  bool negative = false;
  if (i < token.size() && (token[i] == '+' || token[i] == '-')) {
    negative = token[i] == '-';
    ++i;
  }
  std::int64_t whole = 0;
  std::size_t digits = 0;
  while (i < token.size() && std::isdigit(static_cast<unsigned char>(token[i]))) {
    if (++digits > 12) throw ParseError(line, bad + " (too many digits)");
    whole = whole * 10 + (token[i] - '0');
    ++i;
  }
  std::int64_t frac_ms = 0;
  bool round_up = false;
  std::size_t frac_digits = 0;
  if (i < token.size() && token[i] == '.') {
    ++i;
    while (i < token.size() &&
           std::isdigit(static_cast<unsigned char>(token[i]))) {
      int d = token[i] - '0';
      if (frac_digits < 3)
        frac_ms = frac_ms * 10 + d;
      else if (frac_digits == 3 && d >= 5)
        round_up = true;
      ++frac_digits;
      ++i;
    }
  }
  if (i != token.size() || (digits == 0 && frac_digits == 0))
    throw ParseError(line, bad);
  while (frac_digits < 3 && frac_digits > 0) {
    frac_ms *= 10;
    ++frac_digits;
  }
  std::int64_t ms = whole * 1000 + frac_ms + (round_up ? 1 : 0);
  return negative ? -ms : ms;
}

// Milliseconds to a seconds string with exactly 3 decimal places.
inline std::string ms_to_seconds_3dp(std::int64_t ms) {
  std::int64_t a = ms < 0 ? -ms : ms;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%lld.%03lld", ms < 0 ? "-" : "",
                static_cast<long long>(a / 1000),
                static_cast<long long>(a % 1000));
  return buf;
}

// Shortest decimal form that round-trips a double exactly.
inline std::string format_real(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = std::strtod(buf, nullptr);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[48];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == parsed) return shorter;
  }
  return buf;
}

// ---------------------------------------------------------------------------
// RTTM
// ---------------------------------------------------------------------------

// Reads SPEAKER rows grouped by recording id (result sorted by id).  Accepts
// the 9-field NIST layout and the 10-field variant with a trailing slat
// column.  Rejects: wrong field count, a type other than SPEAKER, negative
// or zero durations, and per-speaker self-overlap.
inline std::vector<Diarization> read_rttm(std::istream& in) {
  std::map<std::string, Diarization> by_recording;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() != 9 && f.size() != 10)
      throw ParseError(line_no, "expected 9 or 10 fields, got " +
                                    std::to_string(f.size()));
    if (f[0] != "SPEAKER")
      throw ParseError(line_no, "expected type SPEAKER, got '" + f[0] + "'");
    std::int64_t onset = seconds_to_ms(f[3], line_no);
    std::int64_t dur = seconds_to_ms(f[4], line_no);
    if (dur <= 0)
      throw ParseError(line_no,
                       "duration must be positive, got " + f[4] + " s");
    Diarization& d = by_recording[f[1]];
    d.recording_id = f[1];
    d.turns.push_back(Turn{f[7], Interval(onset, onset + dur)});
  });
  std::vector<Diarization> out;
  out.reserve(by_recording.size());
  for (auto& [id, d] : by_recording) {
    d.normalize();
    d.validate();
    out.push_back(std::move(d));
  }
  return out;
}

inline void write_rttm(const Diarization& d, std::ostream& out) {
  Diarization sorted = d;
  sorted.normalize();
  for (const Turn& t : sorted.turns) {
    out << "SPEAKER " << sorted.recording_id << " 1 "
        << ms_to_seconds_3dp(t.interval.onset_ms) << ' '
        << ms_to_seconds_3dp(t.interval.duration_ms())
        << " <NA> <NA> " << t.speaker << " <NA> <NA>\n";
  }
}

inline std::string write_rttm(const Diarization& d) {
  std::ostringstream oss;
  write_rttm(d, oss);
  return oss.str();
}

inline void write_rttm(const std::vector<Diarization>& ds, std::ostream& out) {
  std::vector<const Diarization*> sorted;
  for (const Diarization& d : ds) sorted.push_back(&d);
  std::sort(sorted.begin(), sorted.end(),
            [](const Diarization* a, const Diarization* b) {
              return a->recording_id < b->recording_id;
            });
  for (const Diarization* d : sorted) write_rttm(*d, out);
}

// ---------------------------------------------------------------------------
// UEM scoring regions: "recording 1 onset_s offset_s" per line.
// ---------------------------------------------------------------------------

inline std::map<std::string, Timeline> read_uem(std::istream& in) {
  std::map<std::string, std::vector<Interval>> regions;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() != 4)
      throw ParseError(line_no,
                       "expected 4 fields, got " + std::to_string(f.size()));
    std::int64_t onset = seconds_to_ms(f[2], line_no);
    std::int64_t offset = seconds_to_ms(f[3], line_no);
    if (onset >= offset)
      throw ParseError(line_no, "empty scoring region");
    regions[f[0]].push_back(Interval(onset, offset));
  });
  std::map<std::string, Timeline> out;
  for (auto& [id, ivs] : regions) out.emplace(id, Timeline(std::move(ivs)));
  return out;
}

// ---------------------------------------------------------------------------
// Embeddings: "owner_id onset_ms offset_ms dim v1 .. vdim" per line.
// ---------------------------------------------------------------------------

inline std::vector<EmbeddingRecord> read_embeddings(std::istream& in) {
  std::vector<EmbeddingRecord> out;
  std::size_t file_dim = 0;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() < 5)
      throw ParseError(line_no, "expected owner, interval, dim and values");
    std::int64_t onset = detail::parse_int(f[1], line_no);
    std::int64_t offset = detail::parse_int(f[2], line_no);
    if (onset >= offset)
      throw ParseError(line_no, "embedding interval must be non-empty");
    std::int64_t dim = detail::parse_int(f[3], line_no);
    if (dim < 1) throw ParseError(line_no, "dimension must be >= 1");
    if (f.size() != 4 + static_cast<std::size_t>(dim))
      throw ParseError(line_no, "expected " + std::to_string(dim) +
                                    " vector values, got " +
                                    std::to_string(f.size() - 4));
    if (file_dim == 0) file_dim = static_cast<std::size_t>(dim);
    if (static_cast<std::size_t>(dim) != file_dim)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": embedding dimension " + std::to_string(dim) +
                            " differs from earlier records of dimension " +
                            std::to_string(file_dim));
    EmbeddingRecord rec;
    rec.owner_id = f[0];
    rec.interval = Interval(onset, offset);
    rec.vector.reserve(static_cast<std::size_t>(dim));
    for (std::int64_t i = 0; i < dim; ++i)
      rec.vector.push_back(detail::parse_real(f[4 + i], line_no));
    out.push_back(std::move(rec));
  });
  return out;
}

inline void write_embeddings(const std::vector<EmbeddingRecord>& records,
                             std::ostream& out) {
  for (const EmbeddingRecord& r : records) {
    out << r.owner_id << ' ' << r.interval.onset_ms << ' '
        << r.interval.offset_ms << ' ' << r.vector.size();
    for (double v : r.vector) out << ' ' << format_real(v);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Score streams: header "owner_id start_ms hop_ms count", then count values
// on the following line(s).
// ---------------------------------------------------------------------------

inline std::vector<ScoreStream> read_scores(std::istream& in) {
  std::vector<ScoreStream> out;
  std::int64_t pending = 0;  // values still owed to the open stream
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (pending == 0) {
      if (f.size() != 4)
        throw ParseError(line_no, "expected stream header "
                                  "'owner start_ms hop_ms count'");
      ScoreStream s;
      s.owner_id = f[0];
      s.start_ms = detail::parse_int(f[1], line_no);
      s.hop_ms = detail::parse_int(f[2], line_no);
      if (s.hop_ms <= 0) throw ParseError(line_no, "hop_ms must be positive");
      pending = detail::parse_int(f[3], line_no);
      if (pending < 0) throw ParseError(line_no, "count must be >= 0");
      s.values.reserve(static_cast<std::size_t>(pending));
      out.push_back(std::move(s));
    } else {
      if (static_cast<std::int64_t>(f.size()) > pending)
        throw ParseError(line_no, "more values than the declared count");
      for (const std::string& tok : f)
        out.back().values.push_back(detail::parse_real(tok, line_no));
      pending -= static_cast<std::int64_t>(f.size());
    }
  });
  if (pending != 0)
    throw ParseError("stream '" + out.back().owner_id + "' ends " +
                     std::to_string(pending) + " values short");
  return out;
}

inline void write_scores(const std::vector<ScoreStream>& streams,
                         std::ostream& out) {
  for (const ScoreStream& s : streams) {
    out << s.owner_id << ' ' << s.start_ms << ' ' << s.hop_ms << ' '
        << s.values.size() << '\n';
    for (std::size_t i = 0; i < s.values.size(); ++i)
      out << (i ? " " : "") << format_real(s.values[i]);
    if (!s.values.empty()) out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Detections: "frame x y w h conf" per line, sorted by frame.
// ---------------------------------------------------------------------------

inline std::vector<DetectionRecord> read_detections(std::istream& in) {
  std::vector<DetectionRecord> out;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() != 6)
      throw ParseError(line_no,
                       "expected 6 fields, got " + std::to_string(f.size()));
    DetectionRecord r;
    r.frame_index = detail::parse_int(f[0], line_no);
    r.x = detail::parse_real(f[1], line_no);
    r.y = detail::parse_real(f[2], line_no);
    r.width = detail::parse_real(f[3], line_no);
    r.height = detail::parse_real(f[4], line_no);
    r.confidence = detail::parse_real(f[5], line_no);
    if (r.frame_index < 0)
      throw ParseError(line_no, "frame index must be >= 0");
    if (r.width <= 0 || r.height <= 0)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": box must have positive width and height");
    if (r.confidence < 0 || r.confidence > 1)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": confidence must be in [0, 1]");
    if (!out.empty() && r.frame_index < out.back().frame_index)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": detections must be sorted by frame index");
    out.push_back(r);
  });
  return out;
}

inline void write_detections(const std::vector<DetectionRecord>& records,
                             std::ostream& out) {
  for (const DetectionRecord& r : records) {
    out << r.frame_index << ' ' << format_real(r.x) << ' ' << format_real(r.y)
        << ' ' << format_real(r.width) << ' ' << format_real(r.height) << ' '
        << format_real(r.confidence) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Shots: "onset_ms offset_ms" per line, sorted and non-overlapping.
// ---------------------------------------------------------------------------

inline std::vector<Interval> read_shots(std::istream& in) {
  std::vector<Interval> out;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() != 2)
      throw ParseError(line_no,
                       "expected 2 fields, got " + std::to_string(f.size()));
    std::int64_t onset = detail::parse_int(f[0], line_no);
    std::int64_t offset = detail::parse_int(f[1], line_no);
    if (onset >= offset) throw ParseError(line_no, "empty shot interval");
    if (!out.empty() && onset < out.back().offset_ms)
      throw ValidationError("line " + std::to_string(line_no) +
                            ": shots must be sorted and non-overlapping");
    out.push_back(Interval(onset, offset));
  });
  return out;
}

inline void write_shots(const std::vector<Interval>& shots,
                        std::ostream& out) {
  for (const Interval& s : shots)
    out << s.onset_ms << ' ' << s.offset_ms << '\n';
}

// ---------------------------------------------------------------------------
// Flat key-value files (pipeline config, grid specs, scenario specs, meta).
// Lines are "key value [value ...]"; '#' starts a comment.
// ---------------------------------------------------------------------------

struct KeyValues {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;

  const std::vector<std::string>* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  std::optional<std::string> get(const std::string& key) const {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    if (v->size() != 1)
      throw ValidationError("key '" + key + "' expects a single value");
    return (*v)[0];
  }

  double get_real(const std::string& key, double fallback) const {
    auto v = get(key);
    return v ? detail::parse_real(*v, 0) : fallback;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    return v ? detail::parse_int(*v, 0) : fallback;
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    auto v = get(key);
    return v ? *v : fallback;
  }
};

inline KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    if (line[0] == '#') return;
    std::string body = line.substr(0, line.find('#'));
    std::vector<std::string> f = detail::split_ws(body);
    if (f.empty()) return;
    if (f.size() < 2)
      throw ParseError(line_no, "key '" + f[0] + "' has no value");
    std::string key = f[0];
    f.erase(f.begin());
    kv.entries.emplace_back(std::move(key), std::move(f));
  });
  return kv;
}

// ---------------------------------------------------------------------------
// File conveniences
// ---------------------------------------------------------------------------

namespace detail {

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

template <typename Reader>
auto read_file(const std::string& path, Reader reader)
    -> decltype(reader(std::declval<std::istream&>())) {
  std::ifstream in = detail::open_input(path);
  try {
    return reader(in);
  } catch (const ParseError& e) {
    throw ParseError(std::string(path) + ": " + e.what());
  }
}

inline std::vector<Diarization> read_rttm_file(const std::string& path) {
  return read_file(path, [](std::istream& in) { return read_rttm(in); });
}

inline std::map<std::string, Timeline> read_uem_file(const std::string& path) {
  return read_file(path, [](std::istream& in) { return read_uem(in); });
}

}  // namespace avdiar

#endif  // AVDIAR_FORMATS_HPP
