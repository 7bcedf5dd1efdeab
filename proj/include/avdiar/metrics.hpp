// avdiar/metrics.hpp
//
// Diarisation scoring: DER = MS + FA + SC with a forgiveness collar around
// reference boundaries, overlap included.  Scoring is per-millisecond with
// multiset speaker counts; the ref->hyp speaker mapping is computed once per
// recording by exact rectangular assignment on the collar-excluded regions.

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

#ifndef AVDIAR_METRICS_HPP
#define AVDIAR_METRICS_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avdiar/errors.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/timeline.hpp"

namespace avdiar {

struct DerBreakdown {
  std::int64_t missed_ms = 0;
  std::int64_t false_alarm_ms = 0;
  std::int64_t confusion_ms = 0;
  std::int64_t scored_ref_speech_ms = 0;
  double ms_pct = 0, fa_pct = 0, sc_pct = 0, der_pct = 0;
  // False when scored reference speech is empty but errors exist; der_pct is
  // then the +infinity sentinel.
  bool rates_defined = true;

  std::int64_t error_ms() const {
    return missed_ms + false_alarm_ms + confusion_ms;
  }
};

inline void finalize_rates(DerBreakdown& b) {
  if (b.scored_ref_speech_ms > 0) {
    double denom = static_cast<double>(b.scored_ref_speech_ms);
    b.ms_pct = 100.0 * static_cast<double>(b.missed_ms) / denom;
    b.fa_pct = 100.0 * static_cast<double>(b.false_alarm_ms) / denom;
    b.sc_pct = 100.0 * static_cast<double>(b.confusion_ms) / denom;
    b.der_pct = b.ms_pct + b.fa_pct + b.sc_pct;
    b.rates_defined = true;
  } else if (b.error_ms() == 0) {
    b.ms_pct = b.fa_pct = b.sc_pct = b.der_pct = 0;
    b.rates_defined = true;
  } else {
    double inf = std::numeric_limits<double>::infinity();
    b.ms_pct = b.missed_ms > 0 ? inf : 0;
    b.fa_pct = b.false_alarm_ms > 0 ? inf : 0;
    b.sc_pct = b.confusion_ms > 0 ? inf : 0;
    b.der_pct = inf;
    b.rates_defined = false;
  }
}

// Duration-weighted aggregate: totals summed across recordings, rates
// recomputed from the totals.
inline DerBreakdown aggregate_der(const std::vector<DerBreakdown>& parts) {
  DerBreakdown total;
  for (const DerBreakdown& p : parts) {
    total.missed_ms += p.missed_ms;
    total.false_alarm_ms += p.false_alarm_ms;
    total.confusion_ms += p.confusion_ms;
    total.scored_ref_speech_ms += p.scored_ref_speech_ms;
  }
  finalize_rates(total);
  return total;
}

// ---------------------------------------------------------------------------
// Exact rectangular assignment (maximize total mapped overlap).
// ---------------------------------------------------------------------------

namespace detail {

// Jonker-Volgenant style shortest augmenting paths on a square integer cost
// matrix; returns row -> column of a minimum-cost perfect matching.
inline std::vector<int> solve_square_assignment(
    const std::vector<std::vector<std::int64_t>>& cost) {
  const int n = static_cast<int>(cost.size());
  const std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(static_cast<std::size_t>(n) + 1, 0);
  std::vector<std::int64_t> v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<std::int64_t> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      int i0 = p[static_cast<std::size_t>(j0)], j1 = 0;
      std::int64_t delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        std::int64_t cur = cost[static_cast<std::size_t>(i0 - 1)]
                               [static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[static_cast<std::size_t>(j)])
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
          j - 1;
  return row_to_col;
}

}  // namespace detail

// One-to-one partial map of rows to columns maximizing total mapped overlap.
// Pairs with zero overlap stay unmapped.
inline std::map<std::size_t, std::size_t> optimal_mapping(
    const std::vector<std::vector<std::int64_t>>& overlap) {
  std::size_t rows = overlap.size();
  std::size_t cols = rows == 0 ? 0 : overlap[0].size();
  std::map<std::size_t, std::size_t> mapping;
  if (rows == 0 || cols == 0) return mapping;

  std::int64_t max_entry = 0;
  for (const auto& row : overlap) {
    if (row.size() != cols)
      throw ValidationError("overlap matrix must be rectangular");
    for (std::int64_t v : row) {
      if (v < 0) throw ValidationError("overlap entries must be >= 0");
      max_entry = std::max(max_entry, v);
    }
  }

  std::size_t n = std::max(rows, cols);
  std::vector<std::vector<std::int64_t>> cost(
      n, std::vector<std::int64_t>(n, max_entry));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t h = 0; h < cols; ++h)
      cost[r][h] = max_entry - overlap[r][h];

  std::vector<int> row_to_col = detail::solve_square_assignment(cost);
  for (std::size_t r = 0; r < rows; ++r) {
    int c = row_to_col[r];
    if (c >= 0 && static_cast<std::size_t>(c) < cols &&
        overlap[r][static_cast<std::size_t>(c)] > 0)
      mapping[r] = static_cast<std::size_t>(c);
  }
  return mapping;
}

// ---------------------------------------------------------------------------
// Collar
// ---------------------------------------------------------------------------

// Union of [b - collar, b + collar) over every reference turn boundary b.
// These regions are excluded from scoring entirely.
inline Timeline apply_collar(const Diarization& ref, std::int64_t collar_ms) {
  if (collar_ms < 0) throw ValidationError("collar must be >= 0");
  if (collar_ms == 0) return Timeline();
  std::vector<Interval> regions;
  regions.reserve(ref.turns.size() * 2);
  for (const Turn& t : ref.turns) {
    regions.push_back(
        Interval(t.interval.onset_ms - collar_ms, t.interval.onset_ms + collar_ms));
    regions.push_back(Interval(t.interval.offset_ms - collar_ms,
                               t.interval.offset_ms + collar_ms));
  }
  return Timeline(std::move(regions));
}

// ---------------------------------------------------------------------------
// DER
// ---------------------------------------------------------------------------

namespace detail {

struct SweepEvent {
  std::int64_t time;
  bool is_ref;
  std::size_t speaker;
  int delta;  // +1 onset, -1 offset
};

}  // namespace detail

inline DerBreakdown der(const Diarization& ref, const Diarization& hyp,
                        std::int64_t collar_ms,
                        const std::optional<Timeline>& uem = std::nullopt) {
  if (ref.recording_id != hyp.recording_id)
    throw ValidationError("recording id mismatch: '" + ref.recording_id +
                          "' vs '" + hyp.recording_id + "'");
  ref.validate();
  hyp.validate();

  // Scored region: UEM (or the full recording span) minus collar regions.
  Timeline scope;
  if (uem) {
    scope = *uem;
  } else {
    std::int64_t lo = 0, hi = 0;
    for (const Turn& t : ref.turns) {
      lo = std::min(lo, t.interval.onset_ms);
      hi = std::max(hi, t.interval.offset_ms);
    }
    for (const Turn& t : hyp.turns) {
      lo = std::min(lo, t.interval.onset_ms);
      hi = std::max(hi, t.interval.offset_ms);
    }
    if (hi > lo) scope = Timeline{Interval(lo, hi)};
  }
  Timeline scored = scope - apply_collar(ref, collar_ms);

  std::vector<std::string> ref_speakers = ref.speakers();
  std::vector<std::string> hyp_speakers = hyp.speakers();
  std::vector<Timeline> ref_tl, hyp_tl;
  for (const auto& s : ref_speakers)
    ref_tl.push_back(ref.speaker_timeline(s) & scored);
  for (const auto& s : hyp_speakers)
    hyp_tl.push_back(hyp.speaker_timeline(s) & scored);

  // Global mapping from scored overlap durations.
  std::vector<std::vector<std::int64_t>> overlap(
      ref_tl.size(), std::vector<std::int64_t>(hyp_tl.size(), 0));
  for (std::size_t r = 0; r < ref_tl.size(); ++r)
    for (std::size_t h = 0; h < hyp_tl.size(); ++h)
      overlap[r][h] = total_duration(ref_tl[r] & hyp_tl[h]);
  std::map<std::size_t, std::size_t> mapping = optimal_mapping(overlap);

  // Millisecond-exact sweep over speaker on/off events.
  std::vector<detail::SweepEvent> events;
  for (std::size_t r = 0; r < ref_tl.size(); ++r)
    for (const Interval& iv : ref_tl[r]) {
      events.push_back({iv.onset_ms, true, r, +1});
      events.push_back({iv.offset_ms, true, r, -1});
    }
  for (std::size_t h = 0; h < hyp_tl.size(); ++h)
    for (const Interval& iv : hyp_tl[h]) {
      events.push_back({iv.onset_ms, false, h, +1});
      events.push_back({iv.offset_ms, false, h, -1});
    }
  std::sort(events.begin(), events.end(),
            [](const detail::SweepEvent& a, const detail::SweepEvent& b) {
              return a.time < b.time;
            });

  std::vector<char> ref_active(ref_tl.size(), 0), hyp_active(hyp_tl.size(), 0);
  std::int64_t n_ref = 0, n_hyp = 0;
  DerBreakdown out;
  std::size_t i = 0;
  std::int64_t prev_time = events.empty() ? 0 : events.front().time;
  while (i < events.size()) {
    std::int64_t now = events[i].time;
    std::int64_t dt = now - prev_time;
    if (dt > 0 && (n_ref > 0 || n_hyp > 0)) {
      std::int64_t correct = 0;
      for (const auto& [r, h] : mapping)
        if (ref_active[r] && hyp_active[h]) ++correct;
      out.scored_ref_speech_ms += n_ref * dt;
      out.missed_ms += std::max<std::int64_t>(0, n_ref - n_hyp) * dt;
      out.false_alarm_ms += std::max<std::int64_t>(0, n_hyp - n_ref) * dt;
      out.confusion_ms += (std::min(n_ref, n_hyp) - correct) * dt;
    }
    while (i < events.size() && events[i].time == now) {
      const detail::SweepEvent& e = events[i];
      if (e.is_ref) {
        ref_active[e.speaker] = e.delta > 0 ? 1 : 0;
        n_ref += e.delta;
      } else {
        hyp_active[e.speaker] = e.delta > 0 ? 1 : 0;
        n_hyp += e.delta;
      }
      ++i;
    }
    prev_time = now;
  }

  finalize_rates(out);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset statistics
// ---------------------------------------------------------------------------

struct MinMeanMax {
  double min = 0, mean = 0, max = 0;
};

struct DatasetStats {
  std::size_t n_videos = 0;
  double total_minutes = 0;
  MinMeanMax speakers_per_video;
  MinMeanMax video_duration_s;
  MinMeanMax speech_pct;
  MinMeanMax overlap_pct;
};

namespace detail {

inline MinMeanMax summarize(const std::vector<double>& xs) {
  MinMeanMax m;
  if (xs.empty()) return m;
  m.min = *std::min_element(xs.begin(), xs.end());
  m.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(xs.size());
  return m;
}

}  // namespace detail

// Total time where at least two speakers are active.
inline std::int64_t overlapped_speech_ms(const Diarization& d) {
  std::vector<std::pair<std::int64_t, int>> events;
  for (const std::string& s : d.speakers())
    for (const Interval& iv : d.speaker_timeline(s)) {
      events.push_back({iv.onset_ms, +1});
      events.push_back({iv.offset_ms, -1});
    }
  std::sort(events.begin(), events.end());
  std::int64_t active = 0, prev = 0, total = 0;
  for (const auto& [time, delta] : events) {
    if (active >= 2) total += time - prev;
    active += delta;
    prev = time;
  }
  return total;
}

// Table of per-video speech/overlap statistics.  speech % is the fraction of
// video time covered by any speaker; overlap % is the fraction of speech
// time where two or more speakers are active.
inline DatasetStats dataset_stats(
    const std::vector<Diarization>& refs,
    const std::map<std::string, std::int64_t>& duration_ms_by_recording) {
  if (refs.empty()) throw ValidationError("dataset_stats: no recordings");
  std::vector<double> spk_counts, durations_s, speech_pcts, overlap_pcts;
  double total_ms = 0;
  for (const Diarization& d : refs) {
    auto it = duration_ms_by_recording.find(d.recording_id);
    if (it == duration_ms_by_recording.end())
      throw ValidationError("no duration for recording '" + d.recording_id +
                            "'");
    std::int64_t dur = it->second;
    if (dur <= 0)
      throw ValidationError("recording '" + d.recording_id +
                            "' has non-positive duration");
    d.validate();
    std::int64_t speech = total_duration(d.all_speech());
    std::int64_t overlap = overlapped_speech_ms(d);
    spk_counts.push_back(static_cast<double>(d.speakers().size()));
    durations_s.push_back(static_cast<double>(dur) / 1000.0);
    speech_pcts.push_back(100.0 * static_cast<double>(speech) /
                          static_cast<double>(dur));
    overlap_pcts.push_back(
        speech > 0
            ? 100.0 * static_cast<double>(overlap) / static_cast<double>(speech)
            : 0.0);
    total_ms += static_cast<double>(dur);
  }
  DatasetStats stats;
  stats.n_videos = refs.size();
  stats.total_minutes = total_ms / 60000.0;
  stats.speakers_per_video = detail::summarize(spk_counts);
  stats.video_duration_s = detail::summarize(durations_s);
  stats.speech_pct = detail::summarize(speech_pcts);
  stats.overlap_pct = detail::summarize(overlap_pcts);
  return stats;
}

}  // namespace avdiar

#endif  // AVDIAR_METRICS_HPP
