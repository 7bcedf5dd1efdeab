// avdiar/timeline.hpp

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

#ifndef AVDIAR_TIMELINE_HPP
#define AVDIAR_TIMELINE_HPP

#include <algorithm>
#include <cstdint>
#include <vector>

#include "avdiar/errors.hpp"

namespace avdiar {

// Half-open time span [onset_ms, offset_ms) on the integer millisecond grid.
// Zero-length intervals are rejected.
struct Interval {
  std::int64_t onset_ms = 0;
  std::int64_t offset_ms = 0;

  Interval() = default;
  Interval(std::int64_t onset, std::int64_t offset)
      : onset_ms(onset), offset_ms(offset) {
    if (onset_ms >= offset_ms)
      throw ValidationError("interval [" + std::to_string(onset_ms) + ", " +
                            std::to_string(offset_ms) +
                            ") must have positive duration");
  }

  std::int64_t duration_ms() const { return offset_ms - onset_ms; }

  bool overlaps(const Interval& other) const {
    return onset_ms < other.offset_ms && other.onset_ms < offset_ms;
  }

  bool contains(std::int64_t t_ms) const {
    return onset_ms <= t_ms && t_ms < offset_ms;
  }

  friend bool operator==(const Interval& a, const Interval& b) {
    return a.onset_ms == b.onset_ms && a.offset_ms == b.offset_ms;
  }
  friend bool operator<(const Interval& a, const Interval& b) {
    return a.onset_ms != b.onset_ms ? a.onset_ms < b.onset_ms
                                    : a.offset_ms < b.offset_ms;
  }
};

// Sorted disjoint union of intervals.  Normalized form: strictly sorted by
// onset, and any two consecutive intervals are separated by at least 1 ms
// (touching intervals coalesce on construction).  Immutable after
// construction, so values are safe to share across threads.
class Timeline {
 public:
  Timeline() = default;

  explicit Timeline(std::vector<Interval> intervals)
      : intervals_(std::move(intervals)) {
    normalize();
  }

  Timeline(std::initializer_list<Interval> intervals)
      : intervals_(intervals) {
    normalize();
  }

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t size() const { return intervals_.size(); }

  std::vector<Interval>::const_iterator begin() const {
    return intervals_.begin();
  }
  std::vector<Interval>::const_iterator end() const {
    return intervals_.end();
  }

  bool contains(std::int64_t t_ms) const {
    auto it = std::upper_bound(
        intervals_.begin(), intervals_.end(), t_ms,
        [](std::int64_t t, const Interval& iv) { return t < iv.onset_ms; });
    return it != intervals_.begin() && std::prev(it)->contains(t_ms);
  }

  friend bool operator==(const Timeline& a, const Timeline& b) {
    return a.intervals_ == b.intervals_;
  }

 private:
  void normalize() {
    if (intervals_.empty()) return;
    std::sort(intervals_.begin(), intervals_.end());
    std::vector<Interval> merged;
    merged.reserve(intervals_.size());
    merged.push_back(intervals_.front());
    for (std::size_t i = 1; i < intervals_.size(); ++i) {
      if (intervals_[i].onset_ms <= merged.back().offset_ms) {
        merged.back().offset_ms =
            std::max(merged.back().offset_ms, intervals_[i].offset_ms);
      } else {
        merged.push_back(intervals_[i]);
      }
    }
    intervals_ = std::move(merged);
  }

  std::vector<Interval> intervals_;
};

// Set algebra on the millisecond grid.  All three return normalized
// timelines and run in linear time over the input intervals.

inline Timeline operator|(const Timeline& a, const Timeline& b) {
  std::vector<Interval> all(a.intervals());
  all.insert(all.end(), b.intervals().begin(), b.intervals().end());
  return Timeline(std::move(all));
}

inline Timeline operator&(const Timeline& a, const Timeline& b) {
  std::vector<Interval> out;
  std::size_t i = 0, j = 0;
  const auto& av = a.intervals();
  const auto& bv = b.intervals();
  while (i < av.size() && j < bv.size()) {
    std::int64_t lo = std::max(av[i].onset_ms, bv[j].onset_ms);
    std::int64_t hi = std::min(av[i].offset_ms, bv[j].offset_ms);
    if (lo < hi) out.push_back(Interval(lo, hi));
    if (av[i].offset_ms < bv[j].offset_ms)
      ++i;
    else
      ++j;
  }
  return Timeline(std::move(out));
}

inline Timeline operator-(const Timeline& a, const Timeline& b) {
  std::vector<Interval> out;
  std::size_t j = 0;
  const auto& bv = b.intervals();
  for (const Interval& iv : a.intervals()) {
    std::int64_t cursor = iv.onset_ms;
    while (j < bv.size() && bv[j].offset_ms <= cursor) ++j;
    std::size_t k = j;
    while (k < bv.size() && bv[k].onset_ms < iv.offset_ms) {
      if (bv[k].onset_ms > cursor)
        out.push_back(Interval(cursor, bv[k].onset_ms));
      cursor = std::max(cursor, bv[k].offset_ms);
      if (cursor >= iv.offset_ms) break;
      ++k;
    }
    if (cursor < iv.offset_ms) out.push_back(Interval(cursor, iv.offset_ms));
  }
  return Timeline(std::move(out));
}

// Coalesces consecutive intervals separated by a gap of at most max_gap_ms.
// Idempotent at fixed max_gap_ms; max_gap_ms = 0 is the identity on
// normalized timelines.
inline Timeline merge_gaps(const Timeline& t, std::int64_t max_gap_ms) {
  if (max_gap_ms < 0)
    throw ValidationError("merge_gaps: max_gap_ms must be >= 0");
  if (t.empty()) return t;
  std::vector<Interval> out;
  out.reserve(t.size());
  out.push_back(t.intervals().front());
  for (std::size_t i = 1; i < t.size(); ++i) {
    const Interval& iv = t.intervals()[i];
    if (iv.onset_ms - out.back().offset_ms <= max_gap_ms)
      out.back().offset_ms = iv.offset_ms;
    else
      out.push_back(iv);
  }
  return Timeline(std::move(out));
}

inline std::int64_t total_duration(const Timeline& t) {
  std::int64_t sum = 0;
  for (const Interval& iv : t) sum += iv.duration_ms();
  return sum;
}

// True when every millisecond of inner is covered by outer.
inline bool covers(const Timeline& outer, const Timeline& inner) {
  return (inner - outer).empty();
}

}  // namespace avdiar

#endif  // AVDIAR_TIMELINE_HPP
