// tests/oracles.hpp
//
// Brute-force reference implementations used only by the test suite.
// These deliberately avoid the library's interval algebra so that a bug
// there cannot hide in the expected values.

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

#ifndef AVDIAR_TESTS_ORACLES_HPP
#define AVDIAR_TESTS_ORACLES_HPP

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avdiar/clustering.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/timeline.hpp"

namespace avdiar::testing {

// Per-millisecond bitmap over [lo_ms, hi_ms).  Set operations are plain
// boolean arithmetic on the bitmap.
class BitmapTimeline {
 public:
  BitmapTimeline(std::int64_t lo_ms, std::int64_t hi_ms)
      : lo_(lo_ms), bits_(static_cast<std::size_t>(hi_ms - lo_ms), false) {}

  static BitmapTimeline from(const Timeline& t, std::int64_t lo_ms,
                             std::int64_t hi_ms) {
    BitmapTimeline b(lo_ms, hi_ms);
    for (const Interval& iv : t)
      for (std::int64_t m = iv.onset_ms; m < iv.offset_ms; ++m) b.set(m);
    return b;
  }

  void set(std::int64_t ms) { bits_.at(static_cast<std::size_t>(ms - lo_)) = true; }

  BitmapTimeline op_union(const BitmapTimeline& o) const {
    BitmapTimeline r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      r.bits_[i] = bits_[i] || o.bits_[i];
    return r;
  }
  BitmapTimeline op_intersect(const BitmapTimeline& o) const {
    BitmapTimeline r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      r.bits_[i] = bits_[i] && o.bits_[i];
    return r;
  }
  BitmapTimeline op_subtract(const BitmapTimeline& o) const {
    BitmapTimeline r = *this;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      r.bits_[i] = bits_[i] && !o.bits_[i];
    return r;
  }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (bool b : bits_) n += b ? 1 : 0;
    return n;
  }

  // Reconstructs the normalized timeline from the bitmap by scanning runs.
  Timeline to_timeline() const {
    std::vector<Interval> out;
    std::size_t i = 0;
    while (i < bits_.size()) {
      if (!bits_[i]) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < bits_.size() && bits_[j]) ++j;
      out.push_back(Interval(lo_ + static_cast<std::int64_t>(i),
                             lo_ + static_cast<std::int64_t>(j)));
      i = j;
    }
    return Timeline(std::move(out));
  }

 private:
  std::int64_t lo_;
  std::vector<bool> bits_;
};

// Random timeline confined to [0, span_ms) with up to max_intervals raw
// (possibly overlapping) intervals; the Timeline constructor normalizes.
inline Timeline random_timeline(std::mt19937_64& rng, std::int64_t span_ms,
                                int max_intervals) {
  std::uniform_int_distribution<int> n_dist(0, max_intervals);
  std::uniform_int_distribution<std::int64_t> onset_dist(0, span_ms - 2);
  int n = n_dist(rng);
  std::vector<Interval> ivs;
  for (int i = 0; i < n; ++i) {
    std::int64_t onset = onset_dist(rng);
    std::uniform_int_distribution<std::int64_t> len_dist(1, span_ms - onset);
    ivs.push_back(Interval(onset, onset + len_dist(rng)));
  }
  return Timeline(std::move(ivs));
}

// Random diarization with valid per-speaker timelines (disjoint by
// construction) and possible cross-speaker overlap.
inline Diarization random_diarization(std::mt19937_64& rng,
                                      const std::string& recording_id,
                                      int max_speakers, std::int64_t span_ms,
                                      int max_turns_per_speaker = 6) {
  std::uniform_int_distribution<int> spk_dist(1, max_speakers);
  std::uniform_int_distribution<int> turn_dist(1, max_turns_per_speaker);
  std::uniform_int_distribution<std::int64_t> len_dist(1, span_ms / 8 + 1);
  std::uniform_int_distribution<std::int64_t> gap_dist(1, span_ms / 8 + 1);

  Diarization d;
  d.recording_id = recording_id;
  int n_speakers = spk_dist(rng);
  for (int s = 0; s < n_speakers; ++s) {
    std::string label = "spk" + std::to_string(s);
    int n_turns = turn_dist(rng);
    std::uniform_int_distribution<std::int64_t> start_dist(0, span_ms / 2);
    std::int64_t cursor = start_dist(rng);
    for (int t = 0; t < n_turns && cursor < span_ms - 1; ++t) {
      std::int64_t len = std::min(len_dist(rng), span_ms - cursor);
      if (len <= 0) break;
      d.turns.push_back(Turn{label, Interval(cursor, cursor + len)});
      cursor += len + gap_dist(rng);
    }
  }
  d.normalize();
  return d;
}

inline std::vector<double> random_unit_vector(std::mt19937_64& rng,
                                              std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  do {
    for (double& x : v) x = gauss(rng);
  } while (l2_norm(v) < 1e-6);
  return normalized(std::move(v));
}

// Unit vectors with pairwise cosine distance >= min_distance, by rejection.
inline std::vector<std::vector<double>> spread_centroids(
    std::mt19937_64& rng, std::size_t count, std::size_t dim,
    double min_distance, int max_attempts = 100000) {
  std::vector<std::vector<double>> out;
  for (int attempt = 0; out.size() < count; ++attempt) {
    if (attempt >= max_attempts)
      throw std::runtime_error("could not place spread centroids");
    std::vector<double> cand = random_unit_vector(rng, dim);
    bool ok = true;
    for (const auto& c : out)
      if (cosine_distance(c, cand) < min_distance) ok = false;
    if (ok) out.push_back(std::move(cand));
  }
  return out;
}

inline std::vector<double> noisy_copy(std::mt19937_64& rng,
                                      const std::vector<double>& center,
                                      double sigma) {
  std::normal_distribution<double> gauss(0.0, sigma);
  std::vector<double> v = center;
  if (sigma > 0)
    for (double& x : v) x += gauss(rng);
  return normalized(std::move(v));
}

// Step-by-step AHC recomputation: every linkage is re-derived from raw item
// distances with a double loop, and admissibility is re-checked against the
// original constraint set each step.  Independent of the incremental-sum
// implementation it audits.
inline Partition replay_ahc(const ClusterInput& input) {
  std::set<std::pair<std::string, std::string>> constraints;
  for (const auto& [a, b] : input.cannot_link)
    constraints.insert(ordered_pair(a, b));

  std::vector<const ClusterItem*> items;
  for (const ClusterItem& it : input.items) items.push_back(&it);
  std::sort(items.begin(), items.end(),
            [](const ClusterItem* a, const ClusterItem* b) {
              return a->id < b->id;
            });

  std::vector<std::vector<const ClusterItem*>> clusters;
  for (const ClusterItem* it : items) clusters.push_back({it});

  auto linkage = [&](std::size_t a, std::size_t b) {
    double total = 0;
    for (const ClusterItem* x : clusters[a])
      for (const ClusterItem* y : clusters[b])
        total += cosine_distance(x->vector, y->vector);
    return total / (static_cast<double>(clusters[a].size()) *
                    clusters[b].size());
  };
  auto admissible = [&](std::size_t a, std::size_t b) {
    for (const ClusterItem* x : clusters[a])
      for (const ClusterItem* y : clusters[b]) {
        if (constraints.count(ordered_pair(x->id, y->id))) return false;
      }
    return true;
  };
  auto min_id = [&](std::size_t a) {
    std::string m = clusters[a].front()->id;
    for (const ClusterItem* x : clusters[a]) m = std::min(m, x->id);
    return m;
  };

  while (clusters.size() > 1) {
    double best = 0;
    std::size_t bi = clusters.size(), bj = clusters.size();
    std::pair<std::string, std::string> best_key;
    for (std::size_t i = 0; i < clusters.size(); ++i)
      for (std::size_t j = i + 1; j < clusters.size(); ++j) {
        if (!admissible(i, j)) continue;
        double d = linkage(i, j);
        auto key = ordered_pair(min_id(i), min_id(j));
        if (bi == clusters.size() || d < best ||
            (d == best && key < best_key)) {
          best = d;
          bi = i;
          bj = j;
          best_key = key;
        }
      }
    if (bi == clusters.size() || best > input.stop_threshold) break;
    clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(),
                        clusters[bj].end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
  }

  std::sort(clusters.begin(), clusters.end(),
            [&](const auto& a, const auto& b) {
              std::string ma = a.front()->id, mb = b.front()->id;
              for (const ClusterItem* x : a) ma = std::min(ma, x->id);
              for (const ClusterItem* x : b) mb = std::min(mb, x->id);
              return ma < mb;
            });
  Partition part;
  part.n_clusters = clusters.size();
  for (std::size_t label = 0; label < clusters.size(); ++label)
    for (const ClusterItem* x : clusters[label])
      part.assignment[x->id] = std::to_string(label);
  return part;
}

// True when some cluster contains a constrained pair.
inline bool violates_cannot_link(
    const Partition& part,
    const std::set<std::pair<std::string, std::string>>& cannot_link) {
  for (const auto& [a, b] : cannot_link) {
    auto ia = part.assignment.find(a);
    auto ib = part.assignment.find(b);
    if (ia != part.assignment.end() && ib != part.assignment.end() &&
        ia->second == ib->second)
      return true;
  }
  return false;
}

}  // namespace avdiar::testing

#endif  // AVDIAR_TESTS_ORACLES_HPP
