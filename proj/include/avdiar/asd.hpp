// avdiar/asd.hpp
//
// Turns per-track ASD confidence streams and VAD streams into active-speaker
// timelines.  A track counts as speaking only where both methods agree
// (timeline intersection); single-method modes are kept for ablations.

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

#ifndef AVDIAR_ASD_HPP
#define AVDIAR_ASD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "avdiar/errors.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/timeline.hpp"

namespace avdiar {

struct AsdConfig {
  double sync_conf_threshold = 0.5;
  double vad_positive_value = 0.5;  // 0/1 VAD streams share the score path
  std::int64_t smoothing_window_ms = 0;
  std::int64_t min_active_ms = 0;
  std::int64_t merge_gap_ms = 250;

  void validate() const {
    if (smoothing_window_ms < 0 || min_active_ms < 0 || merge_gap_ms < 0)
      throw ValidationError("AsdConfig millisecond fields must be >= 0");
  }
};

enum class FusionMode { kAgreement, kSyncOnly, kVadOnly };

inline FusionMode fusion_mode_from_string(const std::string& name) {
  if (name == "agreement") return FusionMode::kAgreement;
  if (name == "sync_only") return FusionMode::kSyncOnly;
  if (name == "vad_only") return FusionMode::kVadOnly;
  throw ValidationError("unknown fusion mode '" + name + "'");
}

// Union of hop-sized sample intervals whose value is strictly above the
// threshold.
inline Timeline stream_to_timeline(const ScoreStream& s, double threshold) {
  std::vector<Interval> ivs;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (s.values[i] > threshold) {
      std::int64_t onset = s.start_ms + s.hop_ms * static_cast<std::int64_t>(i);
      ivs.push_back(Interval(onset, onset + s.hop_ms));
    }
  }
  return Timeline(std::move(ivs));
}

// Centered moving average over the sample grid.  window_ms = 0 is the
// identity; otherwise the window is the odd number of hops nearest to
// window_ms / hop_ms, clipped at stream edges.
inline ScoreStream smooth_stream(const ScoreStream& s,
                                 std::int64_t window_ms) {
  if (window_ms < 0) throw ValidationError("smoothing window must be >= 0");
  if (window_ms == 0 || s.values.size() < 2) return s;
  std::int64_t hops = (window_ms + s.hop_ms / 2) / s.hop_ms;
  std::int64_t half = hops / 2;
  if (half == 0) return s;
  ScoreStream out = s;
  std::int64_t n = static_cast<std::int64_t>(s.values.size());
  for (std::int64_t i = 0; i < n; ++i) {
    std::int64_t lo = std::max<std::int64_t>(0, i - half);
    std::int64_t hi = std::min(n - 1, i + half);
    double sum = 0;
    for (std::int64_t j = lo; j <= hi; ++j)
      sum += s.values[static_cast<std::size_t>(j)];
    out.values[static_cast<std::size_t>(i)] =
        sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

// Bridges pauses up to merge_gap_ms, then discards islands shorter than
// min_active_ms.  Merging first keeps fragmented true speech alive.
inline Timeline smooth(const Timeline& t, const AsdConfig& cfg) {
  cfg.validate();
  Timeline merged = merge_gaps(t, cfg.merge_gap_ms);
  std::vector<Interval> kept;
  for (const Interval& iv : merged)
    if (iv.duration_ms() >= cfg.min_active_ms) kept.push_back(iv);
  return Timeline(std::move(kept));
}

inline Timeline fuse_agreement(const Timeline& sync_active,
                               const Timeline& vad_active) {
  return sync_active & vad_active;
}

inline Timeline fuse(const Timeline& sync_active, const Timeline& vad_active,
                     FusionMode mode) {
  switch (mode) {
    case FusionMode::kSyncOnly:
      return sync_active;
    case FusionMode::kVadOnly:
      return vad_active;
    case FusionMode::kAgreement:
    default:
      return fuse_agreement(sync_active, vad_active);
  }
}

// Full per-track chain: optional stream smoothing, thresholding, fusion,
// then timeline smoothing.  Null streams behave as silent detectors.
inline Timeline track_active_timeline(const ScoreStream* sync,
                                      const ScoreStream* vad,
                                      const AsdConfig& cfg, FusionMode mode) {
  cfg.validate();
  Timeline sync_active, vad_active;
  if (sync)
    sync_active = stream_to_timeline(
        smooth_stream(*sync, cfg.smoothing_window_ms), cfg.sync_conf_threshold);
  if (vad)
    vad_active = stream_to_timeline(
        smooth_stream(*vad, cfg.smoothing_window_ms), cfg.vad_positive_value);
  return smooth(fuse(sync_active, vad_active, mode), cfg);
}

}  // namespace avdiar

#endif  // AVDIAR_ASD_HPP
