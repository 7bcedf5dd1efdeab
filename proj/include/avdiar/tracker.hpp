// avdiar/tracker.hpp
//
// Position-based grouping of per-frame face detections into shot-bounded
// tracks.  A detection joins the open track in its shot whose last box has
// the highest IoU at or above the threshold, subject to a maximum frame
// gap; otherwise it starts a new track.  Tracks never cross shot cuts.

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

#ifndef AVDIAR_TRACKER_HPP
#define AVDIAR_TRACKER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "avdiar/clustering.hpp"
#include "avdiar/errors.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/timeline.hpp"

namespace avdiar {

struct FaceTrack {
  std::string track_id;
  std::size_t shot_index = 0;
  std::vector<DetectionRecord> frames;
  Interval interval;
  std::vector<double> embedding;  // unit-norm once set; empty otherwise

  std::int64_t first_frame() const { return frames.front().frame_index; }
  std::int64_t last_frame() const { return frames.back().frame_index; }
};

struct TrackerConfig {
  double iou_threshold = 0.5;
  std::int64_t max_frame_skip = 10;
};

inline double box_iou(const DetectionRecord& a, const DetectionRecord& b) {
  double ix = std::max(0.0, std::min(a.x + a.width, b.x + b.width) -
                                std::max(a.x, b.x));
  double iy = std::max(0.0, std::min(a.y + a.height, b.y + b.height) -
                                std::max(a.y, b.y));
  double inter = ix * iy;
  double uni = a.width * a.height + b.width * b.height - inter;
  return uni > 0 ? inter / uni : 0.0;
}

inline std::int64_t frame_onset_ms(std::int64_t frame, double frame_rate_hz) {
  return std::llround(static_cast<double>(frame) * 1000.0 / frame_rate_hz);
}

inline bool tracks_overlap_in_time(const FaceTrack& a, const FaceTrack& b) {
  return a.interval.overlaps(b.interval);
}

inline std::vector<FaceTrack> build_tracks(
    const std::vector<DetectionRecord>& detections,
    const std::vector<Interval>& shots, double frame_rate_hz,
    const TrackerConfig& cfg = {}) {
  if (frame_rate_hz <= 0)
    throw ValidationError("frame rate must be positive");
  if (cfg.iou_threshold < 0 || cfg.iou_threshold > 1)
    throw ValidationError("iou_threshold must lie in [0, 1]");
  if (cfg.max_frame_skip < 1)
    throw ValidationError("max_frame_skip must be >= 1");
  for (std::size_t i = 1; i < shots.size(); ++i)
    if (shots[i].onset_ms < shots[i - 1].offset_ms)
      throw ValidationError("shots must be sorted and non-overlapping");

  struct OpenTrack {
    std::size_t shot_index;
    std::vector<DetectionRecord> frames;
    std::size_t creation_order;
  };
  std::vector<OpenTrack> tracks;

  std::int64_t prev_frame = -1;
  for (const DetectionRecord& det : detections) {
    if (det.frame_index < prev_frame)
      throw ValidationError("detections must be sorted by frame index");
    prev_frame = det.frame_index;

    std::int64_t t_ms = frame_onset_ms(det.frame_index, frame_rate_hz);
    std::size_t shot = shots.size();
    for (std::size_t s = 0; s < shots.size(); ++s) {
      if (shots[s].contains(t_ms)) {
        shot = s;
        break;
      }
    }
    if (shot == shots.size())
      throw ValidationError("detection at frame " +
                            std::to_string(det.frame_index) +
                            " lies outside every shot");

    // Best open track in this shot by IoU against its last box.
    std::size_t best = tracks.size();
    double best_iou = 0;
    for (std::size_t t = 0; t < tracks.size(); ++t) {
      OpenTrack& tr = tracks[t];
      if (tr.shot_index != shot) continue;
      std::int64_t gap = det.frame_index - tr.frames.back().frame_index;
      if (gap < 1 || gap > cfg.max_frame_skip) continue;
      double iou = box_iou(tr.frames.back(), det);
      if (iou >= cfg.iou_threshold && iou > best_iou) {
        best_iou = iou;
        best = t;
      }
    }
    if (best < tracks.size()) {
      tracks[best].frames.push_back(det);
    } else {
      tracks.push_back(OpenTrack{shot, {det}, tracks.size()});
    }
  }

  std::sort(tracks.begin(), tracks.end(),
            [](const OpenTrack& a, const OpenTrack& b) {
              if (a.shot_index != b.shot_index)
                return a.shot_index < b.shot_index;
              if (a.frames.front().frame_index != b.frames.front().frame_index)
                return a.frames.front().frame_index <
                       b.frames.front().frame_index;
              return a.creation_order < b.creation_order;
            });

  std::vector<FaceTrack> out;
  out.reserve(tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    FaceTrack ft;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%04zu", i);
    ft.track_id = buf;
    ft.shot_index = tracks[i].shot_index;
    ft.frames = std::move(tracks[i].frames);
    ft.interval =
        Interval(frame_onset_ms(ft.first_frame(), frame_rate_hz),
                 frame_onset_ms(ft.last_frame() + 1, frame_rate_hz));
    out.push_back(std::move(ft));
  }
  return out;
}

// Arithmetic mean of the sampled embeddings, L2-normalized.
inline std::vector<double> average_track_embedding(
    const std::vector<std::vector<double>>& samples) {
  if (samples.empty())
    throw ValidationError("average_track_embedding needs at least one sample");
  std::vector<double> mean(samples.front().size(), 0.0);
  for (const auto& s : samples) {
    if (s.size() != mean.size())
      throw ValidationError("embedding samples differ in dimension");
    for (std::size_t i = 0; i < s.size(); ++i) mean[i] += s[i];
  }
  for (double& x : mean) x /= static_cast<double>(samples.size());
  if (l2_norm(mean) < 1e-12)
    throw ValidationError("degenerate embedding: sample mean has zero norm");
  return normalized(std::move(mean));
}

// ---------------------------------------------------------------------------
// Tracks file: "track_id shot_index onset_ms offset_ms n f1 .. fn".
// ---------------------------------------------------------------------------

struct TrackSummary {
  std::string track_id;
  std::size_t shot_index = 0;
  Interval interval;
  std::vector<std::int64_t> frame_indices;
};

inline void write_tracks(const std::vector<FaceTrack>& tracks,
                         std::ostream& out) {
  for (const FaceTrack& t : tracks) {
    out << t.track_id << ' ' << t.shot_index << ' ' << t.interval.onset_ms
        << ' ' << t.interval.offset_ms << ' ' << t.frames.size();
    for (const DetectionRecord& d : t.frames) out << ' ' << d.frame_index;
    out << '\n';
  }
}

inline std::vector<TrackSummary> read_tracks(std::istream& in) {
  std::vector<TrackSummary> out;
  detail::for_each_line(in, [&](std::size_t line_no, const std::string& line) {
    std::vector<std::string> f = detail::split_ws(line);
    if (f.size() < 5)
      throw ParseError(line_no, "expected id, shot, interval and frame list");
    TrackSummary t;
    t.track_id = f[0];
    std::int64_t shot = detail::parse_int(f[1], line_no);
    if (shot < 0) throw ParseError(line_no, "shot index must be >= 0");
    t.shot_index = static_cast<std::size_t>(shot);
    std::int64_t onset = detail::parse_int(f[2], line_no);
    std::int64_t offset = detail::parse_int(f[3], line_no);
    if (onset >= offset) throw ParseError(line_no, "empty track interval");
    t.interval = Interval(onset, offset);
    std::int64_t count = detail::parse_int(f[4], line_no);
    if (count < 1) throw ParseError(line_no, "track needs >= 1 frame");
    if (f.size() != 5 + static_cast<std::size_t>(count))
      throw ParseError(line_no, "frame list does not match declared count");
    for (std::int64_t i = 0; i < count; ++i) {
      std::int64_t frame = detail::parse_int(f[5 + i], line_no);
      if (!t.frame_indices.empty() && frame <= t.frame_indices.back())
        throw ValidationError("line " + std::to_string(line_no) +
                              ": non-monotone frame indices in track " +
                              t.track_id);
      t.frame_indices.push_back(frame);
    }
    out.push_back(std::move(t));
  });
  return out;
}

}  // namespace avdiar

#endif  // AVDIAR_TRACKER_HPP
