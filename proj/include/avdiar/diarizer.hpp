// avdiar/diarizer.hpp
//
// End-to-end diarisation over an interchange bundle: face tracking,
// identity clustering with temporal cannot-links, dual-method active
// speaker detection, on-screen attribution, self-enrolled speaker models,
// and off-screen segment assignment.

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

#ifndef AVDIAR_DIARIZER_HPP
#define AVDIAR_DIARIZER_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "avdiar/asd.hpp"
#include "avdiar/clustering.hpp"
#include "avdiar/errors.hpp"
#include "avdiar/formats.hpp"
#include "avdiar/metrics.hpp"
#include "avdiar/timeline.hpp"
#include "avdiar/tracker.hpp"

namespace avdiar {

// A stage failure, prefixed with the stage that raised it.
class PipelineError : public ValidationError {
 public:
  PipelineError(const std::string& stage, const std::string& message)
      : ValidationError(stage + ": " + message) {}
};

enum class SpeakerIdMode { kCentroid, kNearestSegment };

struct PipelineConfig {
  double face_cluster_threshold = 0.3;
  double sync_conf_threshold = 0.5;
  double speaker_id_threshold = 0.4;
  std::int64_t collar_ms = 250;
  std::int64_t gap_merge_ms = 250;
  std::int64_t min_offscreen_segment_ms = 400;

  double vad_positive_value = 0.5;
  std::int64_t smoothing_window_ms = 0;
  std::int64_t min_active_ms = 0;
  double iou_threshold = 0.5;
  std::int64_t max_frame_skip = 10;
  SpeakerIdMode speaker_id_mode = SpeakerIdMode::kCentroid;

  void validate() const {
    if (face_cluster_threshold < 0 || face_cluster_threshold > 2)
      throw ValidationError("face_cluster_threshold must lie in [0, 2]");
    if (speaker_id_threshold < 0 || speaker_id_threshold > 2)
      throw ValidationError("speaker_id_threshold must lie in [0, 2]");
    if (collar_ms < 0 || gap_merge_ms < 0 || min_offscreen_segment_ms < 0 ||
        smoothing_window_ms < 0 || min_active_ms < 0)
      throw ValidationError("millisecond fields must be >= 0");
    if (iou_threshold < 0 || iou_threshold > 1)
      throw ValidationError("iou_threshold must lie in [0, 1]");
    if (max_frame_skip < 1)
      throw ValidationError("max_frame_skip must be >= 1");
  }

  AsdConfig asd_config() const {
    AsdConfig cfg;
    cfg.sync_conf_threshold = sync_conf_threshold;
    cfg.vad_positive_value = vad_positive_value;
    cfg.smoothing_window_ms = smoothing_window_ms;
    cfg.min_active_ms = min_active_ms;
    cfg.merge_gap_ms = gap_merge_ms;
    return cfg;
  }

  TrackerConfig tracker_config() const {
    TrackerConfig cfg;
    cfg.iou_threshold = iou_threshold;
    cfg.max_frame_skip = max_frame_skip;
    return cfg;
  }
};

inline PipelineConfig parse_pipeline_config(const KeyValues& kv) {
  static const std::set<std::string> known = {
      "face_cluster_threshold", "sync_conf_threshold", "speaker_id_threshold",
      "collar_ms",              "gap_merge_ms",        "min_offscreen_segment_ms",
      "vad_positive_value",     "smoothing_window_ms", "min_active_ms",
      "iou_threshold",          "max_frame_skip",      "speaker_id_mode"};
  for (const auto& [key, values] : kv.entries)
    if (!known.count(key))
      throw ValidationError("unknown config key '" + key + "'");
  PipelineConfig cfg;
  cfg.face_cluster_threshold =
      kv.get_real("face_cluster_threshold", cfg.face_cluster_threshold);
  cfg.sync_conf_threshold =
      kv.get_real("sync_conf_threshold", cfg.sync_conf_threshold);
  cfg.speaker_id_threshold =
      kv.get_real("speaker_id_threshold", cfg.speaker_id_threshold);
  cfg.collar_ms = kv.get_int("collar_ms", cfg.collar_ms);
  cfg.gap_merge_ms = kv.get_int("gap_merge_ms", cfg.gap_merge_ms);
  cfg.min_offscreen_segment_ms =
      kv.get_int("min_offscreen_segment_ms", cfg.min_offscreen_segment_ms);
  cfg.vad_positive_value =
      kv.get_real("vad_positive_value", cfg.vad_positive_value);
  cfg.smoothing_window_ms =
      kv.get_int("smoothing_window_ms", cfg.smoothing_window_ms);
  cfg.min_active_ms = kv.get_int("min_active_ms", cfg.min_active_ms);
  cfg.iou_threshold = kv.get_real("iou_threshold", cfg.iou_threshold);
  cfg.max_frame_skip = kv.get_int("max_frame_skip", cfg.max_frame_skip);
  std::string mode = kv.get_string("speaker_id_mode", "centroid");
  if (mode == "centroid")
    cfg.speaker_id_mode = SpeakerIdMode::kCentroid;
  else if (mode == "nearest_segment")
    cfg.speaker_id_mode = SpeakerIdMode::kNearestSegment;
  else
    throw ValidationError("speaker_id_mode must be 'centroid' or "
                          "'nearest_segment'");
  cfg.validate();
  return cfg;
}

inline void write_pipeline_config(const PipelineConfig& cfg,
                                  std::ostream& out) {
  out << "face_cluster_threshold " << format_real(cfg.face_cluster_threshold)
      << "\nsync_conf_threshold " << format_real(cfg.sync_conf_threshold)
      << "\nspeaker_id_threshold " << format_real(cfg.speaker_id_threshold)
      << "\ncollar_ms " << cfg.collar_ms << "\ngap_merge_ms "
      << cfg.gap_merge_ms << "\nmin_offscreen_segment_ms "
      << cfg.min_offscreen_segment_ms << "\nvad_positive_value "
      << format_real(cfg.vad_positive_value) << "\nsmoothing_window_ms "
      << cfg.smoothing_window_ms << "\nmin_active_ms " << cfg.min_active_ms
      << "\niou_threshold " << format_real(cfg.iou_threshold)
      << "\nmax_frame_skip " << cfg.max_frame_skip << "\nspeaker_id_mode "
      << (cfg.speaker_id_mode == SpeakerIdMode::kCentroid ? "centroid"
                                                          : "nearest_segment")
      << "\n";
}

// Self-enrolled speaker model: duration-weighted centroid of the speech
// segment embeddings attributed to one speaker.
struct SpeakerModel {
  std::string label;
  std::vector<double> centroid;
  std::int64_t support_ms = 0;
};

struct EnrollmentResult {
  std::vector<SpeakerModel> models;
  // Per-speaker enrolled segment vectors, for nearest-segment assignment.
  std::map<std::string, std::vector<std::vector<double>>> segments;
  std::size_t skipped_records = 0;  // ambiguous or unattributed embeddings
  std::vector<std::string> speakers_without_models;
};

struct OffscreenReport {
  std::size_t assigned = 0;
  std::size_t unknown = 0;
  std::size_t dropped_short = 0;
  std::size_t without_embedding = 0;
};

struct PipelineReport {
  std::size_t n_tracks = 0;
  std::size_t n_identities = 0;
  std::size_t skipped_segment_records = 0;
  std::vector<std::string> speakers_without_models;
  OffscreenReport offscreen;
};

struct PipelineOutput {
  Diarization diarization;
  PipelineReport report;
};

namespace detail {

// Canonical embedding-record order, so float accumulation never depends on
// file order.
inline std::vector<const EmbeddingRecord*> sorted_records(
    const std::vector<EmbeddingRecord>& records) {
  std::vector<const EmbeddingRecord*> out;
  out.reserve(records.size());
  for (const EmbeddingRecord& r : records) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const EmbeddingRecord* a, const EmbeddingRecord* b) {
              if (a->interval.onset_ms != b->interval.onset_ms)
                return a->interval.onset_ms < b->interval.onset_ms;
              if (a->interval.offset_ms != b->interval.offset_ms)
                return a->interval.offset_ms < b->interval.offset_ms;
              if (a->owner_id != b->owner_id) return a->owner_id < b->owner_id;
              return a->vector < b->vector;
            });
  return out;
}

inline std::optional<std::vector<double>> weighted_mean_normalized(
    const std::vector<std::pair<const std::vector<double>*, std::int64_t>>&
        weighted) {
  if (weighted.empty()) return std::nullopt;
  std::vector<double> mean(weighted.front().first->size(), 0.0);
  double total_w = 0;
  for (const auto& [vec, w] : weighted) {
    for (std::size_t i = 0; i < mean.size(); ++i)
      mean[i] += (*vec)[i] * static_cast<double>(w);
    total_w += static_cast<double>(w);
  }
  for (double& x : mean) x /= total_w;
  if (l2_norm(mean) < 1e-12) return std::nullopt;
  return normalized(std::move(mean));
}

}  // namespace detail

// Speech attribution for on-screen identities: each identity cluster's
// speech is the union of its tracks' active timelines, gap-merged.
inline Diarization attribute_onscreen(
    const std::string& recording_id, const std::vector<FaceTrack>& tracks,
    const Partition& partition,
    const std::map<std::string, Timeline>& active_timelines,
    std::int64_t gap_merge_ms = 250) {
  std::set<std::string> track_ids;
  for (const FaceTrack& t : tracks) track_ids.insert(t.track_id);

  std::map<std::string, std::vector<Interval>> per_label;
  for (const auto& [track_id, active] : active_timelines) {
    if (!track_ids.count(track_id))
      throw ValidationError("active timeline for unknown track id '" +
                            track_id + "'");
    auto it = partition.assignment.find(track_id);
    if (it == partition.assignment.end())
      throw ValidationError("track id '" + track_id +
                            "' missing from the identity partition");
    auto& ivs = per_label[it->second];
    for (const Interval& iv : active) ivs.push_back(iv);
  }

  Diarization d;
  d.recording_id = recording_id;
  for (auto& [label, ivs] : per_label) {
    Timeline speech = merge_gaps(Timeline(std::move(ivs)), gap_merge_ms);
    for (const Interval& iv : speech)
      d.turns.push_back(Turn{"ID_" + label, iv});
  }
  d.normalize();
  return d;
}

// Builds per-speaker models from segment embeddings that intersect exactly
// one speaker's attributed speech.  Records intersecting zero or several
// speakers are skipped and counted.
inline EnrollmentResult enroll_speakers(
    const Diarization& diar,
    const std::vector<EmbeddingRecord>& segment_embeddings) {
  EnrollmentResult result;
  std::vector<std::string> speakers = diar.speakers();
  std::vector<Timeline> speech;
  speech.reserve(speakers.size());
  for (const std::string& s : speakers)
    speech.push_back(diar.speaker_timeline(s));

  std::map<std::string,
           std::vector<std::pair<const std::vector<double>*, std::int64_t>>>
      usable;
  for (const EmbeddingRecord* rec :
       detail::sorted_records(segment_embeddings)) {
    std::size_t hits = 0, hit_idx = 0;
    std::int64_t weight = 0;
    for (std::size_t s = 0; s < speakers.size(); ++s) {
      std::int64_t w =
          total_duration(speech[s] & Timeline{rec->interval});
      if (w > 0) {
        ++hits;
        hit_idx = s;
        weight = w;
      }
    }
    if (hits != 1) {
      ++result.skipped_records;
      continue;
    }
    usable[speakers[hit_idx]].push_back({&rec->vector, weight});
  }

  for (std::size_t s = 0; s < speakers.size(); ++s) {
    auto it = usable.find(speakers[s]);
    std::optional<std::vector<double>> centroid;
    if (it != usable.end())
      centroid = detail::weighted_mean_normalized(it->second);
    if (!centroid) {
      result.speakers_without_models.push_back(speakers[s]);
      continue;
    }
    SpeakerModel model;
    model.label = speakers[s];
    model.centroid = std::move(*centroid);
    for (const auto& [vec, w] : it->second) {
      model.support_ms += w;
      result.segments[speakers[s]].push_back(*vec);
    }
    result.models.push_back(std::move(model));
  }
  return result;
}

// Labels off-screen speech (recording VAD minus all on-screen speech).
// Segments shorter than min_offscreen_segment_ms are dropped; segments with
// no embedding, or farther than speaker_id_threshold from every model, get
// fresh UNK_<n> labels.
inline Diarization assign_offscreen(
    const Timeline& vad, const Diarization& onscreen,
    const EnrollmentResult& enrollment,
    const std::vector<EmbeddingRecord>& segment_embeddings,
    const PipelineConfig& cfg, OffscreenReport* report = nullptr) {
  cfg.validate();
  OffscreenReport local;
  OffscreenReport& rep = report ? *report : local;

  Timeline offscreen = vad - onscreen.all_speech();
  auto records = detail::sorted_records(segment_embeddings);

  std::map<std::string, std::vector<Interval>> assigned;
  std::vector<std::pair<std::string, Interval>> unknowns;
  std::size_t unk_counter = 0;

  for (const Interval& segment : offscreen) {
    if (segment.duration_ms() < cfg.min_offscreen_segment_ms) {
      ++rep.dropped_short;
      continue;
    }
    std::vector<std::pair<const std::vector<double>*, std::int64_t>> weighted;
    for (const EmbeddingRecord* rec : records) {
      std::int64_t w =
          total_duration(Timeline{segment} & Timeline{rec->interval});
      if (w > 0) weighted.push_back({&rec->vector, w});
    }
    std::optional<std::vector<double>> embedding =
        detail::weighted_mean_normalized(weighted);
    if (!embedding) {
      ++rep.without_embedding;
      unknowns.push_back({"UNK_" + std::to_string(unk_counter++), segment});
      ++rep.unknown;
      continue;
    }

    const SpeakerModel* best = nullptr;
    double best_distance = 0;
    for (const SpeakerModel& model : enrollment.models) {
      double dist;
      if (cfg.speaker_id_mode == SpeakerIdMode::kNearestSegment) {
        dist = 2.0;
        auto it = enrollment.segments.find(model.label);
        if (it != enrollment.segments.end())
          for (const auto& seg_vec : it->second)
            dist = std::min(dist, cosine_distance(seg_vec, *embedding));
      } else {
        dist = cosine_distance(model.centroid, *embedding);
      }
      if (!best || dist < best_distance ||
          (dist == best_distance && model.label < best->label)) {
        best = &model;
        best_distance = dist;
      }
    }
    if (best && best_distance < cfg.speaker_id_threshold) {
      assigned[best->label].push_back(segment);
      ++rep.assigned;
    } else {
      unknowns.push_back({"UNK_" + std::to_string(unk_counter++), segment});
      ++rep.unknown;
    }
  }

  // Merge into the on-screen diarization; per-speaker unions coalesce
  // touching on/off-screen speech from the same identity.
  Diarization out;
  out.recording_id = onscreen.recording_id;
  std::map<std::string, std::vector<Interval>> per_speaker;
  for (const Turn& t : onscreen.turns)
    per_speaker[t.speaker].push_back(t.interval);
  for (auto& [label, ivs] : assigned) {
    auto& dst = per_speaker[label];
    dst.insert(dst.end(), ivs.begin(), ivs.end());
  }
  for (auto& [label, ivs] : per_speaker)
    for (const Interval& iv : Timeline(std::move(ivs)))
      out.turns.push_back(Turn{label, iv});
  for (auto& [label, iv] : unknowns) out.turns.push_back(Turn{label, iv});
  out.normalize();
  return out;
}

// ---------------------------------------------------------------------------
// Interchange bundle
// ---------------------------------------------------------------------------

struct InterchangeBundle {
  std::string recording_id;
  double frame_rate_hz = 25.0;
  std::int64_t duration_ms = 0;
  std::vector<DetectionRecord> detections;
  std::vector<Interval> shots;
  std::vector<EmbeddingRecord> face_embeddings;     // owner = track id
  std::vector<ScoreStream> sync_scores;             // owner = track id
  std::vector<ScoreStream> track_vad;               // owner = track id
  ScoreStream recording_vad;                        // owner = recording id
  std::vector<EmbeddingRecord> segment_embeddings;  // owner = segment id
};

inline InterchangeBundle load_bundle(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  auto read_at = [&](const char* name, auto reader) {
    return read_file((dir / name).string(), reader);
  };
  InterchangeBundle b;
  KeyValues meta =
      read_at("meta.txt", [](std::istream& in) { return read_key_values(in); });
  auto rec = meta.get("recording_id");
  if (!rec) throw ValidationError("meta.txt: missing recording_id");
  b.recording_id = *rec;
  b.frame_rate_hz = meta.get_real("frame_rate_hz", 25.0);
  b.duration_ms = meta.get_int("duration_ms", 0);
  if (b.frame_rate_hz <= 0 || b.duration_ms <= 0)
    throw ValidationError("meta.txt: frame_rate_hz and duration_ms must be "
                          "positive");
  b.detections = read_at(
      "detections.txt", [](std::istream& in) { return read_detections(in); });
  b.shots =
      read_at("shots.txt", [](std::istream& in) { return read_shots(in); });
  b.face_embeddings = read_at("face_embeddings.txt", [](std::istream& in) {
    return read_embeddings(in);
  });
  b.sync_scores = read_at("sync_scores.txt",
                          [](std::istream& in) { return read_scores(in); });
  b.track_vad = read_at("track_vad.txt",
                        [](std::istream& in) { return read_scores(in); });
  auto rec_vad = read_at("recording_vad.txt",
                         [](std::istream& in) { return read_scores(in); });
  if (rec_vad.size() != 1)
    throw ValidationError("recording_vad.txt must hold exactly one stream");
  b.recording_vad = std::move(rec_vad.front());
  b.segment_embeddings =
      read_at("segment_embeddings.txt",
              [](std::istream& in) { return read_embeddings(in); });
  return b;
}

inline void write_bundle(const InterchangeBundle& b,
                         const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write_at = [&](const char* name, auto writer) {
    std::ofstream out = detail::open_output((dir / name).string());
    writer(out);
  };
  write_at("meta.txt", [&](std::ostream& out) {
    out << "recording_id " << b.recording_id << "\nframe_rate_hz "
        << format_real(b.frame_rate_hz) << "\nduration_ms " << b.duration_ms
        << "\n";
  });
  write_at("detections.txt",
           [&](std::ostream& out) { write_detections(b.detections, out); });
  write_at("shots.txt", [&](std::ostream& out) { write_shots(b.shots, out); });
  write_at("face_embeddings.txt",
           [&](std::ostream& out) { write_embeddings(b.face_embeddings, out); });
  write_at("sync_scores.txt",
           [&](std::ostream& out) { write_scores(b.sync_scores, out); });
  write_at("track_vad.txt",
           [&](std::ostream& out) { write_scores(b.track_vad, out); });
  write_at("recording_vad.txt",
           [&](std::ostream& out) { write_scores({b.recording_vad}, out); });
  write_at("segment_embeddings.txt", [&](std::ostream& out) {
    write_embeddings(b.segment_embeddings, out);
  });
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
auto run_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what());
  }
}

}  // namespace detail

inline PipelineOutput run_pipeline(const InterchangeBundle& bundle,
                                   const PipelineConfig& cfg,
                                   FusionMode mode = FusionMode::kAgreement) {
  cfg.validate();
  PipelineOutput out;
  AsdConfig asd_cfg = cfg.asd_config();

  std::vector<FaceTrack> tracks = detail::run_stage("tracker", [&] {
    return build_tracks(bundle.detections, bundle.shots, bundle.frame_rate_hz,
                        cfg.tracker_config());
  });
  out.report.n_tracks = tracks.size();

  detail::run_stage("tracker", [&] {
    std::map<std::string, std::vector<std::vector<double>>> samples;
    for (const EmbeddingRecord* rec :
         detail::sorted_records(bundle.face_embeddings))
      samples[rec->owner_id].push_back(rec->vector);
    for (FaceTrack& t : tracks) {
      auto it = samples.find(t.track_id);
      if (it == samples.end())
        throw ValidationError("track " + t.track_id +
                              " has no face embeddings");
      t.embedding = average_track_embedding(it->second);
    }
    return 0;
  });

  Partition partition = detail::run_stage("clustering", [&] {
    ClusterInput input;
    for (const FaceTrack& t : tracks)
      input.items.push_back({t.track_id, t.embedding});
    for (std::size_t i = 0; i < tracks.size(); ++i)
      for (std::size_t j = i + 1; j < tracks.size(); ++j)
        if (tracks_overlap_in_time(tracks[i], tracks[j]))
          input.cannot_link.insert(
              ordered_pair(tracks[i].track_id, tracks[j].track_id));
    input.stop_threshold = cfg.face_cluster_threshold;
    return ahc_constrained(input);
  });
  out.report.n_identities = partition.n_clusters;

  std::map<std::string, Timeline> actives = detail::run_stage("asd", [&] {
    std::map<std::string, const ScoreStream*> sync_by_id, vad_by_id;
    for (const ScoreStream& s : bundle.sync_scores)
      sync_by_id[s.owner_id] = &s;
    for (const ScoreStream& s : bundle.track_vad) vad_by_id[s.owner_id] = &s;
    std::map<std::string, Timeline> result;
    for (const FaceTrack& t : tracks) {
      auto sync_it = sync_by_id.find(t.track_id);
      auto vad_it = vad_by_id.find(t.track_id);
      Timeline active = track_active_timeline(
          sync_it != sync_by_id.end() ? sync_it->second : nullptr,
          vad_it != vad_by_id.end() ? vad_it->second : nullptr, asd_cfg, mode);
      result[t.track_id] = active & Timeline{t.interval};
    }
    return result;
  });

  Timeline recording_vad = detail::run_stage("asd", [&] {
    return smooth(
        stream_to_timeline(bundle.recording_vad, cfg.vad_positive_value),
        asd_cfg);
  });

  Diarization onscreen = detail::run_stage("diarizer", [&] {
    Diarization raw = attribute_onscreen(bundle.recording_id, tracks,
                                         partition, actives, cfg.gap_merge_ms);
    // Output speech never leaves the recording VAD.
    Diarization clipped;
    clipped.recording_id = raw.recording_id;
    for (const std::string& s : raw.speakers())
      for (const Interval& iv : raw.speaker_timeline(s) & recording_vad)
        clipped.turns.push_back(Turn{s, iv});
    clipped.normalize();
    return clipped;
  });

  EnrollmentResult enrollment = detail::run_stage("diarizer", [&] {
    return enroll_speakers(onscreen, bundle.segment_embeddings);
  });
  out.report.skipped_segment_records = enrollment.skipped_records;
  out.report.speakers_without_models = enrollment.speakers_without_models;

  out.diarization = detail::run_stage("diarizer", [&] {
    return assign_offscreen(recording_vad, onscreen, enrollment,
                            bundle.segment_embeddings, cfg,
                            &out.report.offscreen);
  });
  return out;
}

}  // namespace avdiar

#endif  // AVDIAR_DIARIZER_HPP
