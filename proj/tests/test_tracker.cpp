// tests/test_tracker.cpp

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

#include "avdiar/tracker.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "oracles.hpp"

using namespace avdiar;

namespace {

DetectionRecord det(std::int64_t frame, double x, double y, double w = 50,
                    double h = 50, double conf = 0.9) {
  DetectionRecord d;
  d.frame_index = frame;
  d.x = x;
  d.y = y;
  d.width = w;
  d.height = h;
  d.confidence = conf;
  return d;
}

}  // namespace

TEST_CASE("box_iou") {
  CHECK(box_iou(det(0, 0, 0), det(0, 0, 0)) == Catch::Approx(1.0));
  CHECK(box_iou(det(0, 0, 0), det(0, 500, 500)) == Catch::Approx(0.0));
  // 50x50 boxes shifted by 25 in x: inter 25*50, union 2*2500-1250
  CHECK(box_iou(det(0, 0, 0), det(0, 25, 0)) == Catch::Approx(1250.0 / 3750.0));
}

TEST_CASE("static box in one shot becomes one track") {
  std::vector<DetectionRecord> dets;
  for (int f = 0; f < 10; ++f) dets.push_back(det(f, 100, 100));
  auto tracks = build_tracks(dets, {Interval(0, 400)}, 25.0);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].frames.size() == 10);
  CHECK(tracks[0].track_id == "t0000");
  CHECK(tracks[0].interval == Interval(0, 400));
}

TEST_CASE("a shot cut splits an otherwise continuous track") {
  std::vector<DetectionRecord> dets;
  for (int f = 0; f < 10; ++f) dets.push_back(det(f, 100, 100));
  auto tracks =
      build_tracks(dets, {Interval(0, 200), Interval(200, 400)}, 25.0);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].shot_index == 0);
  CHECK(tracks[1].shot_index == 1);
  CHECK(tracks[0].frames.size() == 5);
  CHECK(tracks[1].frames.size() == 5);
}

TEST_CASE("far-apart boxes run as parallel tracks") {
  std::vector<DetectionRecord> dets;
  for (int f = 0; f < 8; ++f) {
    dets.push_back(det(f, 0, 0));
    dets.push_back(det(f, 400, 0));
  }
  auto tracks = build_tracks(dets, {Interval(0, 400)}, 25.0);
  REQUIRE(tracks.size() == 2);
  CHECK(tracks[0].frames.size() == 8);
  CHECK(tracks[1].frames.size() == 8);
}

TEST_CASE("frame gaps within max_frame_skip stay in one track") {
  std::vector<DetectionRecord> dets = {det(0, 0, 0), det(8, 0, 0),
                                       det(20, 0, 0)};
  auto tracks = build_tracks(dets, {Interval(0, 2000)}, 25.0);
  REQUIRE(tracks.size() == 2);  // gap 8 joins, gap 12 > 10 starts fresh
  CHECK(tracks[0].frames.size() == 2);
}

TEST_CASE("ties go to the highest IoU") {
  // Two tracks side by side; the new box overlaps both but sits closer to
  // the second.
  std::vector<DetectionRecord> dets = {det(0, 0, 0), det(0, 40, 0),
                                       det(1, 30, 0)};
  TrackerConfig cfg;
  cfg.iou_threshold = 0.05;
  auto tracks = build_tracks(dets, {Interval(0, 400)}, 25.0, cfg);
  REQUIRE(tracks.size() == 2);
  // box at 30 has IoU 20/80 with track at 0 and 40/60 with track at 40
  CHECK(tracks[1].frames.size() == 2);
}

TEST_CASE("detections outside every shot are rejected") {
  std::vector<DetectionRecord> dets = {det(0, 0, 0), det(30, 0, 0)};
  CHECK_THROWS_AS(build_tracks(dets, {Interval(0, 400)}, 25.0),
                  ValidationError);
}

TEST_CASE("every detection lands in exactly one track") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> pos(0, 500);
  std::uniform_real_distribution<double> vel(-4, 4);
  std::vector<DetectionRecord> dets;
  struct Walker {
    double x, y, vx, vy;
  };
  std::vector<Walker> walkers;
  for (int k = 0; k < 4; ++k)
    walkers.push_back({pos(rng), pos(rng), vel(rng), vel(rng)});
  for (int f = 0; f < 100; ++f) {
    for (Walker& w : walkers) {
      w.x += w.vx;
      w.y += w.vy;
      dets.push_back(det(f, w.x, w.y));
    }
  }
  std::vector<Interval> shots = {Interval(0, 2000), Interval(2000, 4000)};
  auto tracks = build_tracks(dets, shots, 25.0);

  std::size_t assigned = 0;
  for (const FaceTrack& t : tracks) {
    assigned += t.frames.size();
    for (std::size_t i = 1; i < t.frames.size(); ++i)
      CHECK(t.frames[i].frame_index > t.frames[i - 1].frame_index);
    // no track crosses a shot boundary
    std::int64_t cut_frame = 50;  // 2000 ms at 25 fps
    CHECK((t.last_frame() < cut_frame || t.first_frame() >= cut_frame));
  }
  CHECK(assigned == dets.size());
}

TEST_CASE("lowering the IoU threshold never adds tracks") {
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> pos(0, 400);
  std::uniform_real_distribution<double> vel(-3, 3);
  for (int iter = 0; iter < 10; ++iter) {
    std::vector<DetectionRecord> dets;
    struct Walker {
      double x, y, vx, vy;
    };
    std::vector<Walker> walkers;
    for (int k = 0; k < 3; ++k)
      walkers.push_back({pos(rng), pos(rng), vel(rng), vel(rng)});
    for (int f = 0; f < 60; ++f)
      for (Walker& w : walkers) {
        w.x += w.vx;
        w.y += w.vy;
        dets.push_back(det(f, w.x, w.y));
      }
    std::size_t prev = dets.size() + 1;
    for (double thr : {0.9, 0.7, 0.5, 0.3, 0.1}) {
      TrackerConfig cfg;
      cfg.iou_threshold = thr;
      auto tracks = build_tracks(dets, {Interval(0, 3000)}, 25.0, cfg);
      CHECK(tracks.size() <= prev);
      prev = tracks.size();
    }
  }
}

TEST_CASE("track interval is half-open on the frame grid") {
  std::vector<DetectionRecord> dets = {det(10, 0, 0), det(11, 0, 0),
                                       det(12, 0, 0)};
  auto tracks = build_tracks(dets, {Interval(0, 2000)}, 25.0);
  REQUIRE(tracks.size() == 1);
  CHECK(tracks[0].interval == Interval(400, 520));
}

TEST_CASE("average_track_embedding") {
  std::vector<double> e = normalized({3, 4});
  CHECK(average_track_embedding({e, e, e, e, e}) == e);

  auto avg = average_track_embedding({{1, 0}, {0, 1}});
  CHECK(avg[0] == Catch::Approx(0.7071).margin(1e-4));
  CHECK(avg[1] == Catch::Approx(0.7071).margin(1e-4));

  CHECK_THROWS_AS(average_track_embedding({{1, 0}, {-1, 0}}), ValidationError);
  CHECK_THROWS_AS(average_track_embedding({}), ValidationError);
  CHECK_THROWS_AS(average_track_embedding({{1, 0}, {1, 0, 0}}),
                  ValidationError);
}

TEST_CASE("tracks_overlap_in_time matches the timeline oracle") {
  FaceTrack a, b;
  a.interval = Interval(0, 5);
  b.interval = Interval(3, 8);
  CHECK(tracks_overlap_in_time(a, b));
  b.interval = Interval(5, 8);
  CHECK_FALSE(tracks_overlap_in_time(a, b));

  std::mt19937_64 rng(4321);
  std::uniform_int_distribution<std::int64_t> onset(0, 900);
  std::uniform_int_distribution<std::int64_t> len(1, 100);
  for (int iter = 0; iter < 200; ++iter) {
    a.interval = Interval(onset(rng), onset(rng) + 1000 + len(rng));
    b.interval = Interval(onset(rng), onset(rng) + 1000 + len(rng));
    bool via_timeline =
        !(Timeline{a.interval} & Timeline{b.interval}).empty();
    CHECK(tracks_overlap_in_time(a, b) == via_timeline);
  }
}

TEST_CASE("tracks file round trip") {
  std::vector<DetectionRecord> dets;
  for (int f = 0; f < 6; ++f) {
    dets.push_back(det(f, 0, 0));
    dets.push_back(det(f, 300, 0));
  }
  auto tracks = build_tracks(dets, {Interval(0, 400)}, 25.0);
  std::ostringstream out;
  write_tracks(tracks, out);
  std::istringstream in(out.str());
  auto summaries = read_tracks(in);
  REQUIRE(summaries.size() == tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    CHECK(summaries[i].track_id == tracks[i].track_id);
    CHECK(summaries[i].interval == tracks[i].interval);
    CHECK(summaries[i].frame_indices.size() == tracks[i].frames.size());
  }

  std::istringstream bad("t0000 0 0 100 3 1 5 5\n");
  CHECK_THROWS_AS(read_tracks(bad), ValidationError);
}
