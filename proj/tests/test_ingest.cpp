#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lcf/ingest.hpp"
#include "lcf/synthgen.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace lcf;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path dir = fs::temp_directory_path() / "lcf_ingest_test";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path path = tmp_dir() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

const std::string kMeta =
    R"({"frameRate": 25, "laneIdsLeftToRight": [1, 2, 3], "drivingDirection": 1})";

const std::string kHeader =
    "frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId\n";

std::string row(int frame, int id, double x, int lane) {
  return std::to_string(frame) + "," + std::to_string(id) + "," + std::to_string(x) +
         ",1.75,30,0,0,0," + std::to_string(lane) + "\n";
}

// one-frame scene builder: (vehicle_id, lane_id, x)
Recording scene(const std::vector<std::tuple<int, int, double>>& vehicles,
                int driving_direction = 1) {
  Recording rec;
  rec.id = "scene";
  rec.layout.lane_ids = {1, 2, 3};
  rec.layout.driving_direction = driving_direction;
  for (const auto& [id, lane, x] : vehicles) {
    Track t;
    t.vehicle_id = id;
    TrackFrame f;
    f.frame = 0;
    f.lane_id = lane;
    f.state.x = x;
    f.state.y = (rec.layout.index_of(lane) + 0.5) * 3.5;
    f.state.vx = 30;
    t.frames.push_back(f);
    rec.tracks.push_back(std::move(t));
  }
  std::sort(rec.tracks.begin(), rec.tracks.end(),
            [](const Track& a, const Track& b) { return a.vehicle_id < b.vehicle_id; });
  return rec;
}

// independent re-derivation of the slot rules for one ego
ingest::SlotMap oracle_slots(const Recording& rec, int ego_id) {
  const double L = 5.0;  // nominal vehicle length
  struct Cand {
    int id;
    double s;
    int lane;
  };
  std::vector<Cand> all;
  Cand ego{};
  for (const Track& t : rec.tracks) {
    const TrackFrame* f = t.at_frame(0);
    REQUIRE(f != nullptr);
    Cand c{t.vehicle_id, f->state.x * rec.layout.driving_direction,
           rec.layout.index_of(f->lane_id)};
    if (t.vehicle_id == ego_id)
      ego = c;
    else
      all.push_back(c);
  }

  ingest::SlotMap slots{};
  auto nearest = [&](auto&& pred, auto&& dist) {
    int best_id = 0;
    double best = std::numeric_limits<double>::infinity();
    for (const Cand& c : all)
      if (pred(c) && dist(c) < best) {
        best = dist(c);
        best_id = c.id;
      }
    return best_id;
  };
  auto overlap = [&](const Cand& c) {
    return std::max(c.s, ego.s) - std::min(c.s, ego.s) <= L;
  };
  auto abs_gap = [&](const Cand& c) { return std::abs(c.s - ego.s); };

  slots[0] = nearest([&](const Cand& c) { return c.lane == ego.lane && c.s > ego.s; },
                     [&](const Cand& c) { return c.s - ego.s; });
  slots[1] = nearest([&](const Cand& c) { return c.lane == ego.lane && c.s < ego.s; },
                     [&](const Cand& c) { return ego.s - c.s; });
  for (int side = 0; side < 2; ++side) {
    const int lane = ego.lane + (side == 0 ? -1 : 1);
    const int base = side == 0 ? 2 : 5;
    slots[base] = nearest(
        [&](const Cand& c) { return c.lane == lane && !overlap(c) && c.s > ego.s; },
        [&](const Cand& c) { return c.s - ego.s; });
    slots[base + 1] =
        nearest([&](const Cand& c) { return c.lane == lane && overlap(c); }, abs_gap);
    slots[base + 2] = nearest(
        [&](const Cand& c) { return c.lane == lane && !overlap(c) && c.s < ego.s; },
        [&](const Cand& c) { return ego.s - c.s; });
  }
  return slots;
}

}  // namespace

TEST_CASE("empty tracks file parses to zero tracks") {
  const auto tracks = write_file("empty.csv", kHeader);
  const auto meta = write_file("meta.json", kMeta);
  const Recording rec = ingest::parse_recording(tracks, meta);
  CHECK(rec.tracks.empty());
  CHECK(rec.layout.frame_rate == 25.0);
  CHECK(rec.layout.lane_ids == std::vector<int>{1, 2, 3});
}

TEST_CASE("two-row file yields one track of length 2") {
  const auto tracks = write_file("two.csv", kHeader + row(0, 7, 0, 2) + row(1, 7, 1.2, 2));
  const auto meta = write_file("meta.json", kMeta);
  const Recording rec = ingest::parse_recording(tracks, meta);
  REQUIRE(rec.tracks.size() == 1);
  CHECK(rec.tracks[0].vehicle_id == 7);
  CHECK(rec.tracks[0].frames.size() == 2);
  CHECK_FALSE(rec.has_neighbor_columns);
}

TEST_CASE("non-monotone frames are rejected") {
  const auto tracks = write_file("mono.csv", kHeader + row(1, 7, 1.2, 2) + row(0, 7, 0, 2));
  const auto meta = write_file("meta.json", kMeta);
  CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
}

TEST_CASE("malformed rows name the offending line") {
  const auto tracks =
      write_file("bad.csv", kHeader + row(0, 7, 0, 2) + "1,7,not_a_number,1.75,30,0,0,0,2\n");
  const auto meta = write_file("meta.json", kMeta);
  try {
    ingest::parse_recording(tracks, meta);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("unknown lane ids are rejected") {
  const auto tracks = write_file("lane.csv", kHeader + row(0, 7, 0, 9));
  const auto meta = write_file("meta.json", kMeta);
  CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
}

TEST_CASE("duplicate (frame, vehicle) rows are rejected") {
  const auto tracks = write_file("dup.csv", kHeader + row(0, 7, 0, 2) + row(0, 7, 5, 2));
  const auto meta = write_file("meta.json", kMeta);
  CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
}

TEST_CASE("a partial neighbor column group is rejected") {
  const std::string header =
      "frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId,precedingId\n";
  const auto tracks = write_file("partial.csv", header);
  const auto meta = write_file("meta.json", kMeta);
  CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ParseError);
}

TEST_CASE("neighbor ids must reference vehicles present at the frame") {
  std::string header = kHeader;
  header.pop_back();
  header += ",precedingId,followingId,leftPrecedingId,leftAlongsideId,leftFollowingId,"
            "rightPrecedingId,rightAlongsideId,rightFollowingId\n";
  const auto tracks =
      write_file("ghost.csv", header + "0,7,0,1.75,30,0,0,0,2,99,0,0,0,0,0,0,0\n");
  const auto meta = write_file("meta.json", kMeta);
  CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
}

TEST_CASE("HighD-style extra columns are ignored, ExiD-style aliases accepted") {
  SUBCASE("extra columns") {
    const std::string header =
        "frame,id,width,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,dhw,laneId\n";
    const auto tracks = write_file("extra.csv", header + "0,7,4.2,0,1.75,30,0,0,0,55.0,2\n");
    const auto meta = write_file("meta.json", kMeta);
    const Recording rec = ingest::parse_recording(tracks, meta);
    REQUIRE(rec.tracks.size() == 1);
    CHECK(rec.source == SourceTag::HighdLike);
  }
  SUBCASE("aliases") {
    const std::string header =
        "frame,trackId,xCenter,yCenter,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId\n";
    const auto tracks = write_file("alias.csv", header + "0,7,0,1.75,30,0,0,0,2\n");
    const auto meta = write_file("meta.json", kMeta);
    const Recording rec = ingest::parse_recording(tracks, meta);
    REQUIRE(rec.tracks.size() == 1);
    CHECK(rec.tracks[0].vehicle_id == 7);
    CHECK(rec.source == SourceTag::ExidLike);
  }
}

TEST_CASE("single vehicle has all slots empty") {
  const Recording rec = scene({{1, 2, 100.0}});
  const auto map = ingest::assign_neighbors(rec, 0);
  REQUIRE(map.count(1) == 1);
  for (int id : map.at(1)) CHECK(id == 0);
}

TEST_CASE("same-lane preceding and following") {
  const Recording rec = scene({{1, 2, 0.0}, {2, 2, 50.0}, {3, 2, 100.0}});
  const auto map = ingest::assign_neighbors(rec, 0);
  const auto& middle = map.at(2);
  CHECK(middle[static_cast<int>(NeighborSlot::Preceding)] == 3);
  CHECK(middle[static_cast<int>(NeighborSlot::Following)] == 1);
  // antisymmetry on the outer vehicles
  CHECK(map.at(3)[static_cast<int>(NeighborSlot::Following)] == 2);
  CHECK(map.at(1)[static_cast<int>(NeighborSlot::Preceding)] == 2);
}

TEST_CASE("adjacent vehicles at the same x are mutual alongside slots") {
  const Recording rec = scene({{1, 2, 80.0}, {2, 3, 80.0}});
  const auto map = ingest::assign_neighbors(rec, 0);
  // lane 3 is to the right of lane 2 in the left-to-right ordering
  CHECK(map.at(1)[static_cast<int>(NeighborSlot::RightAlongside)] == 2);
  CHECK(map.at(2)[static_cast<int>(NeighborSlot::LeftAlongside)] == 1);
  CHECK(map.at(1)[static_cast<int>(NeighborSlot::RightPreceding)] == 0);
  CHECK(map.at(2)[static_cast<int>(NeighborSlot::LeftFollowing)] == 0);
}

TEST_CASE("reversed driving direction flips ahead and behind") {
  const Recording rec = scene({{1, 2, 0.0}, {2, 2, 50.0}}, -1);
  const auto map = ingest::assign_neighbors(rec, 0);
  CHECK(map.at(1)[static_cast<int>(NeighborSlot::Preceding)] == 0);
  CHECK(map.at(1)[static_cast<int>(NeighborSlot::Following)] == 2);
  CHECK(map.at(2)[static_cast<int>(NeighborSlot::Preceding)] == 1);
}

TEST_CASE("random scenes match the brute-force oracle") {
  Rng rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<std::tuple<int, int, double>> vehicles;
    const int n = 2 + static_cast<int>(rng.below(7));
    for (int v = 0; v < n; ++v)
      vehicles.push_back({v + 1, 1 + static_cast<int>(rng.below(3)), rng.uniform(0, 150)});
    const Recording rec = scene(vehicles, trial % 2 == 0 ? 1 : -1);
    const auto map = ingest::assign_neighbors(rec, 0);
    for (const auto& [id, lane, x] : vehicles) {
      const auto expected = oracle_slots(rec, id);
      CHECK(map.at(id) == expected);

      // no vehicle occupies two slots of the same ego
      std::vector<int> seen;
      for (int nb : map.at(id))
        if (nb != 0) {
          CHECK(std::find(seen.begin(), seen.end(), nb) == seen.end());
          seen.push_back(nb);
        }
    }
    // antisymmetry of the same-lane longitudinal slots
    for (const auto& [id, slots] : map) {
      const int ahead = slots[static_cast<int>(NeighborSlot::Preceding)];
      if (ahead != 0)
        CHECK(map.at(ahead)[static_cast<int>(NeighborSlot::Following)] == id);
    }
  }
}

TEST_CASE("synthgen output round-trips through CSV with identical neighbors") {
  synthgen::ScenarioConfig cfg;
  cfg.lane_count = 3;
  cfg.vehicle_count = 9;
  cfg.duration_s = 8.0;
  cfg.speed_min = 28.0;
  cfg.speed_max = 33.0;
  cfg.seed = 5;
  cfg.events.push_back({4, 25, synthgen::Direction::Left, 100});
  const Recording rec = synthgen::generate_scenario(cfg);
  REQUIRE(rec.has_neighbor_columns);

  const fs::path dir = tmp_dir() / "roundtrip";
  ingest::write_recording(rec, dir);
  const Recording parsed =
      ingest::parse_recording(dir / "tracks.csv", dir / "recordingMeta.json");
  REQUIRE(parsed.has_neighbor_columns);
  CHECK(parsed.source == SourceTag::Synthetic);
  CHECK(parsed.id == rec.id);

  // re-running the assignment reproduces the stored columns exactly
  for (const Track& track : parsed.tracks)
    for (const TrackFrame& f : track.frames) {
      const auto assigned = ingest::assign_neighbors(parsed, f.frame);
      CHECK(assigned.at(track.vehicle_id) == f.neighbors);
    }

  // and the parsed states are bit-identical to the generated ones
  for (std::size_t t = 0; t < rec.tracks.size(); ++t)
    for (std::size_t k = 0; k < rec.tracks[t].frames.size(); ++k) {
      CHECK(parsed.tracks[t].frames[k].state.x == rec.tracks[t].frames[k].state.x);
      CHECK(parsed.tracks[t].frames[k].state.y == rec.tracks[t].frames[k].state.y);
      CHECK(parsed.tracks[t].frames[k].state.ay == rec.tracks[t].frames[k].state.ay);
    }
}

TEST_CASE("meta validation") {
  const auto tracks = write_file("ok.csv", kHeader);
  SUBCASE("duplicate lane ids") {
    const auto meta = write_file(
        "m1.json", R"({"frameRate": 25, "laneIdsLeftToRight": [1, 1], "drivingDirection": 1})");
    CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
  }
  SUBCASE("bad driving direction") {
    const auto meta = write_file(
        "m2.json", R"({"frameRate": 25, "laneIdsLeftToRight": [1, 2], "drivingDirection": 2})");
    CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ValidationError);
  }
  SUBCASE("missing key") {
    const auto meta = write_file("m3.json", R"({"frameRate": 25})");
    CHECK_THROWS_AS(ingest::parse_recording(tracks, meta), ParseError);
  }
}
