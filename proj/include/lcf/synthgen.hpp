#pragma once

#include "lcf/types.hpp"

#include <cstdint>
#include <vector>

namespace lcf::synthgen {

enum class Direction { Left, Right };

const char* direction_name(Direction d);
Direction direction_from_name(const std::string& name);

struct LaneChangeEvent {
  int vehicle_index = 0;  // index into the generated vehicle list
  int start_frame = 0;
  Direction direction = Direction::Left;
  int duration_frames = 0;  // 0: drawn from the 2-6 s range at generation time
};

struct ScenarioConfig {
  int lane_count = 3;
  double lane_width = 3.5;  // meters
  double frame_rate = 25.0;
  double duration_s = 60.0;
  int vehicle_count = 0;
  double speed_min = 27.9;  // m/s; structured environment, > 100 km/h
  double speed_max = 33.3;
  std::vector<LaneChangeEvent> events;
  std::uint64_t seed = 1;

  int total_frames() const;  // frame_rate * duration, validated integer
};

// Smooth lateral profile W * (10 tau^3 - 15 tau^4 + 6 tau^5), tau = t/T.
// First and second derivatives vanish at both endpoints.
double quintic_lateral(double t, double T, double W);

// Lane center (y) of the lane at left-to-right position `lane_index`.
double lane_center(const ScenarioConfig& config, int lane_index);

// Deterministic multi-lane recording: constant speed per vehicle, quintic
// lateral motion during events, lane id by nearest lane center. Initial lanes
// are assigned round-robin (vehicle i starts in lane i mod lane_count);
// longitudinal start positions and speeds come from the seeded generator.
Recording generate_scenario(const ScenarioConfig& config);

// Expand `count` feasible events at seeded vehicles/frames/directions.
// Used by config files that ask for scripted traffic without listing events.
std::vector<LaneChangeEvent> random_events(const ScenarioConfig& config, int count,
                                           std::uint64_t seed);

}  // namespace lcf::synthgen
