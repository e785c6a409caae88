#pragma once

#include "lcf/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace lcf {

// Canonical surrounding-vehicle slots. This ordering is the serialization
// order everywhere window features or neighbor columns appear.
enum class NeighborSlot {
  Preceding = 0,
  Following,
  LeftPreceding,
  LeftAlongside,
  LeftFollowing,
  RightPreceding,
  RightAlongside,
  RightFollowing,
};

inline constexpr int kNeighborSlots = 8;

const char* slot_name(NeighborSlot slot);

enum class Label { LCL = 0, LK = 1, LCR = 2 };

const char* label_name(Label label);
Label label_from_name(const std::string& name);

inline bool is_lane_change(Label l) { return l != Label::LK; }

// Binary encodings used by the cascade: model 1 {LK -> 0, LC -> 1},
// model 2 {Left -> 0, Right -> 1}.
inline int lane_change_class(Label l) { return is_lane_change(l) ? 1 : 0; }
inline int direction_class(Label l) { return l == Label::LCL ? 0 : 1; }

struct VehicleState {
  double x = 0, y = 0;
  double vx = 0, vy = 0;
  double ax = 0, ay = 0;
};

using EgoState = VehicleState;

struct TrackFrame {
  int frame = 0;
  VehicleState state;
  int lane_id = 0;
  std::array<int, kNeighborSlots> neighbors{};  // vehicle ids, 0 = empty slot
};

struct Track {
  int vehicle_id = 0;
  std::vector<TrackFrame> frames;  // strictly increasing frame numbers

  // Binary search by frame number; nullptr when the frame is absent.
  const TrackFrame* at_frame(int frame) const;
};

struct LaneLayout {
  std::vector<int> lane_ids;  // leftmost to rightmost in the driver's frame
  int driving_direction = 1;  // sign of travel along x
  double frame_rate = 25.0;

  // Position in the left-to-right ordering, -1 when unknown.
  int index_of(int lane_id) const;
};

enum class SourceTag { Synthetic, HighdLike, ExidLike };

const char* source_name(SourceTag tag);
SourceTag source_from_name(const std::string& name);

struct Recording {
  std::string id;
  LaneLayout layout;
  std::vector<Track> tracks;  // sorted by vehicle_id
  SourceTag source = SourceTag::Synthetic;
  bool has_neighbor_columns = false;

  const Track* track_of(int vehicle_id) const;
};

}  // namespace lcf
