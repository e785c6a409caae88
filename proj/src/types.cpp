#include "lcf/types.hpp"

#include <algorithm>

namespace lcf {

const char* slot_name(NeighborSlot slot) {
  switch (slot) {
    case NeighborSlot::Preceding: return "preceding";
    case NeighborSlot::Following: return "following";
    case NeighborSlot::LeftPreceding: return "leftPreceding";
    case NeighborSlot::LeftAlongside: return "leftAlongside";
    case NeighborSlot::LeftFollowing: return "leftFollowing";
    case NeighborSlot::RightPreceding: return "rightPreceding";
    case NeighborSlot::RightAlongside: return "rightAlongside";
    case NeighborSlot::RightFollowing: return "rightFollowing";
  }
  return "?";
}

const char* label_name(Label label) {
  switch (label) {
    case Label::LCL: return "LCL";
    case Label::LK: return "LK";
    case Label::LCR: return "LCR";
  }
  return "?";
}

Label label_from_name(const std::string& name) {
  if (name == "LCL") return Label::LCL;
  if (name == "LK") return Label::LK;
  if (name == "LCR") return Label::LCR;
  throw ValidationError("unknown label: " + name);
}

const char* source_name(SourceTag tag) {
  switch (tag) {
    case SourceTag::Synthetic: return "synthetic";
    case SourceTag::HighdLike: return "highd-like";
    case SourceTag::ExidLike: return "exid-like";
  }
  return "?";
}

SourceTag source_from_name(const std::string& name) {
  if (name == "synthetic") return SourceTag::Synthetic;
  if (name == "highd-like") return SourceTag::HighdLike;
  if (name == "exid-like") return SourceTag::ExidLike;
  throw ValidationError("unknown source tag: " + name);
}

const TrackFrame* Track::at_frame(int frame) const {
  auto it = std::lower_bound(frames.begin(), frames.end(), frame,
                             [](const TrackFrame& f, int key) { return f.frame < key; });
  if (it == frames.end() || it->frame != frame) return nullptr;
  return &*it;
}

int LaneLayout::index_of(int lane_id) const {
  auto it = std::find(lane_ids.begin(), lane_ids.end(), lane_id);
  if (it == lane_ids.end()) return -1;
  return static_cast<int>(it - lane_ids.begin());
}

const Track* Recording::track_of(int vehicle_id) const {
  auto it = std::lower_bound(tracks.begin(), tracks.end(), vehicle_id,
                             [](const Track& t, int key) { return t.vehicle_id < key; });
  if (it == tracks.end() || it->vehicle_id != vehicle_id) return nullptr;
  return &*it;
}

}  // namespace lcf
