#pragma once

#include "lcf/types.hpp"

#include <array>
#include <filesystem>
#include <map>

#include "json.hpp"

namespace lcf::ingest {

// Vehicle id per slot, 0 = empty.
using SlotMap = std::array<int, kNeighborSlots>;

// Tracks CSV + meta JSON -> Recording. The canonical header is
//   frame,id,x,y,xVelocity,yVelocity,xAcceleration,yAcceleration,laneId,
//   precedingId,...,rightFollowingId
// with the eight neighbor columns optional as a group. Extra columns from
// HighD-style exports are ignored; ExiD-style aliases (trackId, xCenter,
// yCenter) are accepted.
Recording parse_recording(const std::filesystem::path& tracks_path,
                          const std::filesystem::path& meta_path);

// Writes <dir>/tracks.csv and <dir>/recordingMeta.json in the canonical
// schema. Extra key/values are merged into the meta JSON.
void write_recording(const Recording& recording, const std::filesystem::path& dir,
                     const nlohmann::json& extra_meta = nlohmann::json::object());

// Surrounding-vehicle slots for every vehicle present at `frame`.
// Longitudinal order is taken in the driver's frame (x * driving_direction);
// "alongside" means longitudinal interval overlap with a 5 m nominal vehicle
// length.
std::map<int, SlotMap> assign_neighbors(const Recording& recording, int frame);

// Fills the per-frame neighbor columns when the source had none.
// Pre-existing columns are left untouched.
void ensure_neighbors(Recording& recording);

inline constexpr double kNominalVehicleLength = 5.0;

}  // namespace lcf::ingest
