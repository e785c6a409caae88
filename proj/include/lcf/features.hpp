#pragma once

#include "lcf/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace lcf::features {

inline constexpr int kWindowFrames = 5;
inline constexpr int kEgoFeatures = 6;
inline constexpr int kSlotFeatures = 3;  // dp, dv, da
inline constexpr int kFrameFeatures = kEgoFeatures + kNeighborSlots * kSlotFeatures;
inline constexpr int kWindowFeatures = kWindowFrames * kFrameFeatures;  // 150

// Bumped whenever the window ordering changes; embedded in samples files and
// model files so mismatched pairs are refused.
inline constexpr int kFeatureOrderingVersion = 1;

inline constexpr double kMissingNeighborDp = 500.0;

// Euclidean relative position/velocity/acceleration between ego and a
// surrounding vehicle.
double rel_dp(const EgoState& ego, const EgoState& sur);
double rel_dv(const EgoState& ego, const EgoState& sur);
double rel_da(const EgoState& ego, const EgoState& sur);

struct WindowOptions {
  // Encoding of an empty slot: (missing_dp, 0, 0).
  double missing_dp = kMissingNeighborDp;
};

// 150-vector over frames anchor-4 .. anchor, frame-major; within a frame:
// ego (x,y,vx,vy,ax,ay) then the 8 slots in canonical order, each (dp,dv,da).
// Empty when the vehicle lacks the required history.
std::optional<Vector> build_window(const Recording& recording, int vehicle_id,
                                   int anchor_frame, const WindowOptions& opts = {});

// Net lane displacement in the driver's frame between anchor and
// anchor + horizon frames. Empty when the track is too short.
std::optional<Label> label_at_horizon(const Recording& recording, int vehicle_id,
                                      int anchor_frame, double horizon_s);

struct SampleWindow {
  Vector features;  // size kWindowFeatures
  Label label = Label::LK;
  std::string recording_id;
  int vehicle_id = 0;
  int anchor_frame = 0;
  double horizon_s = 1.0;
};

// One sample per (vehicle, anchor) with 4 predecessors and horizon_s *
// frame_rate successors, ordered by vehicle id then anchor frame. `threads`
// fans extraction out per track; the result order does not depend on it.
std::vector<SampleWindow> extract_samples(const Recording& recording, double horizon_s,
                                          const WindowOptions& opts = {}, int threads = 1);

// Indices of a uniform downsample of every class to the minimum class count.
// Returned sorted; deterministic per seed.
std::vector<std::size_t> balance_indices(const std::vector<Label>& labels,
                                         std::uint64_t seed);

std::vector<SampleWindow> balance_classes(const std::vector<SampleWindow>& samples,
                                          std::uint64_t seed);

enum class SplitMode { ByTrack, BySample };

const char* split_mode_name(SplitMode mode);
SplitMode split_mode_from_name(const std::string& name);

struct DatasetSplit {
  std::vector<SampleWindow> train;
  std::vector<SampleWindow> test;
};

// 80:20 partition. ByTrack keeps all samples of a (recording, vehicle) on one
// side; BySample is exact to within one sample.
DatasetSplit split(const std::vector<SampleWindow>& samples, std::uint64_t seed,
                   SplitMode mode);

// t{frame}_{entity}_{attr} name of a window feature index; bijective.
std::string feature_name(int index);
int feature_index(const std::string& name);  // inverse; throws on unknown names

// Per-feature z-score statistics, fitted on the training set and applied to
// both sets. Constant features keep stddev 1 so they map to zero.
struct Normalization {
  Vector mean;
  Vector stddev;

  Vector apply(const Vector& window) const;
  Matrix apply(const Matrix& windows) const;  // one window per column
};

Normalization fit_normalization(const Matrix& train_windows);

// Feature matrix (kWindowFeatures x N) over a sample list.
Matrix feature_matrix(const std::vector<SampleWindow>& samples);

// Samples CSV: 150 feature columns named by feature_name, then
// label,recordingId,vehicleId,anchorFrame,horizonS.
void write_samples(const std::vector<SampleWindow>& samples,
                   const std::filesystem::path& path);
std::vector<SampleWindow> read_samples(const std::filesystem::path& path);

nlohmann::json normalization_to_json(const Normalization& norm);
Normalization normalization_from_json(const nlohmann::json& j);

}  // namespace lcf::features
