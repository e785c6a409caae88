#include "lcf/synthgen.hpp"

#include "lcf/ingest.hpp"

#include <algorithm>
#include <cmath>

namespace lcf::synthgen {

namespace {

// Derivatives of the quintic profile, used for exact vy/ay.
double quintic_vel(double t, double T, double W) {
  const double tau = t / T;
  const double tau2 = tau * tau;
  return W * (30 * tau2 - 60 * tau2 * tau + 30 * tau2 * tau2) / T;
}

double quintic_acc(double t, double T, double W) {
  const double tau = t / T;
  const double tau2 = tau * tau;
  return W * (60 * tau - 180 * tau2 + 120 * tau2 * tau) / (T * T);
}

struct ResolvedEvent {
  int vehicle_index;
  int start_frame;
  int duration_frames;
  int direction_sign;  // -1 = Left (toward lane index 0), +1 = Right
};

// Nearest lane center; an exact midpoint between two centers goes to the
// rightward (higher-index) lane.
int nearest_lane_index(const ScenarioConfig& config, double y) {
  int idx = static_cast<int>(std::lround(y / config.lane_width - 0.5));
  return std::clamp(idx, 0, config.lane_count - 1);
}

}  // namespace

const char* direction_name(Direction d) {
  return d == Direction::Left ? "left" : "right";
}

Direction direction_from_name(const std::string& name) {
  if (name == "left" || name == "Left") return Direction::Left;
  if (name == "right" || name == "Right") return Direction::Right;
  throw ValidationError("unknown lane change direction: " + name);
}

int ScenarioConfig::total_frames() const {
  const double frames = frame_rate * duration_s;
  const double rounded = std::round(frames);
  if (std::abs(frames - rounded) > 1e-9 || rounded < 1)
    throw ValidationError("frame_rate * duration must be a positive integer frame count");
  return static_cast<int>(rounded);
}

double quintic_lateral(double t, double T, double W) {
  if (!(T > 0)) throw std::domain_error("quintic_lateral: T must be positive");
  if (t < 0 || t > T) throw std::domain_error("quintic_lateral: t outside [0, T]");
  const double tau = t / T;
  const double tau3 = tau * tau * tau;
  return W * (10 * tau3 - 15 * tau3 * tau + 6 * tau3 * tau * tau);
}

double lane_center(const ScenarioConfig& config, int lane_index) {
  return (lane_index + 0.5) * config.lane_width;
}

Recording generate_scenario(const ScenarioConfig& config) {
  if (config.lane_count < 1) throw ValidationError("lane_count must be >= 1");
  if (!(config.lane_width > 0)) throw ValidationError("lane_width must be positive");
  if (!(config.frame_rate > 0)) throw ValidationError("frame_rate must be positive");
  if (!(config.duration_s > 0)) throw ValidationError("duration must be positive");
  if (config.vehicle_count < 0) throw ValidationError("vehicle_count must be >= 0");
  if (config.speed_min < 27.8)
    throw ValidationError("speed_min below the structured-environment floor (27.8 m/s)");
  if (config.speed_max < config.speed_min)
    throw ValidationError("speed_max must be >= speed_min");
  const int frames = config.total_frames();

  Rng rng(config.seed);

  // Vehicle index i starts in lane i mod lane_count; ids are 1-based.
  std::vector<int> initial_lane(config.vehicle_count);
  for (int v = 0; v < config.vehicle_count; ++v) initial_lane[v] = v % config.lane_count;

  std::vector<double> speed(config.vehicle_count);
  for (int v = 0; v < config.vehicle_count; ++v)
    speed[v] = rng.uniform(config.speed_min, config.speed_max);

  // Per lane, start positions spaced by at least 20 m.
  std::vector<double> start_x(config.vehicle_count, 0.0);
  for (int lane = 0; lane < config.lane_count; ++lane) {
    double cursor = 0.0;
    bool first = true;
    for (int v = 0; v < config.vehicle_count; ++v) {
      if (initial_lane[v] != lane) continue;
      cursor += first ? rng.uniform(0.0, 30.0) : 20.0 + rng.uniform(0.0, 30.0);
      start_x[v] = cursor;
      first = false;
    }
  }

  // Resolve event durations in declaration order, then validate feasibility
  // along each vehicle's evolving lane.
  std::vector<ResolvedEvent> events;
  events.reserve(config.events.size());
  const int min_dur = static_cast<int>(std::lround(2.0 * config.frame_rate));
  const int max_dur = static_cast<int>(std::lround(6.0 * config.frame_rate));
  for (const LaneChangeEvent& e : config.events) {
    if (e.vehicle_index < 0 || e.vehicle_index >= config.vehicle_count)
      throw ValidationError("event references vehicle index out of range");
    int dur = e.duration_frames;
    if (dur == 0) dur = min_dur + static_cast<int>(rng.below(max_dur - min_dur + 1));
    if (dur < 1) throw ValidationError("event duration must be positive");
    if (e.start_frame < 0 || e.start_frame + dur > frames)
      throw ValidationError("event does not fit inside the recording");
    events.push_back({e.vehicle_index, e.start_frame, dur,
                      e.direction == Direction::Left ? -1 : +1});
  }

  std::vector<std::vector<ResolvedEvent>> per_vehicle(config.vehicle_count);
  for (const ResolvedEvent& e : events) per_vehicle[e.vehicle_index].push_back(e);
  for (int v = 0; v < config.vehicle_count; ++v) {
    auto& evs = per_vehicle[v];
    std::sort(evs.begin(), evs.end(),
              [](const ResolvedEvent& a, const ResolvedEvent& b) {
                return a.start_frame < b.start_frame;
              });
    int lane = initial_lane[v];
    int prev_end = -1;
    for (const ResolvedEvent& e : evs) {
      if (e.start_frame < prev_end)
        throw ValidationError("overlapping lane change events for one vehicle");
      lane += e.direction_sign;
      if (lane < 0 || lane >= config.lane_count)
        throw ValidationError("lane change direction leaves the road");
      prev_end = e.start_frame + e.duration_frames;
    }
  }

  Recording rec;
  rec.id = "synth-" + std::to_string(config.seed);
  rec.source = SourceTag::Synthetic;
  rec.layout.driving_direction = 1;
  rec.layout.frame_rate = config.frame_rate;
  rec.layout.lane_ids.resize(config.lane_count);
  for (int i = 0; i < config.lane_count; ++i) rec.layout.lane_ids[i] = i + 1;

  const double dt = 1.0 / config.frame_rate;
  rec.tracks.resize(config.vehicle_count);
  for (int v = 0; v < config.vehicle_count; ++v) {
    Track& track = rec.tracks[v];
    track.vehicle_id = v + 1;
    track.frames.resize(frames);
    const auto& evs = per_vehicle[v];
    std::size_t next_event = 0;
    int lane_before = initial_lane[v];
    for (int k = 0; k < frames; ++k) {
      while (next_event < evs.size() &&
             k >= evs[next_event].start_frame + evs[next_event].duration_frames) {
        lane_before += evs[next_event].direction_sign;
        ++next_event;
      }
      double y = lane_center(config, lane_before);
      double vy = 0.0, ay = 0.0;
      if (next_event < evs.size() && k >= evs[next_event].start_frame) {
        const ResolvedEvent& e = evs[next_event];
        const double t = (k - e.start_frame) * dt;
        const double T = e.duration_frames * dt;
        const double W = e.direction_sign * config.lane_width;
        y += quintic_lateral(t, T, W);
        vy = quintic_vel(t, T, W);
        ay = quintic_acc(t, T, W);
      }
      TrackFrame& f = track.frames[k];
      f.frame = k;
      f.state.x = start_x[v] + speed[v] * k / config.frame_rate;
      f.state.y = y;
      f.state.vx = speed[v];
      f.state.vy = vy;
      f.state.ax = 0.0;
      f.state.ay = ay;
      f.lane_id = rec.layout.lane_ids[nearest_lane_index(config, y)];
    }
  }

  ingest::ensure_neighbors(rec);
  rec.has_neighbor_columns = true;
  return rec;
}

std::vector<LaneChangeEvent> random_events(const ScenarioConfig& config, int count,
                                           std::uint64_t seed) {
  if (config.vehicle_count <= 0 && count > 0)
    throw ValidationError("random_events needs at least one vehicle");
  const int frames = config.total_frames();
  const int min_dur = static_cast<int>(std::lround(2.0 * config.frame_rate));
  const int max_dur = static_cast<int>(std::lround(6.0 * config.frame_rate));
  const int settle = static_cast<int>(std::lround(config.frame_rate));  // 1 s between events

  Rng rng(seed);
  std::vector<int> lane(config.vehicle_count);
  for (int v = 0; v < config.vehicle_count; ++v) lane[v] = v % config.lane_count;
  std::vector<int> next_free(config.vehicle_count, 0);

  std::vector<LaneChangeEvent> out;
  out.reserve(count);
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 1000 * (count + 1))
      throw ValidationError("could not place the requested number of events");
    const int v = static_cast<int>(rng.below(config.vehicle_count));
    const int dur = min_dur + static_cast<int>(rng.below(max_dur - min_dur + 1));
    const int latest = frames - dur;
    if (next_free[v] > latest) continue;
    const int start = next_free[v] + static_cast<int>(rng.below(latest - next_free[v] + 1));
    const bool can_left = lane[v] > 0;
    const bool can_right = lane[v] < config.lane_count - 1;
    if (!can_left && !can_right) continue;
    Direction dir;
    if (can_left && can_right)
      dir = rng.below(2) == 0 ? Direction::Left : Direction::Right;
    else
      dir = can_left ? Direction::Left : Direction::Right;
    out.push_back({v, start, dir, dur});
    lane[v] += dir == Direction::Left ? -1 : +1;
    next_free[v] = start + dur + settle;
  }
  return out;
}

}  // namespace lcf::synthgen
