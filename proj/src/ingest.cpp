#include "lcf/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace lcf::ingest {

namespace {

const char* kCanonicalColumns[] = {
    "frame", "id", "x", "y", "xVelocity", "yVelocity", "xAcceleration",
    "yAcceleration", "laneId"};

const char* kNeighborColumns[] = {
    "precedingId", "followingId", "leftPrecedingId", "leftAlongsideId",
    "leftFollowingId", "rightPrecedingId", "rightAlongsideId", "rightFollowingId"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(where + ": bad numeric value '" + s + "'");
  if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
  return v;
}

long parse_long(const std::string& s, const std::string& where) {
  long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(where + ": bad integer value '" + s + "'");
  return v;
}

struct ColumnMap {
  int column[9];            // canonical column -> csv index
  int neighbor[kNeighborSlots];  // slot -> csv index, -1 when absent
  bool has_neighbors = false;
  bool used_alias = false;
  bool has_extras = false;
};

ColumnMap map_header(const std::vector<std::string>& header) {
  std::unordered_map<std::string, int> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = static_cast<int>(i);

  ColumnMap map{};
  auto find = [&](const char* name, const char* alias) {
    auto it = index.find(name);
    if (it != index.end()) return std::pair<int, bool>{it->second, false};
    if (alias) {
      it = index.find(alias);
      if (it != index.end()) return std::pair<int, bool>{it->second, true};
    }
    throw ParseError(std::string("tracks header is missing column '") + name + "'");
  };

  static const char* kAliases[] = {nullptr, "trackId", "xCenter", "yCenter",
                                   nullptr, nullptr,   nullptr,   nullptr, nullptr};
  for (int i = 0; i < 9; ++i) {
    auto [col, aliased] = find(kCanonicalColumns[i], kAliases[i]);
    map.column[i] = col;
    map.used_alias |= aliased;
  }

  int present = 0;
  for (int s = 0; s < kNeighborSlots; ++s) {
    auto it = index.find(kNeighborColumns[s]);
    map.neighbor[s] = it == index.end() ? -1 : it->second;
    if (map.neighbor[s] >= 0) ++present;
  }
  if (present != 0 && present != kNeighborSlots)
    throw ParseError("neighbor id columns must be present as a full group or not at all");
  map.has_neighbors = present == kNeighborSlots;

  std::set<std::string> known;
  for (const char* c : kCanonicalColumns) known.insert(c);
  for (const char* c : kNeighborColumns) known.insert(c);
  known.insert({"trackId", "xCenter", "yCenter"});
  for (const auto& name : header)
    if (!known.count(name)) map.has_extras = true;
  return map;
}

}  // namespace

Recording parse_recording(const std::filesystem::path& tracks_path,
                          const std::filesystem::path& meta_path) {
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw ParseError("cannot open meta file: " + meta_path.string());
  nlohmann::json meta;
  try {
    meta_in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad meta JSON (" + meta_path.string() + "): " + e.what());
  }

  Recording rec;
  if (!meta.contains("frameRate") || !meta.contains("laneIdsLeftToRight") ||
      !meta.contains("drivingDirection"))
    throw ParseError("meta JSON needs frameRate, laneIdsLeftToRight, drivingDirection");
  rec.layout.frame_rate = meta.at("frameRate").get<double>();
  if (!(rec.layout.frame_rate > 0)) throw ValidationError("frameRate must be positive");
  rec.layout.lane_ids = meta.at("laneIdsLeftToRight").get<std::vector<int>>();
  std::set<int> unique_lanes(rec.layout.lane_ids.begin(), rec.layout.lane_ids.end());
  if (unique_lanes.size() != rec.layout.lane_ids.size())
    throw ValidationError("laneIdsLeftToRight contains duplicates");
  rec.layout.driving_direction = meta.at("drivingDirection").get<int>();
  if (rec.layout.driving_direction != 1 && rec.layout.driving_direction != -1)
    throw ValidationError("drivingDirection must be +1 or -1");
  rec.id = meta.value("id", tracks_path.stem().string());

  std::ifstream in(tracks_path);
  if (!in) throw ParseError("cannot open tracks file: " + tracks_path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("tracks file is empty (no header)");
  const ColumnMap cols = map_header(split_csv_line(line));

  if (meta.contains("source"))
    rec.source = source_from_name(meta.at("source").get<std::string>());
  else if (cols.used_alias)
    rec.source = SourceTag::ExidLike;
  else if (cols.has_extras)
    rec.source = SourceTag::HighdLike;

  std::map<int, Track> tracks;  // ordered by vehicle id
  std::set<std::pair<int, int>> seen;  // (vehicle, frame)
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = tracks_path.filename().string() + " line " + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    auto field = [&](int idx) -> const std::string& {
      if (idx < 0 || idx >= static_cast<int>(fields.size()))
        throw ParseError(where + ": too few columns");
      return fields[static_cast<std::size_t>(idx)];
    };

    TrackFrame f;
    f.frame = static_cast<int>(parse_long(field(cols.column[0]), where));
    const int vehicle_id = static_cast<int>(parse_long(field(cols.column[1]), where));
    f.state.x = parse_double(field(cols.column[2]), where);
    f.state.y = parse_double(field(cols.column[3]), where);
    f.state.vx = parse_double(field(cols.column[4]), where);
    f.state.vy = parse_double(field(cols.column[5]), where);
    f.state.ax = parse_double(field(cols.column[6]), where);
    f.state.ay = parse_double(field(cols.column[7]), where);
    f.lane_id = static_cast<int>(parse_long(field(cols.column[8]), where));
    if (rec.layout.index_of(f.lane_id) < 0)
      throw ValidationError(where + ": laneId " + std::to_string(f.lane_id) +
                            " is not in laneIdsLeftToRight");
    if (cols.has_neighbors)
      for (int s = 0; s < kNeighborSlots; ++s)
        f.neighbors[s] = static_cast<int>(parse_long(field(cols.neighbor[s]), where));

    if (!seen.insert({vehicle_id, f.frame}).second)
      throw ValidationError(where + ": duplicate (frame, vehicle id) row");
    Track& track = tracks[vehicle_id];
    track.vehicle_id = vehicle_id;
    if (!track.frames.empty() && f.frame <= track.frames.back().frame)
      throw ValidationError(where + ": frames of vehicle " + std::to_string(vehicle_id) +
                            " are not strictly increasing");
    track.frames.push_back(f);
  }

  rec.tracks.reserve(tracks.size());
  for (auto& [id, track] : tracks) rec.tracks.push_back(std::move(track));
  rec.has_neighbor_columns = cols.has_neighbors;

  if (cols.has_neighbors) {
    for (const Track& track : rec.tracks)
      for (const TrackFrame& f : track.frames)
        for (int s = 0; s < kNeighborSlots; ++s) {
          const int nb = f.neighbors[s];
          if (nb == 0) continue;
          const Track* other = rec.track_of(nb);
          if (!other || !other->at_frame(f.frame))
            throw ValidationError("neighbor id " + std::to_string(nb) +
                                  " is not present at frame " + std::to_string(f.frame));
        }
  }
  return rec;
}

void write_recording(const Recording& recording, const std::filesystem::path& dir,
                     const nlohmann::json& extra_meta) {
  std::filesystem::create_directories(dir);

  std::ofstream out(dir / "tracks.csv");
  if (!out) throw ParseError("cannot write " + (dir / "tracks.csv").string());
  for (int i = 0; i < 9; ++i) out << (i ? "," : "") << kCanonicalColumns[i];
  if (recording.has_neighbor_columns)
    for (const char* c : kNeighborColumns) out << ',' << c;
  out << '\n';
  for (const Track& track : recording.tracks) {
    for (const TrackFrame& f : track.frames) {
      out << f.frame << ',' << track.vehicle_id << ',' << format_double(f.state.x) << ','
          << format_double(f.state.y) << ',' << format_double(f.state.vx) << ','
          << format_double(f.state.vy) << ',' << format_double(f.state.ax) << ','
          << format_double(f.state.ay) << ',' << f.lane_id;
      if (recording.has_neighbor_columns)
        for (int s = 0; s < kNeighborSlots; ++s) out << ',' << f.neighbors[s];
      out << '\n';
    }
  }

  nlohmann::json meta = extra_meta;
  meta["frameRate"] = recording.layout.frame_rate;
  meta["laneIdsLeftToRight"] = recording.layout.lane_ids;
  meta["drivingDirection"] = recording.layout.driving_direction;
  meta["id"] = recording.id;
  meta["source"] = source_name(recording.source);
  std::ofstream meta_out(dir / "recordingMeta.json");
  meta_out << meta.dump(2) << '\n';
}

std::map<int, SlotMap> assign_neighbors(const Recording& recording, int frame) {
  struct Present {
    int vehicle_id;
    double s;  // longitudinal position in the driver's frame
    int lane_index;
  };
  std::vector<Present> present;
  for (const Track& track : recording.tracks) {
    const TrackFrame* f = track.at_frame(frame);
    if (!f) continue;
    present.push_back({track.vehicle_id, f->state.x * recording.layout.driving_direction,
                       recording.layout.index_of(f->lane_id)});
  }

  std::map<int, SlotMap> out;
  for (const Present& ego : present) {
    // slots[] is already in canonical NeighborSlot order: the same-lane pair,
    // then the left block (preceding, alongside, following), then the right.
    SlotMap slots{};
    // best |gap| per slot; candidates are scanned in vehicle-id order so
    // distance ties resolve to the lower id
    double best[kNeighborSlots];
    std::fill(std::begin(best), std::end(best), std::numeric_limits<double>::infinity());
    auto offer = [&](NeighborSlot slot, double distance, int vehicle_id) {
      const int s = static_cast<int>(slot);
      if (distance < best[s]) {
        best[s] = distance;
        slots[s] = vehicle_id;
      }
    };
    for (const Present& cand : present) {
      if (cand.vehicle_id == ego.vehicle_id) continue;
      const int dl = cand.lane_index - ego.lane_index;
      const double gap = cand.s - ego.s;
      if (dl == 0) {
        if (gap > 0)
          offer(NeighborSlot::Preceding, gap, cand.vehicle_id);
        else if (gap < 0)
          offer(NeighborSlot::Following, -gap, cand.vehicle_id);
      } else if (dl == -1 || dl == 1) {
        const bool left = dl == -1;
        if (std::abs(gap) <= kNominalVehicleLength)
          offer(left ? NeighborSlot::LeftAlongside : NeighborSlot::RightAlongside,
                std::abs(gap), cand.vehicle_id);
        else if (gap > 0)
          offer(left ? NeighborSlot::LeftPreceding : NeighborSlot::RightPreceding, gap,
                cand.vehicle_id);
        else
          offer(left ? NeighborSlot::LeftFollowing : NeighborSlot::RightFollowing, -gap,
                cand.vehicle_id);
      }
    }
    out[ego.vehicle_id] = slots;
  }
  return out;
}

void ensure_neighbors(Recording& recording) {
  if (recording.has_neighbor_columns) return;
  std::set<int> frames;
  for (const Track& track : recording.tracks)
    for (const TrackFrame& f : track.frames) frames.insert(f.frame);
  for (int frame : frames) {
    const auto assigned = assign_neighbors(recording, frame);
    for (Track& track : recording.tracks) {
      auto it = assigned.find(track.vehicle_id);
      if (it == assigned.end()) continue;
      auto fit = std::lower_bound(track.frames.begin(), track.frames.end(), frame,
                                  [](const TrackFrame& f, int key) { return f.frame < key; });
      if (fit != track.frames.end() && fit->frame == frame) fit->neighbors = it->second;
    }
  }
  recording.has_neighbor_columns = true;
}

}  // namespace lcf::ingest
