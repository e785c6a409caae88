#include "lcf/features.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

namespace lcf::features {

namespace {

double norm2(double dx, double dy) { return std::sqrt(dx * dx + dy * dy); }

void check_finite(const EgoState& s) {
  const double vals[] = {s.x, s.y, s.vx, s.vy, s.ax, s.ay};
  for (double v : vals)
    if (!std::isfinite(v)) throw ValidationError("non-finite vehicle state");
}

const char* kEgoAttrs[kEgoFeatures] = {"x", "y", "vx", "vy", "ax", "ay"};
const char* kSlotAttrs[kSlotFeatures] = {"dp", "dv", "da"};

int horizon_frames(const Recording& recording, double horizon_s) {
  const double frames = horizon_s * recording.layout.frame_rate;
  const double rounded = std::round(frames);
  if (std::abs(frames - rounded) > 1e-9 || rounded < 1)
    throw ValidationError("horizon does not map to a positive integer frame count");
  return static_cast<int>(rounded);
}

}  // namespace

double rel_dp(const EgoState& ego, const EgoState& sur) {
  check_finite(ego);
  check_finite(sur);
  return norm2(sur.x - ego.x, sur.y - ego.y);
}

double rel_dv(const EgoState& ego, const EgoState& sur) {
  check_finite(ego);
  check_finite(sur);
  return norm2(sur.vx - ego.vx, sur.vy - ego.vy);
}

double rel_da(const EgoState& ego, const EgoState& sur) {
  check_finite(ego);
  check_finite(sur);
  return norm2(sur.ax - ego.ax, sur.ay - ego.ay);
}

std::optional<Vector> build_window(const Recording& recording, int vehicle_id,
                                   int anchor_frame, const WindowOptions& opts) {
  const Track* track = recording.track_of(vehicle_id);
  if (!track) return std::nullopt;

  Vector out(kWindowFeatures);
  for (int t = 0; t < kWindowFrames; ++t) {
    const int frame = anchor_frame - (kWindowFrames - 1) + t;
    const TrackFrame* f = track->at_frame(frame);
    if (!f) return std::nullopt;  // missing history: skip signal
    double* row = out.data() + t * kFrameFeatures;
    row[0] = f->state.x;
    row[1] = f->state.y;
    row[2] = f->state.vx;
    row[3] = f->state.vy;
    row[4] = f->state.ax;
    row[5] = f->state.ay;
    for (int s = 0; s < kNeighborSlots; ++s) {
      double* slot = row + kEgoFeatures + s * kSlotFeatures;
      const int nb = f->neighbors[s];
      const TrackFrame* nf = nb ? (recording.track_of(nb)
                                       ? recording.track_of(nb)->at_frame(frame)
                                       : nullptr)
                                : nullptr;
      if (!nf) {
        slot[0] = opts.missing_dp;
        slot[1] = 0.0;
        slot[2] = 0.0;
      } else {
        slot[0] = rel_dp(f->state, nf->state);
        slot[1] = rel_dv(f->state, nf->state);
        slot[2] = rel_da(f->state, nf->state);
      }
    }
  }
  return out;
}

std::optional<Label> label_at_horizon(const Recording& recording, int vehicle_id,
                                      int anchor_frame, double horizon_s) {
  const Track* track = recording.track_of(vehicle_id);
  if (!track) return std::nullopt;
  const TrackFrame* now = track->at_frame(anchor_frame);
  const TrackFrame* then = track->at_frame(anchor_frame + horizon_frames(recording, horizon_s));
  if (!now || !then) return std::nullopt;  // track too short: skip signal
  const int from = recording.layout.index_of(now->lane_id);
  const int to = recording.layout.index_of(then->lane_id);
  if (to < from) return Label::LCL;
  if (to > from) return Label::LCR;
  return Label::LK;
}

std::vector<SampleWindow> extract_samples(const Recording& recording, double horizon_s,
                                          const WindowOptions& opts, int threads) {
  const auto extract_track = [&](const Track& track) {
    std::vector<SampleWindow> out;
    for (const TrackFrame& f : track.frames) {
      auto window = build_window(recording, track.vehicle_id, f.frame, opts);
      if (!window) continue;
      auto label = label_at_horizon(recording, track.vehicle_id, f.frame, horizon_s);
      if (!label) continue;
      out.push_back({std::move(*window), *label, recording.id, track.vehicle_id, f.frame,
                     horizon_s});
    }
    return out;
  };

  std::vector<std::vector<SampleWindow>> per_track(recording.tracks.size());
  if (threads <= 1 || recording.tracks.size() < 2) {
    for (std::size_t i = 0; i < recording.tracks.size(); ++i)
      per_track[i] = extract_track(recording.tracks[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    const int n = std::min<int>(threads, static_cast<int>(recording.tracks.size()));
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < recording.tracks.size();
             i = next.fetch_add(1))
          per_track[i] = extract_track(recording.tracks[i]);
      });
    for (auto& th : pool) th.join();
  }

  std::vector<SampleWindow> out;  // tracks are already sorted by vehicle id
  for (auto& chunk : per_track)
    for (auto& s : chunk) out.push_back(std::move(s));
  return out;
}

std::vector<std::size_t> balance_indices(const std::vector<Label>& labels,
                                         std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 3> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<int>(labels[i])].push_back(i);

  std::size_t min_count = labels.empty() ? 0 : SIZE_MAX;
  for (const auto& c : by_class) min_count = std::min(min_count, c.size());

  std::vector<std::size_t> kept;
  for (int c = 0; c < 3; ++c) {
    auto& idx = by_class[c];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    rng.shuffle(idx);
    idx.resize(min_count);
    kept.insert(kept.end(), idx.begin(), idx.end());
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<SampleWindow> balance_classes(const std::vector<SampleWindow>& samples,
                                          std::uint64_t seed) {
  std::vector<Label> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
  std::vector<SampleWindow> out;
  for (std::size_t i : balance_indices(labels, seed)) out.push_back(samples[i]);
  return out;
}

const char* split_mode_name(SplitMode mode) {
  return mode == SplitMode::ByTrack ? "by-track" : "by-sample";
}

SplitMode split_mode_from_name(const std::string& name) {
  if (name == "by-track") return SplitMode::ByTrack;
  if (name == "by-sample") return SplitMode::BySample;
  throw ValidationError("unknown split mode: " + name);
}

DatasetSplit split(const std::vector<SampleWindow>& samples, std::uint64_t seed,
                   SplitMode mode) {
  DatasetSplit out;
  const std::size_t n = samples.size();
  const std::size_t test_target = static_cast<std::size_t>(std::llround(0.2 * n));

  if (mode == SplitMode::BySample) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<bool> in_test(n, false);
    for (std::size_t i = 0; i < test_target; ++i) in_test[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i)
      (in_test[i] ? out.test : out.train).push_back(samples[i]);
    return out;
  }

  // by-track: whole (recording, vehicle) groups go to one side
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i)
    groups[{samples[i].recording_id, samples[i].vehicle_id}].push_back(i);
  std::vector<const std::vector<std::size_t>*> group_list;
  for (const auto& [key, idx] : groups) group_list.push_back(&idx);
  Rng rng(seed);
  rng.shuffle(group_list);

  std::vector<bool> in_test(n, false);
  std::size_t test_size = 0;
  for (const auto* group : group_list) {
    if (test_size >= test_target) break;
    // take the group if it moves the test side closer to the 20% target
    const auto target = static_cast<long long>(test_target);
    const auto with = static_cast<long long>(test_size + group->size());
    if (std::llabs(with - target) <= target - static_cast<long long>(test_size)) {
      for (std::size_t i : *group) in_test[i] = true;
      test_size += group->size();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    (in_test[i] ? out.test : out.train).push_back(samples[i]);
  return out;
}

std::string feature_name(int index) {
  if (index < 0 || index >= kWindowFeatures)
    throw std::out_of_range("feature index outside 0..149");
  const int frame = index / kFrameFeatures;
  const int within = index % kFrameFeatures;
  std::string name = "t" + std::to_string(frame) + "_";
  if (within < kEgoFeatures) return name + "ego_" + kEgoAttrs[within];
  const int slot = (within - kEgoFeatures) / kSlotFeatures;
  const int attr = (within - kEgoFeatures) % kSlotFeatures;
  return name + slot_name(static_cast<NeighborSlot>(slot)) + "_" + kSlotAttrs[attr];
}

int feature_index(const std::string& name) {
  const auto first = name.find('_');
  const auto second = name.find('_', first + 1);
  if (name.size() < 6 || name[0] != 't' || first == std::string::npos ||
      second == std::string::npos)
    throw ValidationError("bad feature name: " + name);
  const int frame = name[1] - '0';
  if (first != 2 || frame < 0 || frame >= kWindowFrames)
    throw ValidationError("bad feature name: " + name);
  const std::string entity = name.substr(first + 1, second - first - 1);
  const std::string attr = name.substr(second + 1);
  int within = -1;
  if (entity == "ego") {
    for (int i = 0; i < kEgoFeatures; ++i)
      if (attr == kEgoAttrs[i]) within = i;
  } else {
    for (int s = 0; s < kNeighborSlots; ++s)
      if (entity == slot_name(static_cast<NeighborSlot>(s)))
        for (int a = 0; a < kSlotFeatures; ++a)
          if (attr == kSlotAttrs[a]) within = kEgoFeatures + s * kSlotFeatures + a;
  }
  if (within < 0) throw ValidationError("bad feature name: " + name);
  return frame * kFrameFeatures + within;
}

Vector Normalization::apply(const Vector& window) const {
  return ((window - mean).array() / stddev.array()).matrix();
}

Matrix Normalization::apply(const Matrix& windows) const {
  return ((windows.colwise() - mean).array().colwise() / stddev.array()).matrix();
}

Normalization fit_normalization(const Matrix& train_windows) {
  if (train_windows.cols() == 0)
    throw ValidationError("cannot fit normalization on an empty set");
  Normalization norm;
  norm.mean = train_windows.rowwise().mean();
  const Matrix centered = train_windows.colwise() - norm.mean;
  norm.stddev = (centered.array().square().rowwise().mean()).sqrt().matrix();
  for (Eigen::Index i = 0; i < norm.stddev.size(); ++i)
    if (norm.stddev[i] < 1e-12) norm.stddev[i] = 1.0;  // constant feature
  return norm;
}

Matrix feature_matrix(const std::vector<SampleWindow>& samples) {
  Matrix out(kWindowFeatures, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = samples[i].features;
  return out;
}

void write_samples(const std::vector<SampleWindow>& samples,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (int i = 0; i < kWindowFeatures; ++i) out << feature_name(i) << ',';
  out << "label,recordingId,vehicleId,anchorFrame,horizonS\n";
  for (const SampleWindow& s : samples) {
    for (int i = 0; i < kWindowFeatures; ++i) out << format_double(s.features[i]) << ',';
    out << label_name(s.label) << ',' << s.recording_id << ',' << s.vehicle_id << ','
        << s.anchor_frame << ',' << format_double(s.horizon_s) << '\n';
  }
}

std::vector<SampleWindow> read_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open samples file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("samples file is empty");

  // header must be exactly the canonical ordering
  std::vector<std::string> header;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      header.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  header.push_back(cur);
  if (header.size() != kWindowFeatures + 5)
    throw ParseError("samples header has wrong column count");
  for (int i = 0; i < kWindowFeatures; ++i)
    if (header[i] != feature_name(i))
      throw ParseError("samples column " + std::to_string(i) + " is '" + header[i] +
                       "', expected '" + feature_name(i) + "'");

  std::vector<SampleWindow> samples;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::string where = path.filename().string() + " line " + std::to_string(line_no);
    SampleWindow s;
    s.features.resize(kWindowFeatures);
    const char* p = line.data();
    const char* end = line.data() + line.size();
    if (!line.empty() && line.back() == '\r') --end;
    auto next_field = [&](bool last) {
      const char* stop = last ? end : std::find(p, end, ',');
      if (!last && stop == end) throw ParseError(where + ": too few columns");
      std::string field(p, stop);
      p = last ? end : stop + 1;
      return field;
    };
    for (int i = 0; i < kWindowFeatures; ++i) {
      const std::string f = next_field(false);
      auto res = std::from_chars(f.data(), f.data() + f.size(), s.features[i]);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
        throw ParseError(where + ": bad numeric value '" + f + "'");
    }
    s.label = label_from_name(next_field(false));
    s.recording_id = next_field(false);
    s.vehicle_id = std::stoi(next_field(false));
    s.anchor_frame = std::stoi(next_field(false));
    s.horizon_s = std::stod(next_field(true));
    samples.push_back(std::move(s));
  }
  return samples;
}

nlohmann::json normalization_to_json(const Normalization& norm) {
  std::vector<double> mean(norm.mean.data(), norm.mean.data() + norm.mean.size());
  std::vector<double> stddev(norm.stddev.data(), norm.stddev.data() + norm.stddev.size());
  return {{"mean", mean}, {"stddev", stddev}};
}

Normalization normalization_from_json(const nlohmann::json& j) {
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto stddev = j.at("stddev").get<std::vector<double>>();
  if (mean.size() != stddev.size()) throw ValidationError("normalization arrays disagree");
  Normalization norm;
  norm.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  norm.stddev =
      Eigen::Map<const Vector>(stddev.data(), static_cast<Eigen::Index>(stddev.size()));
  return norm;
}

}  // namespace lcf::features
