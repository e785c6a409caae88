#include "lcf/ingest.hpp"
#include "lcf/pipeline.hpp"
#include "lcf/synthgen.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lcf;

namespace {

// salts for the streams derived from the data seed
constexpr std::uint64_t kSplitSalt = 0x51;
constexpr std::uint64_t kBalanceSalt = 0xba;
constexpr std::uint64_t kBalanceTrainSalt = 0xbb;
constexpr std::uint64_t kBalanceTestSalt = 0xbc;
constexpr std::uint64_t kEventSalt = 0xe7;

std::string fnv1a64_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct RunConfig {
  fs::path data_dir = "out/recording";
  fs::path out_dir = "out";
  double horizon_s = 1.0;
  std::string workflow = "e2e";  // or "multi-l"
  features::SplitMode split_mode = features::SplitMode::ByTrack;
  bool balance_after_split = false;
  int threads = 1;
  std::uint64_t seed_data = 1, seed_init = 2, seed_train = 3, seed_importance = 4;

  synthgen::ScenarioConfig scenario;
  int random_events = 0;

  seqnet::NetworkConfig network;
  seqnet::RmsPropOptions rmsprop;
  seqnet::Precision precision = seqnet::Precision::F64;
  double missing_dp = features::kMissingNeighborDp;
  int importance_top_k = 15;
  int timing_repetitions = 3;

  std::string hash;  // over the canonical config dump
};

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("bad config JSON: " + std::string(e.what()));
  }

  RunConfig cfg;
  cfg.hash = fnv1a64_hex(j.dump());
  if (j.contains("dataDir")) cfg.data_dir = j.at("dataDir").get<std::string>();
  if (j.contains("outDir")) cfg.out_dir = j.at("outDir").get<std::string>();
  cfg.horizon_s = j.value("horizonS", cfg.horizon_s);
  cfg.workflow = j.value("workflow", cfg.workflow);
  if (cfg.workflow != "e2e" && cfg.workflow != "multi-l")
    throw ValidationError("workflow must be 'e2e' or 'multi-l'");
  if (j.contains("splitMode"))
    cfg.split_mode = features::split_mode_from_name(j.at("splitMode").get<std::string>());
  cfg.balance_after_split = j.value("balanceAfterSplit", false);
  cfg.threads = j.value("threads", 1);
  cfg.missing_dp = j.value("missingNeighborDp", cfg.missing_dp);
  cfg.importance_top_k = j.value("importanceTopK", cfg.importance_top_k);
  cfg.timing_repetitions = j.value("timingRepetitions", cfg.timing_repetitions);

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    cfg.seed_data = s.value("data", cfg.seed_data);
    cfg.seed_init = s.value("init", cfg.seed_init);
    cfg.seed_train = s.value("train", cfg.seed_train);
    cfg.seed_importance = s.value("importance", cfg.seed_importance);
  }

  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    auto& sc = cfg.scenario;
    sc.lane_count = s.value("laneCount", sc.lane_count);
    sc.lane_width = s.value("laneWidth", sc.lane_width);
    sc.frame_rate = s.value("frameRate", sc.frame_rate);
    sc.duration_s = s.value("durationS", sc.duration_s);
    sc.vehicle_count = s.value("vehicleCount", sc.vehicle_count);
    sc.speed_min = s.value("speedMin", sc.speed_min);
    sc.speed_max = s.value("speedMax", sc.speed_max);
    sc.seed = s.value("seed", sc.seed);
    cfg.random_events = s.value("randomEvents", 0);
    if (s.contains("events"))
      for (const json& e : s.at("events"))
        sc.events.push_back({e.at("vehicle").get<int>(), e.at("startFrame").get<int>(),
                             synthgen::direction_from_name(e.at("direction").get<std::string>()),
                             e.value("durationFrames", 0)});
  }

  if (j.contains("network")) {
    const json& n = j.at("network");
    auto& net = cfg.network;
    net.input_size = n.value("inputSize", net.input_size);
    net.hidden_size = n.value("hiddenSize", net.hidden_size);
    net.num_layers = n.value("numLayers", net.num_layers);
    net.dropout = n.value("dropout", net.dropout);
    net.output_size = n.value("outputSize", net.output_size);
    if (n.contains("sequenceMode"))
      net.sequence_mode = seqnet::sequence_mode_from_name(n.at("sequenceMode").get<std::string>());
    net.epochs = n.value("epochs", net.epochs);
    net.batch_size = n.value("batchSize", net.batch_size);
    net.seed = n.value("seed", net.seed);
    cfg.rmsprop.learning_rate = n.value("learningRate", cfg.rmsprop.learning_rate);
    cfg.rmsprop.alpha = n.value("alpha", cfg.rmsprop.alpha);
    cfg.rmsprop.epsilon = n.value("epsilon", cfg.rmsprop.epsilon);
    const std::string prec = n.value("serializePrecision", "f64");
    if (prec != "f64" && prec != "f32")
      throw ValidationError("serializePrecision must be f64 or f32");
    cfg.precision = prec == "f64" ? seqnet::Precision::F64 : seqnet::Precision::F32;
  }
  return cfg;
}

json seeds_json(const RunConfig& cfg) {
  return {{"data", cfg.seed_data},
          {"init", cfg.seed_init},
          {"train", cfg.seed_train},
          {"importance", cfg.seed_importance}};
}

json artifact_stamp(const RunConfig& cfg) {
  return {{"configHash", cfg.hash}, {"seeds", seeds_json(cfg)}};
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

json class_counts_json(const std::vector<features::SampleWindow>& samples) {
  std::array<long, 3> counts{};
  for (const auto& s : samples) counts[static_cast<int>(s.label)]++;
  return {{"LCL", counts[0]}, {"LK", counts[1]}, {"LCR", counts[2]}};
}

seqnet::FitOptions fit_options(const RunConfig& cfg) {
  seqnet::FitOptions opt;
  opt.init_seed = cfg.seed_init;
  opt.train_seed = cfg.seed_train;
  opt.rmsprop = cfg.rmsprop;
  return opt;
}

Recording load_recording(const RunConfig& cfg) {
  return ingest::parse_recording(cfg.data_dir / "tracks.csv",
                                 cfg.data_dir / "recordingMeta.json");
}

std::vector<features::SampleWindow> load_samples(const RunConfig& cfg) {
  return features::read_samples(cfg.out_dir / "samples.csv");
}

// prepare/train/eval all re-derive the same split from the data seed, so the
// samples file needs no split column.
features::DatasetSplit derive_split(const RunConfig& cfg,
                                    const std::vector<features::SampleWindow>& samples) {
  features::DatasetSplit split = features::split(
      samples, derive_seed(cfg.seed_data, kSplitSalt), cfg.split_mode);
  if (cfg.balance_after_split) {
    split.train =
        features::balance_classes(split.train, derive_seed(cfg.seed_data, kBalanceTrainSalt));
    split.test =
        features::balance_classes(split.test, derive_seed(cfg.seed_data, kBalanceTestSalt));
  }
  return split;
}

void check_feature_version(const json& stats, const seqnet::NetworkParams& model) {
  const int samples_version = stats.at("featureOrderingVersion").get<int>();
  if (samples_version != model.feature_ordering_version)
    throw ValidationError("samples feature ordering version " +
                          std::to_string(samples_version) + " does not match the model's " +
                          std::to_string(model.feature_ordering_version));
}

int cmd_synth(const RunConfig& cfg, const std::string& out_override) {
  synthgen::ScenarioConfig scenario = cfg.scenario;
  if (cfg.random_events > 0) {
    const auto extra = synthgen::random_events(scenario, cfg.random_events,
                                               derive_seed(scenario.seed, kEventSalt));
    scenario.events.insert(scenario.events.end(), extra.begin(), extra.end());
  }
  const Recording rec = synthgen::generate_scenario(scenario);
  const fs::path dir = out_override.empty() ? cfg.data_dir : fs::path(out_override);
  ingest::write_recording(rec, dir, artifact_stamp(cfg));
  std::cout << "wrote " << (dir / "tracks.csv").string() << " (" << rec.tracks.size()
            << " tracks, " << scenario.total_frames() << " frames, "
            << scenario.events.size() << " events)\n";
  return 0;
}

int cmd_prepare(const RunConfig& cfg) {
  Recording rec = load_recording(cfg);
  ingest::ensure_neighbors(rec);

  features::WindowOptions opts{cfg.missing_dp};
  const auto extracted = features::extract_samples(rec, cfg.horizon_s, opts, cfg.threads);
  const json counts_before = class_counts_json(extracted);

  std::vector<features::SampleWindow> samples = extracted;
  if (!cfg.balance_after_split)
    samples = features::balance_classes(samples, derive_seed(cfg.seed_data, kBalanceSalt));

  fs::create_directories(cfg.out_dir);
  features::write_samples(samples, cfg.out_dir / "samples.csv");

  const features::DatasetSplit split = derive_split(cfg, samples);

  // slot occupancy over the whole recording
  std::array<long, kNeighborSlots> occupied{};
  long rows = 0;
  for (const Track& track : rec.tracks)
    for (const TrackFrame& f : track.frames) {
      ++rows;
      for (int s = 0; s < kNeighborSlots; ++s)
        if (f.neighbors[s] != 0) ++occupied[s];
    }
  json occupancy;
  for (int s = 0; s < kNeighborSlots; ++s)
    occupancy[slot_name(static_cast<NeighborSlot>(s))] =
        rows > 0 ? static_cast<double>(occupied[s]) / static_cast<double>(rows) : 0.0;

  json stats = artifact_stamp(cfg);
  stats["featureOrderingVersion"] = features::kFeatureOrderingVersion;
  stats["recordingId"] = rec.id;
  stats["horizonS"] = cfg.horizon_s;
  stats["splitMode"] = features::split_mode_name(cfg.split_mode);
  stats["balanceAfterSplit"] = cfg.balance_after_split;
  stats["classCountsExtracted"] = counts_before;
  stats["classCountsWritten"] = class_counts_json(samples);
  stats["trainClassCounts"] = class_counts_json(split.train);
  stats["testClassCounts"] = class_counts_json(split.test);
  stats["trainCount"] = split.train.size();
  stats["testCount"] = split.test.size();
  stats["slotOccupancy"] = occupancy;
  if (!split.train.empty())
    stats["normalization"] = features::normalization_to_json(
        features::fit_normalization(features::feature_matrix(split.train)));
  write_json(stats, cfg.out_dir / "samplesStats.json");

  std::cout << "wrote " << (cfg.out_dir / "samples.csv").string() << " ("
            << samples.size() << " samples; train " << split.train.size() << ", test "
            << split.test.size() << ")\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const auto samples = load_samples(cfg);
  const features::DatasetSplit split = derive_split(cfg, samples);
  const json meta = artifact_stamp(cfg);

  if (cfg.workflow == "e2e") {
    seqnet::NetworkConfig net = cfg.network;
    net.output_size = 3;
    const seqnet::FitResult result = pipeline::train_e2e(split, net, fit_options(cfg));
    seqnet::save_model(result.params, cfg.out_dir / "model_e2e.lcfm", cfg.precision, meta);
    seqnet::write_history_csv(result.history, cfg.out_dir / "history_e2e.csv");
    std::cout << "trained e2e model on " << result.train_sample_count << " samples; final "
              << "loss " << result.history.back().mean_loss << ", train accuracy "
              << result.history.back().train_accuracy << '\n';
  } else {
    const pipeline::CascadeTraining result =
        pipeline::train_cascade(split, cfg.network, fit_options(cfg));
    seqnet::save_model(result.model.model1, cfg.out_dir / "model1.lcfm", cfg.precision, meta);
    seqnet::save_model(result.model.model2, cfg.out_dir / "model2.lcfm", cfg.precision, meta);
    seqnet::write_history_csv(result.history1, cfg.out_dir / "history_model1.csv");
    seqnet::write_history_csv(result.history2, cfg.out_dir / "history_model2.csv");
    std::cout << "trained cascade: model1 on " << result.model1_train_count
              << " samples, model2 on " << result.model2_train_count << " samples\n";
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  const auto samples = load_samples(cfg);
  const json stats = read_json(cfg.out_dir / "samplesStats.json");
  const features::DatasetSplit split = derive_split(cfg, samples);

  pipeline::BatchDecider decider;
  if (cfg.workflow == "e2e") {
    const auto loaded = seqnet::load_model(cfg.out_dir / "model_e2e.lcfm");
    check_feature_version(stats, loaded.params);
    decider = pipeline::e2e_decider(loaded.params);
  } else {
    const auto m1 = seqnet::load_model(cfg.out_dir / "model1.lcfm");
    const auto m2 = seqnet::load_model(cfg.out_dir / "model2.lcfm");
    check_feature_version(stats, m1.params);
    check_feature_version(stats, m2.params);
    decider = pipeline::cascade_decider({m1.params, m2.params});
  }

  const pipeline::MetricsReport report =
      pipeline::evaluate(decider, split.test, pipeline::Projection::ThreeClass, cfg.threads);

  json metrics = pipeline::metrics_to_json(report, false);
  metrics.update(artifact_stamp(cfg));
  metrics["workflow"] = cfg.workflow;
  write_json(metrics, cfg.out_dir / "metrics.json");
  pipeline::write_confusion_csv(report, cfg.out_dir / "confusion.csv");

  // timing lives in its own artifact so determinism checks can ignore it
  json timing = artifact_stamp(cfg);
  timing["meanInferenceSeconds"] = report.mean_inference_seconds;
  write_json(timing, cfg.out_dir / "timing.json");

  std::cout << "accuracy " << report.accuracy << ", macro F1 " << report.macro_f1 << " on "
            << report.sample_count << " test samples\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg, int vehicle, int frame, bool timeline) {
  const Recording rec = [&] {
    Recording r = load_recording(cfg);
    ingest::ensure_neighbors(r);
    return r;
  }();

  pipeline::ProbPredictor predictor;
  int version = 0;
  if (cfg.workflow == "e2e") {
    const auto loaded = seqnet::load_model(cfg.out_dir / "model_e2e.lcfm");
    version = loaded.params.feature_ordering_version;
    predictor = pipeline::e2e_prob_predictor(loaded.params);
  } else {
    const auto m1 = seqnet::load_model(cfg.out_dir / "model1.lcfm");
    const auto m2 = seqnet::load_model(cfg.out_dir / "model2.lcfm");
    version = m1.params.feature_ordering_version;
    predictor = pipeline::cascade_prob_predictor({m1.params, m2.params});
  }
  if (version != features::kFeatureOrderingVersion)
    throw ValidationError("model feature ordering version does not match this build");

  const features::WindowOptions opts{cfg.missing_dp};
  const auto names = pipeline::projection_class_names(pipeline::Projection::ThreeClass);

  if (timeline) {
    const auto series =
        pipeline::prediction_timeline(predictor, rec, vehicle, cfg.horizon_s, opts);
    const fs::path path = cfg.out_dir / ("timeline_v" + std::to_string(vehicle) + ".csv");
    fs::create_directories(cfg.out_dir);
    pipeline::write_timeline_csv(series, names, path, "configHash=" + cfg.hash);
    std::cout << "wrote " << path.string() << " (" << series.size() << " points)\n";
    return 0;
  }

  const auto window = features::build_window(rec, vehicle, frame, opts);
  if (!window)
    throw ValidationError("vehicle " + std::to_string(vehicle) +
                          " has no full observation window at frame " + std::to_string(frame));
  const seqnet::Prediction pred = predictor(*window);
  std::cout << names[static_cast<std::size_t>(pred.cls)] << " probabilities";
  for (Eigen::Index i = 0; i < pred.probabilities.size(); ++i)
    std::cout << ' ' << names[static_cast<std::size_t>(i)] << '='
              << pred.probabilities[i];
  std::cout << '\n';
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  const auto samples = load_samples(cfg);
  const features::DatasetSplit split = derive_split(cfg, samples);
  const json meta = artifact_stamp(cfg);

  seqnet::NetworkConfig e2e_net = cfg.network;
  e2e_net.output_size = 3;
  const seqnet::FitResult e2e = pipeline::train_e2e(split, e2e_net, fit_options(cfg));
  seqnet::save_model(e2e.params, cfg.out_dir / "model_e2e.lcfm", cfg.precision, meta);
  seqnet::write_history_csv(e2e.history, cfg.out_dir / "history_e2e.csv");

  const pipeline::CascadeTraining cascade =
      pipeline::train_cascade(split, cfg.network, fit_options(cfg));
  seqnet::save_model(cascade.model.model1, cfg.out_dir / "model1.lcfm", cfg.precision, meta);
  seqnet::save_model(cascade.model.model2, cfg.out_dir / "model2.lcfm", cfg.precision, meta);
  seqnet::write_history_csv(cascade.history1, cfg.out_dir / "history_model1.csv");
  seqnet::write_history_csv(cascade.history2, cfg.out_dir / "history_model2.csv");

  const auto e2e_report = pipeline::evaluate(pipeline::e2e_decider(e2e.params), split.test,
                                             pipeline::Projection::ThreeClass, cfg.threads);
  const auto ml_report = pipeline::evaluate(pipeline::cascade_decider(cascade.model),
                                            split.test, pipeline::Projection::ThreeClass,
                                            cfg.threads);

  const auto e2e_timing = pipeline::measure_inference(
      pipeline::e2e_prob_predictor(e2e.params), split.test, cfg.timing_repetitions);
  const auto ml_timing = pipeline::measure_inference(
      pipeline::cascade_prob_predictor(cascade.model), split.test, cfg.timing_repetitions);

  const long e2e_params = seqnet::param_count(e2e.params.config);
  const long ml_params = seqnet::param_count(cascade.model.model1.config) +
                         seqnet::param_count(cascade.model.model2.config);
  const auto e2e_size = fs::file_size(cfg.out_dir / "model_e2e.lcfm");
  const auto ml_size = fs::file_size(cfg.out_dir / "model1.lcfm") +
                       fs::file_size(cfg.out_dir / "model2.lcfm");

  json out = artifact_stamp(cfg);
  out["e2e"] = {{"accuracy", e2e_report.accuracy},
                {"macroF1", e2e_report.macro_f1},
                {"parameters", e2e_params},
                {"modelBytes", e2e_size},
                {"meanInferenceSeconds", e2e_timing.mean_seconds}};
  out["multiL"] = {{"accuracy", ml_report.accuracy},
                   {"macroF1", ml_report.macro_f1},
                   {"parameters", ml_params},
                   {"modelBytes", ml_size},
                   {"meanInferenceSeconds", ml_timing.mean_seconds}};
  write_json(out, cfg.out_dir / "compare.json");

  std::cout << std::left << std::setw(24) << "" << std::setw(14) << "Multi-L"
            << "E2E\n";
  std::cout << std::setw(24) << "Accuracy" << std::setw(14) << ml_report.accuracy
            << e2e_report.accuracy << '\n';
  std::cout << std::setw(24) << "Number of parameters" << std::setw(14) << ml_params
            << e2e_params << '\n';
  std::cout << std::setw(24) << "Model size (bytes)" << std::setw(14) << ml_size << e2e_size
            << '\n';
  std::cout << std::setw(24) << "Inference time (s)" << std::setw(14)
            << ml_timing.mean_seconds << e2e_timing.mean_seconds << '\n';
  return 0;
}

int cmd_importance(const RunConfig& cfg) {
  const auto samples = load_samples(cfg);
  const json stats = read_json(cfg.out_dir / "samplesStats.json");
  const features::DatasetSplit split = derive_split(cfg, samples);

  const auto loaded = seqnet::load_model(cfg.out_dir / "model_e2e.lcfm");
  check_feature_version(stats, loaded.params);

  const pipeline::ImportanceReport report = pipeline::permutation_importance(
      pipeline::e2e_decider(loaded.params), split.test, pipeline::Projection::ThreeClass,
      cfg.seed_importance, cfg.importance_top_k);
  pipeline::write_importance_csv(report, cfg.out_dir / "importance.csv");
  std::cout << "wrote " << (cfg.out_dir / "importance.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lane-change forecasting toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // lets `lcf <cmd> --config ...` reach the app-level option

  std::string config_path;
  app.add_option("--config", config_path, "run configuration JSON")->required();

  auto* synth = app.add_subcommand("synth", "generate a synthetic recording");
  std::string synth_out;
  synth->add_option("--out", synth_out, "recording output directory (default: dataDir)");

  auto* prepare = app.add_subcommand("prepare", "extract, label, balance and split samples");
  auto* train = app.add_subcommand("train", "train the configured workflow");
  auto* eval = app.add_subcommand("eval", "evaluate the trained workflow on the test split");

  auto* predict = app.add_subcommand("predict", "predict one window or a whole track");
  int vehicle = 0, frame = -1;
  bool timeline = false;
  predict->add_option("--vehicle", vehicle, "vehicle id")->required();
  predict->add_option("--frame", frame, "anchor frame for a single prediction");
  predict->add_flag("--timeline", timeline, "write a per-frame prediction series CSV");

  auto* compare = app.add_subcommand("compare", "train and compare E2E against Multi-L");
  auto* importance = app.add_subcommand("importance", "per-class permutation importance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 2;  // usage error
  }

  try {
    const RunConfig cfg = load_run_config(config_path);
    fs::create_directories(cfg.out_dir);
    if (synth->parsed()) return cmd_synth(cfg, synth_out);
    if (prepare->parsed()) return cmd_prepare(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_eval(cfg);
    if (predict->parsed()) {
      if (!timeline && frame < 0)
        throw ValidationError("predict needs --frame or --timeline");
      return cmd_predict(cfg, vehicle, frame, timeline);
    }
    if (compare->parsed()) return cmd_compare(cfg);
    if (importance->parsed()) return cmd_importance(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
