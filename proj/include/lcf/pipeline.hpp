#pragma once

#include "lcf/seqnet.hpp"

#include <functional>
#include <string>
#include <vector>

namespace lcf::pipeline {

// Lane-change detector followed by a direction classifier, both binary.
struct CascadeModel {
  seqnet::NetworkParams model1;  // LK -> 0, LC -> 1
  seqnet::NetworkParams model2;  // Left -> 0, Right -> 1
};

struct MetricsReport {
  Eigen::MatrixXi confusion;  // rows = true, cols = predicted
  std::vector<std::string> class_names;
  double accuracy = 0;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  std::size_t sample_count = 0;
  double mean_inference_seconds = 0;
};

// Macro-averaged metrics from a confusion matrix; per-class divisions by zero
// score 0 for that class.
MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion,
                                     std::vector<std::string> class_names = {});

// Batched decision function: one class per window column.
using BatchDecider = std::function<std::vector<int>(const Matrix& windows)>;
// Single-window prediction with probabilities, for timelines.
using ProbPredictor = std::function<seqnet::Prediction(const Vector& window)>;

BatchDecider e2e_decider(const seqnet::NetworkParams& model);
BatchDecider cascade_decider(const CascadeModel& cascade);
ProbPredictor e2e_prob_predictor(const seqnet::NetworkParams& model);
// Composite probabilities: p(LCL) = p1 (1-p2), p(LK) = 1-p1, p(LCR) = p1 p2.
ProbPredictor cascade_prob_predictor(const CascadeModel& cascade);

seqnet::FitResult train_e2e(const features::DatasetSplit& dataset,
                            seqnet::NetworkConfig config,
                            const seqnet::FitOptions& options = {});

struct CascadeTraining {
  CascadeModel model;
  std::vector<seqnet::EpochStats> history1, history2;
  std::size_t model1_train_count = 0;
  std::size_t model2_train_count = 0;
};

// Model 1 on all train samples with the LC/LK projection, re-balanced;
// model 2 on lane-change samples only with the Left/Right projection,
// re-balanced. Throws when the train split has no lane changes.
CascadeTraining train_cascade(const features::DatasetSplit& dataset,
                              seqnet::NetworkConfig config,
                              const seqnet::FitOptions& options = {});

// Model 1 says LK -> LK without evaluating model 2; otherwise model 2 picks
// LCL (class 0) or LCR (class 1).
Label cascade_predict(const CascadeModel& cascade, const Vector& window);

// How sample labels map onto model classes.
enum class Projection {
  ThreeClass,  // LCL 0, LK 1, LCR 2
  LaneChange,  // LK 0, LC 1 (cascade model 1)
  Direction,   // Left 0, Right 1 (cascade model 2)
};

std::vector<int> true_classes(const std::vector<features::SampleWindow>& samples,
                              Projection projection);
std::vector<std::string> projection_class_names(Projection projection);

MetricsReport evaluate(const BatchDecider& decider,
                       const std::vector<features::SampleWindow>& test,
                       Projection projection, int threads = 1);

struct TimingReport {
  double mean_seconds = 0;
  double stddev_seconds = 0;
  int repetitions = 0;
};

// Per-sample wall clock over eval-mode predictions, single threaded, after
// one untimed warm-up pass.
TimingReport measure_inference(const ProbPredictor& predictor,
                               const std::vector<features::SampleWindow>& samples,
                               int repetitions);

struct ImportanceEntry {
  std::string feature;
  double score = 0;
};

struct ImportanceReport {
  std::vector<std::string> class_names;
  // [class] -> ranked entries, scores non-increasing
  std::vector<std::vector<ImportanceEntry>> ranked;
  int top_k = 15;
};

// Permutation importance on per-class recall: importance(c, j) = recall_c
// minus recall_c after shuffling feature column j, averaged over `repeats`
// shuffles seeded by (seed, feature, repeat). Samples are canonically ordered
// first so the report does not depend on input order.
ImportanceReport permutation_importance(const BatchDecider& decider,
                                        const std::vector<features::SampleWindow>& samples,
                                        Projection projection, std::uint64_t seed,
                                        int top_k = 15, int repeats = 5);

struct TimelinePoint {
  int frame = 0;
  int predicted = 0;
  Vector probabilities;
  Label truth = Label::LK;
};

// Sliding prediction over every eligible anchor of one track.
std::vector<TimelinePoint> prediction_timeline(const ProbPredictor& predictor,
                                               const Recording& recording,
                                               int vehicle_id, double horizon_s,
                                               const features::WindowOptions& opts = {});

nlohmann::json metrics_to_json(const MetricsReport& report, bool include_timing);
void write_confusion_csv(const MetricsReport& report, const std::filesystem::path& path);
void write_importance_csv(const ImportanceReport& report, const std::filesystem::path& path);
void write_timeline_csv(const std::vector<TimelinePoint>& series,
                        const std::vector<std::string>& class_names,
                        const std::filesystem::path& path,
                        const std::string& comment = {});

}  // namespace lcf::pipeline
