#include "lcf/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

namespace lcf::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Downsample class 1/0 indices to the smaller count; deterministic per seed.
std::vector<std::size_t> balance_binary(const std::vector<int>& classes,
                                        std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i)
    by_class[static_cast<std::size_t>(classes[i])].push_back(i);
  const std::size_t min_count = std::min(by_class[0].size(), by_class[1].size());
  std::vector<std::size_t> kept;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c), 0xb1));
    rng.shuffle(by_class[c]);
    by_class[c].resize(min_count);
    kept.insert(kept.end(), by_class[c].begin(), by_class[c].end());
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<double> per_class_recall(const std::vector<int>& decisions,
                                     const std::vector<int>& truth, int classes) {
  std::vector<double> tp(classes, 0), count(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    count[truth[i]] += 1;
    if (decisions[i] == truth[i]) tp[truth[i]] += 1;
  }
  std::vector<double> recall(classes, 0.0);
  for (int c = 0; c < classes; ++c) recall[c] = count[c] > 0 ? tp[c] / count[c] : 0.0;
  return recall;
}

}  // namespace

MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion,
                                     std::vector<std::string> class_names) {
  const Eigen::Index k = confusion.rows();
  if (confusion.cols() != k || k < 2)
    throw std::invalid_argument("confusion matrix must be square, at least 2x2");

  MetricsReport report;
  report.confusion = confusion;
  report.class_names = std::move(class_names);
  if (report.class_names.empty())
    for (Eigen::Index c = 0; c < k; ++c)
      report.class_names.push_back("class" + std::to_string(c));

  const long total = confusion.sum();
  report.sample_count = static_cast<std::size_t>(total);
  report.accuracy = total > 0 ? static_cast<double>(confusion.diagonal().sum()) / total : 0.0;

  double psum = 0, rsum = 0, fsum = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    const double tp = confusion(c, c);
    const double col = confusion.col(c).sum();
    const double row = confusion.row(c).sum();
    const double precision = col > 0 ? tp / col : 0.0;  // division by zero scores 0
    const double recall = row > 0 ? tp / row : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    psum += precision;
    rsum += recall;
    fsum += f1;
  }
  report.macro_precision = psum / static_cast<double>(k);
  report.macro_recall = rsum / static_cast<double>(k);
  report.macro_f1 = fsum / static_cast<double>(k);
  return report;
}

BatchDecider e2e_decider(const seqnet::NetworkParams& model) {
  return [model](const Matrix& windows) { return seqnet::predict_batch(model, windows); };
}

BatchDecider cascade_decider(const CascadeModel& cascade) {
  return [cascade](const Matrix& windows) {
    const std::vector<int> stage1 = seqnet::predict_batch(cascade.model1, windows);
    std::vector<Eigen::Index> lc_cols;
    for (Eigen::Index j = 0; j < windows.cols(); ++j)
      if (stage1[static_cast<std::size_t>(j)] == 1) lc_cols.push_back(j);

    std::vector<int> out(stage1.size(), static_cast<int>(Label::LK));
    if (!lc_cols.empty()) {
      // model 2 sees only detected lane changes
      Matrix sub(windows.rows(), static_cast<Eigen::Index>(lc_cols.size()));
      for (std::size_t i = 0; i < lc_cols.size(); ++i) sub.col(i) = windows.col(lc_cols[i]);
      const std::vector<int> stage2 = seqnet::predict_batch(cascade.model2, sub);
      for (std::size_t i = 0; i < lc_cols.size(); ++i)
        out[static_cast<std::size_t>(lc_cols[i])] = stage2[i] == 0
                                                        ? static_cast<int>(Label::LCL)
                                                        : static_cast<int>(Label::LCR);
    }
    return out;
  };
}

ProbPredictor e2e_prob_predictor(const seqnet::NetworkParams& model) {
  return [model](const Vector& window) { return seqnet::predict(model, window); };
}

ProbPredictor cascade_prob_predictor(const CascadeModel& cascade) {
  return [cascade](const Vector& window) {
    const seqnet::Prediction p1 = seqnet::predict(cascade.model1, window);
    const seqnet::Prediction p2 = seqnet::predict(cascade.model2, window);
    seqnet::Prediction out;
    out.probabilities = Vector(3);
    out.probabilities << p1.probabilities[1] * p2.probabilities[0], p1.probabilities[0],
        p1.probabilities[1] * p2.probabilities[1];
    out.cls = p1.cls == 0 ? static_cast<int>(Label::LK)
                          : (p2.cls == 0 ? static_cast<int>(Label::LCL)
                                         : static_cast<int>(Label::LCR));
    return out;
  };
}

std::vector<int> true_classes(const std::vector<features::SampleWindow>& samples,
                              Projection projection) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    switch (projection) {
      case Projection::ThreeClass:
        out.push_back(static_cast<int>(s.label));
        break;
      case Projection::LaneChange:
        out.push_back(lane_change_class(s.label));
        break;
      case Projection::Direction:
        if (!is_lane_change(s.label))
          throw ValidationError("direction projection needs lane-change samples only");
        out.push_back(direction_class(s.label));
        break;
    }
  }
  return out;
}

std::vector<std::string> projection_class_names(Projection projection) {
  switch (projection) {
    case Projection::ThreeClass: return {"LCL", "LK", "LCR"};
    case Projection::LaneChange: return {"LK", "LC"};
    case Projection::Direction: return {"Left", "Right"};
  }
  return {};
}

seqnet::FitResult train_e2e(const features::DatasetSplit& dataset,
                            seqnet::NetworkConfig config,
                            const seqnet::FitOptions& options) {
  if (dataset.train.empty()) throw ValidationError("train_e2e: empty train split");
  config.output_size = 3;
  const Matrix X = features::feature_matrix(dataset.train);
  return seqnet::fit(X, true_classes(dataset.train, Projection::ThreeClass), config, options);
}

CascadeTraining train_cascade(const features::DatasetSplit& dataset,
                              seqnet::NetworkConfig config,
                              const seqnet::FitOptions& options) {
  if (dataset.train.empty()) throw ValidationError("train_cascade: empty train split");
  config.output_size = 1;

  // model 1: all train samples, LC/LK projection, re-balanced
  const std::vector<int> lc_classes = true_classes(dataset.train, Projection::LaneChange);
  const auto kept1 = balance_binary(lc_classes, derive_seed(options.train_seed, 0, 0xca));
  Matrix x1(features::kWindowFeatures, static_cast<Eigen::Index>(kept1.size()));
  std::vector<int> y1(kept1.size());
  for (std::size_t i = 0; i < kept1.size(); ++i) {
    x1.col(static_cast<Eigen::Index>(i)) = dataset.train[kept1[i]].features;
    y1[i] = lc_classes[kept1[i]];
  }

  // model 2: lane-change samples only, Left/Right projection, re-balanced
  std::vector<features::SampleWindow> lc_samples;
  for (const auto& s : dataset.train)
    if (is_lane_change(s.label)) lc_samples.push_back(s);
  if (lc_samples.empty())
    throw ValidationError("train_cascade: no lane-change samples to train model 2");
  const std::vector<int> dir_classes = true_classes(lc_samples, Projection::Direction);
  const auto kept2 = balance_binary(dir_classes, derive_seed(options.train_seed, 1, 0xca));
  if (kept2.empty())
    throw ValidationError("train_cascade: one lane-change direction is missing");
  Matrix x2(features::kWindowFeatures, static_cast<Eigen::Index>(kept2.size()));
  std::vector<int> y2(kept2.size());
  for (std::size_t i = 0; i < kept2.size(); ++i) {
    x2.col(static_cast<Eigen::Index>(i)) = lc_samples[kept2[i]].features;
    y2[i] = dir_classes[kept2[i]];
  }

  seqnet::FitOptions opt1 = options;
  opt1.init_seed = derive_seed(options.init_seed, 1, 0x17);
  opt1.train_seed = derive_seed(options.train_seed, 1, 0x17);
  seqnet::FitOptions opt2 = options;
  opt2.init_seed = derive_seed(options.init_seed, 2, 0x17);
  opt2.train_seed = derive_seed(options.train_seed, 2, 0x17);

  seqnet::FitResult fit1 = seqnet::fit(x1, y1, config, opt1);
  seqnet::FitResult fit2 = seqnet::fit(x2, y2, config, opt2);

  CascadeTraining out;
  out.model = CascadeModel{std::move(fit1.params), std::move(fit2.params)};
  out.history1 = std::move(fit1.history);
  out.history2 = std::move(fit2.history);
  out.model1_train_count = kept1.size();
  out.model2_train_count = kept2.size();
  return out;
}

Label cascade_predict(const CascadeModel& cascade, const Vector& window) {
  const seqnet::Prediction p1 = seqnet::predict(cascade.model1, window);
  if (p1.cls == 0) return Label::LK;  // model 2 not evaluated
  const seqnet::Prediction p2 = seqnet::predict(cascade.model2, window);
  return p2.cls == 0 ? Label::LCL : Label::LCR;
}

MetricsReport evaluate(const BatchDecider& decider,
                       const std::vector<features::SampleWindow>& test,
                       Projection projection, int threads) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  const std::vector<int> truth = true_classes(test, projection);
  const std::vector<std::string> names = projection_class_names(projection);
  const int k = static_cast<int>(names.size());
  const Matrix X = features::feature_matrix(test);

  std::vector<int> decisions(test.size());
  const auto t0 = Clock::now();
  if (threads <= 1) {
    decisions = decider(X);
  } else {
    const int n = std::min<int>(threads, static_cast<int>(test.size()));
    std::vector<std::thread> pool;
    const std::size_t chunk = (test.size() + n - 1) / static_cast<std::size_t>(n);
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&, w] {
        const std::size_t begin = static_cast<std::size_t>(w) * chunk;
        const std::size_t end = std::min(test.size(), begin + chunk);
        if (begin >= end) return;
        const Matrix sub = X.middleCols(static_cast<Eigen::Index>(begin),
                                        static_cast<Eigen::Index>(end - begin));
        const std::vector<int> part = decider(sub);
        std::copy(part.begin(), part.end(), decisions.begin() + static_cast<long>(begin));
      });
    for (auto& th : pool) th.join();
  }
  const double elapsed = seconds_since(t0);

  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (decisions[i] < 0 || decisions[i] >= k)
      throw std::invalid_argument("decider produced a class out of range");
    confusion(truth[i], decisions[i]) += 1;
  }
  MetricsReport report = metrics_from_confusion(confusion, names);
  report.mean_inference_seconds = elapsed / static_cast<double>(test.size());
  return report;
}

TimingReport measure_inference(const ProbPredictor& predictor,
                               const std::vector<features::SampleWindow>& samples,
                               int repetitions) {
  if (repetitions < 1) throw ValidationError("measure_inference: repetitions must be >= 1");
  if (samples.empty()) throw ValidationError("measure_inference: empty sample set");

  for (const auto& s : samples) (void)predictor(s.features);  // warm-up, untimed

  std::vector<double> times;
  times.reserve(samples.size() * static_cast<std::size_t>(repetitions));
  for (int r = 0; r < repetitions; ++r)
    for (const auto& s : samples) {
      const auto t0 = Clock::now();
      (void)predictor(s.features);
      times.push_back(seconds_since(t0));
    }

  TimingReport report;
  report.repetitions = repetitions;
  const double mean = std::accumulate(times.begin(), times.end(), 0.0) /
                      static_cast<double>(times.size());
  double var = 0;
  for (double t : times) var += (t - mean) * (t - mean);
  report.mean_seconds = mean;
  report.stddev_seconds = std::sqrt(var / static_cast<double>(times.size()));
  return report;
}

ImportanceReport permutation_importance(const BatchDecider& decider,
                                        const std::vector<features::SampleWindow>& samples,
                                        Projection projection, std::uint64_t seed,
                                        int top_k, int repeats) {
  if (samples.empty()) throw ValidationError("permutation_importance: empty sample set");
  if (repeats < 1) throw ValidationError("permutation_importance: repeats must be >= 1");

  // canonical sample order, so the report has set semantics
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& sa = samples[a];
    const auto& sb = samples[b];
    return std::tie(sa.recording_id, sa.vehicle_id, sa.anchor_frame, sa.horizon_s) <
           std::tie(sb.recording_id, sb.vehicle_id, sb.anchor_frame, sb.horizon_s);
  });

  const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
  Matrix X(features::kWindowFeatures, n);
  std::vector<features::SampleWindow> ordered;
  ordered.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    X.col(static_cast<Eigen::Index>(i)) = samples[order[i]].features;
    ordered.push_back(samples[order[i]]);
  }
  const std::vector<int> truth = true_classes(ordered, projection);
  const std::vector<std::string> names = projection_class_names(projection);
  const int k = static_cast<int>(names.size());

  const std::vector<double> base_recall = per_class_recall(decider(X), truth, k);

  Matrix scores = Matrix::Zero(k, features::kWindowFeatures);
  Eigen::RowVectorXd saved(n);
  std::vector<std::size_t> perm(samples.size());
  for (int j = 0; j < features::kWindowFeatures; ++j) {
    saved = X.row(j);
    for (int r = 0; r < repeats; ++r) {
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)));
      rng.shuffle(perm);
      for (Eigen::Index i = 0; i < n; ++i)
        X(j, i) = saved(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]));
      const std::vector<double> recall = per_class_recall(decider(X), truth, k);
      for (int c = 0; c < k; ++c) scores(c, j) += base_recall[c] - recall[c];
    }
    X.row(j) = saved;
  }
  scores /= static_cast<double>(repeats);

  ImportanceReport report;
  report.class_names = names;
  report.top_k = top_k;
  report.ranked.resize(k);
  for (int c = 0; c < k; ++c) {
    std::vector<int> idx(features::kWindowFeatures);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (scores(c, a) != scores(c, b)) return scores(c, a) > scores(c, b);
      return a < b;
    });
    for (int i = 0; i < top_k && i < features::kWindowFeatures; ++i)
      report.ranked[c].push_back({features::feature_name(idx[i]), scores(c, idx[i])});
  }
  return report;
}

std::vector<TimelinePoint> prediction_timeline(const ProbPredictor& predictor,
                                               const Recording& recording,
                                               int vehicle_id, double horizon_s,
                                               const features::WindowOptions& opts) {
  std::vector<TimelinePoint> series;
  const Track* track = recording.track_of(vehicle_id);
  if (!track) return series;
  for (const TrackFrame& f : track->frames) {
    auto window = features::build_window(recording, vehicle_id, f.frame, opts);
    if (!window) continue;
    auto truth = features::label_at_horizon(recording, vehicle_id, f.frame, horizon_s);
    if (!truth) continue;
    const seqnet::Prediction pred = predictor(*window);
    series.push_back({f.frame, pred.cls, pred.probabilities, *truth});
  }
  return series;
}

nlohmann::json metrics_to_json(const MetricsReport& report, bool include_timing) {
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(report.confusion.rows()));
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r)
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      confusion[static_cast<std::size_t>(r)].push_back(report.confusion(r, c));
  nlohmann::json j{{"classNames", report.class_names},
                   {"confusion", confusion},
                   {"accuracy", report.accuracy},
                   {"macroPrecision", report.macro_precision},
                   {"macroRecall", report.macro_recall},
                   {"macroF1", report.macro_f1},
                   {"sampleCount", report.sample_count},
                   {"averaging", "macro"}};
  if (include_timing) j["meanInferenceSeconds"] = report.mean_inference_seconds;
  return j;
}

void write_confusion_csv(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "trueClass";
  for (const auto& name : report.class_names) out << ",pred_" << name;
  out << '\n';
  for (Eigen::Index r = 0; r < report.confusion.rows(); ++r) {
    out << report.class_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < report.confusion.cols(); ++c)
      out << ',' << report.confusion(r, c);
    out << '\n';
  }
}

void write_importance_csv(const ImportanceReport& report,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "rank";
  for (const auto& name : report.class_names) out << ',' << name << "Feature," << name << "Score";
  out << '\n';
  for (int i = 0; i < report.top_k; ++i) {
    out << i + 1;
    for (const auto& ranked : report.ranked) {
      if (i < static_cast<int>(ranked.size()))
        out << ',' << ranked[static_cast<std::size_t>(i)].feature << ','
            << format_double(ranked[static_cast<std::size_t>(i)].score);
      else
        out << ",,";
    }
    out << '\n';
  }
}

void write_timeline_csv(const std::vector<TimelinePoint>& series,
                        const std::vector<std::string>& class_names,
                        const std::filesystem::path& path, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "frame,predicted";
  for (const auto& name : class_names) out << ",p_" << name;
  out << ",trueLabel\n";
  for (const TimelinePoint& p : series) {
    out << p.frame << ',' << class_names[static_cast<std::size_t>(p.predicted)];
    for (Eigen::Index i = 0; i < p.probabilities.size(); ++i)
      out << ',' << format_double(p.probabilities[i]);
    out << ',' << label_name(p.truth) << '\n';
  }
}

}  // namespace lcf::pipeline
