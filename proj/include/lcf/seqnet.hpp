#pragma once

#include "lcf/features.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"

namespace lcf::seqnet {

// Flat feeds the whole window as one timestep; Sequential feeds 5 timesteps
// of one frame each. Flat is the default: it is the only reading consistent
// with the published parameter counts.
enum class SequenceMode { Flat, Sequential };

const char* sequence_mode_name(SequenceMode mode);
SequenceMode sequence_mode_from_name(const std::string& name);

struct NetworkConfig {
  int input_size = features::kWindowFeatures;  // per-timestep input width
  int hidden_size = 128;
  int num_layers = 2;
  double dropout = 0.2;
  int output_size = 3;  // 3 = three-class, 1 = binary logit
  SequenceMode sequence_mode = SequenceMode::Flat;
  int epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 1;

  int steps() const { return sequence_mode == SequenceMode::Flat ? 1 : features::kWindowFrames; }
  int window_size() const { return steps() * input_size; }
  int class_count() const { return output_size == 1 ? 2 : output_size; }

  void validate() const;  // throws ValidationError
};

// One stacked layer; rows are the gate blocks in order [input; forget; cell;
// output], each hidden_size tall.
struct LstmLayerParams {
  Matrix w_ih;  // 4h x in
  Matrix w_hh;  // 4h x h
  Vector b_ih;  // 4h
  Vector b_hh;  // 4h
};

struct NetworkParams {
  NetworkConfig config;
  std::vector<LstmLayerParams> layers;
  Matrix head_w;  // out x h
  Vector head_b;  // out
  std::optional<features::Normalization> normalization;
  int feature_ordering_version = features::kFeatureOrderingVersion;
};

// Visits every tensor in canonical serialization order:
// per layer (w_ih, w_hh, b_ih, b_hh), then head_w, head_b.
template <typename Params, typename F>
void visit_tensors(Params&& p, F&& f) {
  for (auto&& layer : p.layers) {
    f(layer.w_ih);
    f(layer.w_hh);
    f(layer.b_ih);
    f(layer.b_hh);
  }
  f(p.head_w);
  f(p.head_b);
}

// Closed form: sum over layers of 4h (in_l + h + 2) plus out*h + out.
long param_count(const NetworkConfig& config);

// Weights uniform in +/- 1/sqrt(hidden_size); biases zero except the
// forget-gate block of b_ih, which is 1.
NetworkParams init_params(const NetworkConfig& config, std::uint64_t init_seed);

// One cell step over a column batch. x: in x B, h_prev/c_prev: h x B.
void lstm_cell(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
               const LstmLayerParams& layer, Matrix& h_out, Matrix& c_out);

// Mask entries are 0 or 1/(1-rate) (inverted dropout).
Matrix dropout_mask(int rows, int cols, double rate, Rng& rng);

enum class Mode { Train, Eval };

// Everything backward_batch needs from the paired forward pass.
struct ForwardCache {
  int steps = 0;
  int batch = 0;
  // [layer][step]
  std::vector<std::vector<Matrix>> x, gi, gf, gg, go, c, tc, h;
  std::vector<std::vector<Matrix>> mask;  // [layer boundary][step]
  Matrix relu_out;
  Matrix logits;
};

// windows: (steps * input_size) x B, already standardized. Train mode applies
// inverted dropout between stacked layers with masks drawn from dropout_seed.
Matrix forward_batch(const NetworkParams& params, const Matrix& windows, Mode mode,
                     std::uint64_t dropout_seed = 0, ForwardCache* cache = nullptr);

// Mean cross-entropy over the batch; classes are 0..2 (3-class softmax) or
// 0/1 (single-logit logistic). dlogits, when given, receives d(mean
// loss)/d(logits).
double loss_batch(const Matrix& logits, const std::vector<int>& classes,
                  Matrix* dlogits = nullptr);

// Single-sample convenience used by tests.
double loss(const Vector& logits, int cls);

struct Gradients {
  std::vector<LstmLayerParams> layers;
  Matrix head_w;
  Vector head_b;
};

Gradients zero_gradients(const NetworkConfig& config);

// Exact BPTT. `cache` must come from a forward_batch call on the same params,
// so training-mode dropout masks are reused.
Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Matrix& dlogits);

// Convenience wrapper: forward + loss + backward over a standardized batch.
Gradients gradient_batch(const NetworkParams& params, const Matrix& windows,
                         const std::vector<int>& classes, Mode mode,
                         std::uint64_t dropout_seed, double* loss_out = nullptr);

struct RmsPropOptions {
  double learning_rate = 1e-3;
  double alpha = 0.9;
  double epsilon = 1e-8;
};

struct RmsPropState {
  RmsPropOptions options;
  Gradients mean_square;  // running average of g^2, starts at zero
};

RmsPropState make_rmsprop_state(const NetworkConfig& config, const RmsPropOptions& options = {});

// v <- alpha v + (1-alpha) g^2;  p <- p - lr g / (sqrt(v) + eps), elementwise.
void rmsprop_step(NetworkParams& params, const Gradients& grads, RmsPropState& state);

struct FitOptions {
  std::uint64_t init_seed = 1;
  std::uint64_t train_seed = 2;
  RmsPropOptions rmsprop;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double mean_loss = 0;
  double train_accuracy = 0;  // eval-mode accuracy over the training set
};

struct FitResult {
  NetworkParams params;
  std::vector<EpochStats> history;
  std::size_t train_sample_count = 0;
};

// Trains on raw windows (window_size x N). Normalization is fitted here,
// applied to the input, and stored in the returned params. Seeded epoch
// shuffles and dropout masks make the result bitwise reproducible.
FitResult fit(const Matrix& raw_windows, const std::vector<int>& classes,
              const NetworkConfig& config, const FitOptions& options = {});

struct Prediction {
  int cls = 0;
  Vector probabilities;  // class_count entries, sums to 1
};

// Eval-mode forward on a raw window (normalization applied when present).
// Three-class: argmax of softmax, ties to the lowest index. Binary:
// class 1 iff logit > 0.
Prediction predict(const NetworkParams& params, const Vector& raw_window);

std::vector<int> predict_batch(const NetworkParams& params, const Matrix& raw_windows);

enum class Precision { F64, F32 };

// Model file: 8-byte magic, little-endian u32 header length, JSON header,
// parameter block in canonical tensor order (column-major within a tensor).
void save_model(const NetworkParams& params, const std::filesystem::path& path,
                Precision precision = Precision::F64,
                const nlohmann::json& meta = nlohmann::json::object());

struct LoadedModel {
  NetworkParams params;
  Precision precision = Precision::F64;
  nlohmann::json meta;
};

LoadedModel load_model(const std::filesystem::path& path);

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path);

}  // namespace lcf::seqnet
