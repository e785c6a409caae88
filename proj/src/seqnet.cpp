#include "lcf/seqnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace lcf::seqnet {

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are not supported");

namespace {

double sigmoid_scalar(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& z) { return z.unaryExpr(&sigmoid_scalar); }

Matrix tanh_m(const Matrix& z) {
  return z.unaryExpr([](double v) { return std::tanh(v); });
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
  double* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) p[i] = rng.uniform(-bound, bound);
}

int layer_input_size(const NetworkConfig& config, int layer) {
  return layer == 0 ? config.input_size : config.hidden_size;
}

std::vector<LstmLayerParams> layer_zeros(const NetworkConfig& config) {
  std::vector<LstmLayerParams> layers(config.num_layers);
  for (int l = 0; l < config.num_layers; ++l) {
    const int in = layer_input_size(config, l);
    const int h = config.hidden_size;
    layers[l].w_ih = Matrix::Zero(4 * h, in);
    layers[l].w_hh = Matrix::Zero(4 * h, h);
    layers[l].b_ih = Vector::Zero(4 * h);
    layers[l].b_hh = Vector::Zero(4 * h);
  }
  return layers;
}

}  // namespace

const char* sequence_mode_name(SequenceMode mode) {
  return mode == SequenceMode::Flat ? "flat" : "sequential";
}

SequenceMode sequence_mode_from_name(const std::string& name) {
  if (name == "flat") return SequenceMode::Flat;
  if (name == "sequential") return SequenceMode::Sequential;
  throw ValidationError("unknown sequence mode: " + name);
}

void NetworkConfig::validate() const {
  if (input_size < 1) throw ValidationError("input_size must be >= 1");
  if (hidden_size < 1) throw ValidationError("hidden_size must be >= 1");
  if (num_layers < 1) throw ValidationError("num_layers must be >= 1");
  if (!(dropout >= 0 && dropout < 1)) throw ValidationError("dropout must be in [0, 1)");
  if (output_size != 1 && output_size != 3)
    throw ValidationError("output_size must be 1 or 3");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
}

long param_count(const NetworkConfig& config) {
  long total = 0;
  for (int l = 0; l < config.num_layers; ++l)
    total += 4L * config.hidden_size * (layer_input_size(config, l) + config.hidden_size + 2);
  return total + static_cast<long>(config.output_size) * config.hidden_size +
         config.output_size;
}

NetworkParams init_params(const NetworkConfig& config, std::uint64_t init_seed) {
  config.validate();
  NetworkParams params;
  params.config = config;
  params.layers = layer_zeros(config);
  const int h = config.hidden_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  Rng rng(init_seed);
  for (auto& layer : params.layers) {
    fill_uniform(layer.w_ih, bound, rng);
    fill_uniform(layer.w_hh, bound, rng);
    layer.b_ih.segment(h, h).setOnes();  // forget-gate bias
  }
  params.head_w = Matrix::Zero(config.output_size, h);
  fill_uniform(params.head_w, bound, rng);
  params.head_b = Vector::Zero(config.output_size);
  return params;
}

void lstm_cell(const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
               const LstmLayerParams& layer, Matrix& h_out, Matrix& c_out) {
  const Eigen::Index h = layer.w_hh.cols();
  if (x.rows() != layer.w_ih.cols() || h_prev.rows() != h || c_prev.rows() != h ||
      x.cols() != h_prev.cols() || x.cols() != c_prev.cols())
    throw std::invalid_argument("lstm_cell: shape mismatch");
  Matrix a = layer.w_ih * x + layer.w_hh * h_prev;
  a.colwise() += (layer.b_ih + layer.b_hh);
  const Matrix i = sigmoid(a.topRows(h));
  const Matrix f = sigmoid(a.middleRows(h, h));
  const Matrix g = tanh_m(a.middleRows(2 * h, h));
  const Matrix o = sigmoid(a.bottomRows(h));
  c_out = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  h_out = o.cwiseProduct(tanh_m(c_out));
}

Matrix dropout_mask(int rows, int cols, double rate, Rng& rng) {
  Matrix mask(rows, cols);
  const double keep = 1.0 - rate;
  double* p = mask.data();
  for (Eigen::Index i = 0; i < mask.size(); ++i)
    p[i] = rng.uniform01() < rate ? 0.0 : 1.0 / keep;
  return mask;
}

Matrix forward_batch(const NetworkParams& params, const Matrix& windows, Mode mode,
                     std::uint64_t dropout_seed, ForwardCache* cache) {
  const NetworkConfig& cfg = params.config;
  const int steps = cfg.steps();
  const int h = cfg.hidden_size;
  const Eigen::Index batch = windows.cols();
  if (windows.rows() != cfg.window_size())
    throw std::invalid_argument("forward_batch: window size mismatch");

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  const bool keep = cache != nullptr;
  if (keep) {
    cc.steps = steps;
    cc.batch = static_cast<int>(batch);
    cc.x.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.gi.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.gf.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.gg.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.go.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.c.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.tc.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.h.assign(cfg.num_layers, std::vector<Matrix>(steps));
    cc.mask.assign(std::max(0, cfg.num_layers - 1), std::vector<Matrix>(steps));
  }

  // step inputs for the current layer; starts as the window slices
  std::vector<Matrix> inputs(steps);
  for (int t = 0; t < steps; ++t)
    inputs[t] = windows.middleRows(static_cast<Eigen::Index>(t) * cfg.input_size,
                                   cfg.input_size);

  Matrix h_state, c_state, last_h;
  for (int l = 0; l < cfg.num_layers; ++l) {
    const LstmLayerParams& layer = params.layers[l];
    h_state = Matrix::Zero(h, batch);
    c_state = Matrix::Zero(h, batch);
    for (int t = 0; t < steps; ++t) {
      Matrix a = layer.w_ih * inputs[t] + layer.w_hh * h_state;
      a.colwise() += (layer.b_ih + layer.b_hh);
      Matrix gi = sigmoid(a.topRows(h));
      Matrix gf = sigmoid(a.middleRows(h, h));
      Matrix gg = tanh_m(a.middleRows(2 * h, h));
      Matrix go = sigmoid(a.bottomRows(h));
      Matrix c = gf.cwiseProduct(c_state) + gi.cwiseProduct(gg);
      Matrix tc = tanh_m(c);
      Matrix hh = go.cwiseProduct(tc);
      if (keep) {
        cc.x[l][t] = inputs[t];
        cc.gi[l][t] = gi;
        cc.gf[l][t] = gf;
        cc.gg[l][t] = gg;
        cc.go[l][t] = go;
        cc.c[l][t] = c;
        cc.tc[l][t] = tc;
        cc.h[l][t] = hh;
      }
      h_state = std::move(hh);
      c_state = std::move(c);
      if (l + 1 < cfg.num_layers) {
        // inverted dropout between stacked layers, train mode only
        if (mode == Mode::Train && cfg.dropout > 0) {
          Rng rng(derive_seed(dropout_seed, static_cast<std::uint64_t>(l),
                              static_cast<std::uint64_t>(t), 0xd0));
          Matrix mask = dropout_mask(h, static_cast<int>(batch), cfg.dropout, rng);
          inputs[t] = mask.cwiseProduct(h_state);
          if (keep) cc.mask[l][t] = std::move(mask);
        } else {
          inputs[t] = h_state;
          if (keep) cc.mask[l][t] = Matrix::Ones(h, batch);
        }
      }
    }
    last_h = h_state;
  }

  Matrix relu_out = last_h.cwiseMax(0.0);
  Matrix logits = params.head_w * relu_out;
  logits.colwise() += params.head_b;
  if (keep) {
    cc.relu_out = std::move(relu_out);
    cc.logits = logits;
  }
  return logits;
}

double loss_batch(const Matrix& logits, const std::vector<int>& classes, Matrix* dlogits) {
  const Eigen::Index batch = logits.cols();
  if (static_cast<Eigen::Index>(classes.size()) != batch)
    throw std::invalid_argument("loss_batch: class count mismatch");
  if (batch == 0) throw std::invalid_argument("loss_batch: empty batch");
  const Eigen::Index out = logits.rows();
  if (dlogits) dlogits->setZero(out, batch);

  double total = 0;
  if (out == 1) {
    for (Eigen::Index j = 0; j < batch; ++j) {
      const int y = classes[static_cast<std::size_t>(j)];
      if (y != 0 && y != 1) throw std::invalid_argument("binary class must be 0 or 1");
      const double z = logits(0, j);
      total += std::max(z, 0.0) - y * z + std::log1p(std::exp(-std::abs(z)));
      if (dlogits)
        (*dlogits)(0, j) = (sigmoid_scalar(z) - y) / static_cast<double>(batch);
    }
  } else {
    for (Eigen::Index j = 0; j < batch; ++j) {
      const int y = classes[static_cast<std::size_t>(j)];
      if (y < 0 || y >= out) throw std::invalid_argument("class out of range");
      const Vector col = logits.col(j);
      const double m = col.maxCoeff();
      const Vector shifted = col.array() - m;
      const double lse = std::log(shifted.array().exp().sum());
      total += lse - shifted[y];
      if (dlogits) {
        Vector soft = (shifted.array() - lse).exp();
        soft[y] -= 1.0;
        dlogits->col(j) = soft / static_cast<double>(batch);
      }
    }
  }
  return total / static_cast<double>(batch);
}

double loss(const Vector& logits, int cls) {
  Matrix m(logits.size(), 1);
  m.col(0) = logits;
  return loss_batch(m, {cls});
}

Gradients zero_gradients(const NetworkConfig& config) {
  Gradients g;
  g.layers = layer_zeros(config);
  g.head_w = Matrix::Zero(config.output_size, config.hidden_size);
  g.head_b = Vector::Zero(config.output_size);
  return g;
}

Gradients backward_batch(const NetworkParams& params, const ForwardCache& cache,
                         const Matrix& dlogits) {
  const NetworkConfig& cfg = params.config;
  const int steps = cache.steps;
  const int h = cfg.hidden_size;
  const int top = cfg.num_layers - 1;
  Gradients grads = zero_gradients(cfg);

  grads.head_w = dlogits * cache.relu_out.transpose();
  grads.head_b = dlogits.rowwise().sum();

  // d loss / d h for the step outputs of the layer above's input, per step
  std::vector<Matrix> from_above(steps);
  {
    const Matrix& relu_in = cache.h[top][steps - 1];
    const Matrix d_relu = params.head_w.transpose() * dlogits;
    for (int t = 0; t < steps; ++t) from_above[t] = Matrix::Zero(h, dlogits.cols());
    from_above[steps - 1] =
        d_relu.cwiseProduct((relu_in.array() > 0.0).cast<double>().matrix());
  }

  for (int l = top; l >= 0; --l) {
    const LstmLayerParams& layer = params.layers[l];
    LstmLayerParams& grad = grads.layers[l];
    std::vector<Matrix> dx(steps);
    Matrix dh_next = Matrix::Zero(h, dlogits.cols());
    Matrix dc_next = Matrix::Zero(h, dlogits.cols());
    for (int t = steps - 1; t >= 0; --t) {
      const Matrix dh = from_above[t] + dh_next;
      const Matrix& gi = cache.gi[l][t];
      const Matrix& gf = cache.gf[l][t];
      const Matrix& gg = cache.gg[l][t];
      const Matrix& go = cache.go[l][t];
      const Matrix& tc = cache.tc[l][t];
      const Matrix d_o = dh.cwiseProduct(tc);
      const Matrix dc =
          dc_next + (dh.array() * go.array() * (1.0 - tc.array().square())).matrix();
      const Matrix di = dc.cwiseProduct(gg);
      const Matrix dg = dc.cwiseProduct(gi);
      dc_next = dc.cwiseProduct(gf);

      Matrix da(4 * h, dlogits.cols());
      da.topRows(h) = (di.array() * gi.array() * (1.0 - gi.array())).matrix();
      if (t > 0) {
        const Matrix df = dc.cwiseProduct(cache.c[l][t - 1]);
        da.middleRows(h, h) = (df.array() * gf.array() * (1.0 - gf.array())).matrix();
      } else {
        da.middleRows(h, h).setZero();  // c_prev is zero at t = 0
      }
      da.middleRows(2 * h, h) = (dg.array() * (1.0 - gg.array().square())).matrix();
      da.bottomRows(h) = (d_o.array() * go.array() * (1.0 - go.array())).matrix();

      grad.w_ih.noalias() += da * cache.x[l][t].transpose();
      if (t > 0) grad.w_hh.noalias() += da * cache.h[l][t - 1].transpose();
      grad.b_ih += da.rowwise().sum();
      grad.b_hh += da.rowwise().sum();
      dx[t] = layer.w_ih.transpose() * da;
      dh_next = layer.w_hh.transpose() * da;
    }
    if (l > 0)
      for (int t = 0; t < steps; ++t)
        from_above[t] = cache.mask[l - 1][t].cwiseProduct(dx[t]);
  }
  return grads;
}

Gradients gradient_batch(const NetworkParams& params, const Matrix& windows,
                         const std::vector<int>& classes, Mode mode,
                         std::uint64_t dropout_seed, double* loss_out) {
  ForwardCache cache;
  const Matrix logits = forward_batch(params, windows, mode, dropout_seed, &cache);
  Matrix dlogits;
  const double l = loss_batch(logits, classes, &dlogits);
  if (loss_out) *loss_out = l;
  return backward_batch(params, cache, dlogits);
}

RmsPropState make_rmsprop_state(const NetworkConfig& config, const RmsPropOptions& options) {
  return {options, zero_gradients(config)};
}

void rmsprop_step(NetworkParams& params, const Gradients& grads, RmsPropState& state) {
  const double lr = state.options.learning_rate;
  const double alpha = state.options.alpha;
  const double eps = state.options.epsilon;
  auto update = [&](auto& p, const auto& g, auto& v) {
    v.array() = alpha * v.array() + (1.0 - alpha) * g.array().square();
    p.array() -= lr * g.array() / (v.array().sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    update(params.layers[l].w_ih, grads.layers[l].w_ih, state.mean_square.layers[l].w_ih);
    update(params.layers[l].w_hh, grads.layers[l].w_hh, state.mean_square.layers[l].w_hh);
    update(params.layers[l].b_ih, grads.layers[l].b_ih, state.mean_square.layers[l].b_ih);
    update(params.layers[l].b_hh, grads.layers[l].b_hh, state.mean_square.layers[l].b_hh);
  }
  update(params.head_w, grads.head_w, state.mean_square.head_w);
  update(params.head_b, grads.head_b, state.mean_square.head_b);
}

namespace {

std::vector<int> decide(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.cols()));
  if (logits.rows() == 1) {
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      out[static_cast<std::size_t>(j)] = logits(0, j) > 0 ? 1 : 0;
  } else {
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      int best = 0;  // strict > keeps the lowest index on ties
      for (Eigen::Index k = 1; k < logits.rows(); ++k)
        if (logits(k, j) > logits(best, j)) best = static_cast<int>(k);
      out[static_cast<std::size_t>(j)] = best;
    }
  }
  return out;
}

}  // namespace

FitResult fit(const Matrix& raw_windows, const std::vector<int>& classes,
              const NetworkConfig& config, const FitOptions& options) {
  config.validate();
  const Eigen::Index n = raw_windows.cols();
  if (n == 0) throw ValidationError("fit: empty training set");
  if (static_cast<Eigen::Index>(classes.size()) != n)
    throw std::invalid_argument("fit: classes do not match windows");
  for (int y : classes)
    if (y < 0 || y >= config.class_count())
      throw std::invalid_argument("fit: class out of range");

  const features::Normalization norm = features::fit_normalization(raw_windows);
  const Matrix X = norm.apply(raw_windows);

  FitResult result;
  result.params = init_params(config, options.init_seed);
  result.params.normalization = norm;
  result.train_sample_count = static_cast<std::size_t>(n);
  RmsPropState state = make_rmsprop_state(config, options.rmsprop);

  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(options.train_seed, static_cast<std::uint64_t>(epoch), 0, 1));
    shuffle_rng.shuffle(order);

    double loss_sum = 0;
    const int batches =
        static_cast<int>((n + config.batch_size - 1) / config.batch_size);
    for (int b = 0; b < batches; ++b) {
      const std::size_t begin = static_cast<std::size_t>(b) * config.batch_size;
      const std::size_t size =
          std::min<std::size_t>(config.batch_size, static_cast<std::size_t>(n) - begin);
      Matrix batch(X.rows(), static_cast<Eigen::Index>(size));
      std::vector<int> batch_classes(size);
      for (std::size_t i = 0; i < size; ++i) {
        batch.col(static_cast<Eigen::Index>(i)) =
            X.col(static_cast<Eigen::Index>(order[begin + i]));
        batch_classes[i] = classes[order[begin + i]];
      }
      const std::uint64_t dropout_seed = derive_seed(
          options.train_seed, static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b), 2);
      double batch_loss = 0;
      const Gradients grads = gradient_batch(result.params, batch, batch_classes,
                                             Mode::Train, dropout_seed, &batch_loss);
      rmsprop_step(result.params, grads, state);
      loss_sum += batch_loss * static_cast<double>(size);
    }

    // eval-mode accuracy over the training set
    const std::vector<int> decisions = decide(forward_batch(result.params, X, Mode::Eval));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < decisions.size(); ++i)
      if (decisions[i] == classes[i]) ++correct;
    result.history.push_back({epoch + 1, loss_sum / static_cast<double>(n),
                              static_cast<double>(correct) / static_cast<double>(n)});
  }
  return result;
}

Prediction predict(const NetworkParams& params, const Vector& raw_window) {
  Matrix col(raw_window.size(), 1);
  col.col(0) =
      params.normalization ? params.normalization->apply(raw_window) : raw_window;
  const Matrix logits = forward_batch(params, col, Mode::Eval);

  Prediction pred;
  if (params.config.output_size == 1) {
    const double p1 = sigmoid_scalar(logits(0, 0));
    pred.cls = logits(0, 0) > 0 ? 1 : 0;
    pred.probabilities = Vector(2);
    pred.probabilities << 1.0 - p1, p1;
  } else {
    const Vector col_logits = logits.col(0);
    const double m = col_logits.maxCoeff();
    Vector ex = (col_logits.array() - m).exp();
    pred.probabilities = ex / ex.sum();
    pred.cls = decide(logits)[0];
  }
  return pred;
}

std::vector<int> predict_batch(const NetworkParams& params, const Matrix& raw_windows) {
  const Matrix X =
      params.normalization ? params.normalization->apply(raw_windows) : raw_windows;
  return decide(forward_batch(params, X, Mode::Eval));
}

namespace {

constexpr char kMagic[8] = {'L', 'C', 'F', 'M', 'O', 'D', 'E', 'L'};

nlohmann::json config_to_json(const NetworkConfig& c) {
  return {{"inputSize", c.input_size},   {"hiddenSize", c.hidden_size},
          {"numLayers", c.num_layers},   {"dropout", c.dropout},
          {"outputSize", c.output_size}, {"sequenceMode", sequence_mode_name(c.sequence_mode)},
          {"epochs", c.epochs},          {"batchSize", c.batch_size},
          {"seed", c.seed}};
}

NetworkConfig config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  c.input_size = j.at("inputSize").get<int>();
  c.hidden_size = j.at("hiddenSize").get<int>();
  c.num_layers = j.at("numLayers").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.output_size = j.at("outputSize").get<int>();
  c.sequence_mode = sequence_mode_from_name(j.at("sequenceMode").get<std::string>());
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batchSize").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_model(const NetworkParams& params, const std::filesystem::path& path,
                Precision precision, const nlohmann::json& meta) {
  nlohmann::json header;
  header["config"] = config_to_json(params.config);
  header["featureOrderingVersion"] = params.feature_ordering_version;
  header["normalization"] = params.normalization
                                ? features::normalization_to_json(*params.normalization)
                                : nlohmann::json();
  header["precision"] = precision == Precision::F64 ? "f64" : "f32";
  header["paramCount"] = param_count(params.config);
  header["layout"] = "col-major";
  header["meta"] = meta;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write model file: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(header_str.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  visit_tensors(params, [&](const auto& tensor) {
    if (precision == Precision::F64) {
      out.write(reinterpret_cast<const char*>(tensor.data()),
                static_cast<std::streamsize>(tensor.size() * sizeof(double)));
    } else {
      for (Eigen::Index i = 0; i < tensor.size(); ++i) {
        const float v = static_cast<float>(tensor.data()[i]);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
    }
  });
  if (!out) throw ParseError("failed writing model file: " + path.string());
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ParseError("not a model file (bad magic): " + path.string());
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), len);
  if (!in) throw ParseError("truncated model header: " + path.string());

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model header JSON: ") + e.what());
  }

  LoadedModel loaded;
  loaded.params.config = config_from_json(header.at("config"));
  loaded.params.config.validate();
  loaded.params.feature_ordering_version = header.at("featureOrderingVersion").get<int>();
  if (!header.at("normalization").is_null())
    loaded.params.normalization =
        features::normalization_from_json(header.at("normalization"));
  const std::string prec = header.at("precision").get<std::string>();
  if (prec != "f64" && prec != "f32") throw ParseError("unknown precision: " + prec);
  loaded.precision = prec == "f64" ? Precision::F64 : Precision::F32;
  loaded.meta = header.value("meta", nlohmann::json::object());

  loaded.params.layers = layer_zeros(loaded.params.config);
  loaded.params.head_w =
      Matrix::Zero(loaded.params.config.output_size, loaded.params.config.hidden_size);
  loaded.params.head_b = Vector::Zero(loaded.params.config.output_size);

  long read_count = 0;
  visit_tensors(loaded.params, [&](auto& tensor) {
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      if (loaded.precision == Precision::F64) {
        double v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        tensor.data()[i] = v;
      } else {
        float v;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        tensor.data()[i] = static_cast<double>(v);
      }
      ++read_count;
    }
  });
  if (!in || read_count != param_count(loaded.params.config))
    throw ParseError("truncated model parameter block: " + path.string());
  in.peek();
  if (!in.eof()) throw ParseError("trailing bytes after parameter block: " + path.string());
  return loaded;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "epoch,meanLoss,trainAccuracy\n";
  for (const EpochStats& e : history)
    out << e.epoch << ',' << format_double(e.mean_loss) << ','
        << format_double(e.train_accuracy) << '\n';
}

}  // namespace lcf::seqnet
