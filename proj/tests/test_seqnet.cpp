#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lcf/seqnet.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace lcf;
using namespace lcf::seqnet;

namespace {

// flat views over every tensor in canonical order
std::vector<std::pair<double*, Eigen::Index>> tensor_spans(NetworkParams& p) {
  std::vector<std::pair<double*, Eigen::Index>> spans;
  visit_tensors(p, [&](auto& t) { spans.push_back({t.data(), t.size()}); });
  return spans;
}

std::vector<std::pair<const double*, Eigen::Index>> tensor_spans(const Gradients& g) {
  std::vector<std::pair<const double*, Eigen::Index>> spans;
  visit_tensors(g, [&](const auto& t) { spans.push_back({t.data(), t.size()}); });
  return spans;
}

long enumerate_params(const NetworkParams& p) {
  long n = 0;
  visit_tensors(p, [&](const auto& t) { n += t.size(); });
  return n;
}

double loss_at(const NetworkParams& params, const Matrix& windows,
               const std::vector<int>& classes, Mode mode, std::uint64_t dropout_seed) {
  return loss_batch(forward_batch(params, windows, mode, dropout_seed), classes);
}

NetworkParams zero_weight_params(NetworkConfig cfg) {
  NetworkParams p = init_params(cfg, 1);
  visit_tensors(p, [](auto& t) { t.setZero(); });
  return p;
}

// central finite differences over every parameter
void check_gradients(NetworkConfig cfg, std::uint64_t seed, int batch, double dropout) {
  cfg.dropout = dropout;
  NetworkParams params = init_params(cfg, seed);
  Rng rng(derive_seed(seed, 0xf00d));
  Matrix windows(cfg.window_size(), batch);
  for (Eigen::Index i = 0; i < windows.size(); ++i)
    windows.data()[i] = rng.uniform(-1.5, 1.5);
  std::vector<int> classes(batch);
  for (int& c : classes) c = static_cast<int>(rng.below(cfg.class_count()));

  const std::uint64_t dropout_seed = derive_seed(seed, 0xdddd);
  const Mode mode = dropout > 0 ? Mode::Train : Mode::Eval;
  const Gradients analytic =
      gradient_batch(params, windows, classes, mode, dropout_seed);

  const auto spans = tensor_spans(params);
  const auto grad_spans = tensor_spans(analytic);
  REQUIRE(spans.size() == grad_spans.size());

  const double h = 1e-5;
  int checked = 0;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    REQUIRE(spans[s].second == grad_spans[s].second);
    for (Eigen::Index i = 0; i < spans[s].second; ++i) {
      double& theta = spans[s].first[i];
      const double saved = theta;
      theta = saved + h;
      const double up = loss_at(params, windows, classes, mode, dropout_seed);
      theta = saved - h;
      const double down = loss_at(params, windows, classes, mode, dropout_seed);
      theta = saved;
      const double fd = (up - down) / (2 * h);
      const double a = grad_spans[s].first[i];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
      if (err >= 1e-4)
        MESSAGE("tensor " << s << " index " << i << ": analytic " << a << " fd " << fd);
      CHECK(err < 1e-4);
      ++checked;
    }
  }
  CHECK(checked == param_count(cfg));
}

}  // namespace

TEST_CASE("closed-form parameter count matches the published figures") {
  NetworkConfig e2e;  // 150 in, 128 hidden, 2 layers
  e2e.output_size = 3;
  CHECK(param_count(e2e) == 275843);
  NetworkConfig binary = e2e;
  binary.output_size = 1;
  CHECK(param_count(binary) == 275585);

  NetworkConfig tiny;
  tiny.input_size = 1;
  tiny.hidden_size = 1;
  tiny.num_layers = 1;
  tiny.output_size = 1;
  CHECK(param_count(tiny) == 18);  // 4(1+1+2) + 1 + 1

  NetworkConfig sequential;  // 5 x 30 reading
  sequential.input_size = 30;
  sequential.sequence_mode = SequenceMode::Sequential;
  CHECK(param_count(sequential) == 214403);
}

TEST_CASE("closed form equals exhaustive enumeration on random small configs") {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    NetworkConfig cfg;
    cfg.input_size = 1 + static_cast<int>(rng.below(9));
    cfg.hidden_size = 1 + static_cast<int>(rng.below(8));
    cfg.num_layers = 1 + static_cast<int>(rng.below(3));
    cfg.output_size = rng.below(2) == 0 ? 1 : 3;
    const NetworkParams params = init_params(cfg, trial);
    CHECK(enumerate_params(params) == param_count(cfg));
  }
}

TEST_CASE("initialization is seeded, bounded and forget-biased") {
  NetworkConfig cfg;
  const NetworkParams a = init_params(cfg, 77);
  const NetworkParams b = init_params(cfg, 77);
  const NetworkParams c = init_params(cfg, 78);

  bool identical = true, different = false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    identical &= a.layers[l].w_ih == b.layers[l].w_ih;
    different |= a.layers[l].w_ih != c.layers[l].w_ih;
  }
  CHECK(identical);
  CHECK(different);

  const double bound = 1.0 / std::sqrt(128.0);
  CHECK(bound == doctest::Approx(0.08838834764831845).epsilon(1e-15));
  double max_abs = 0;
  for (const auto& layer : a.layers) {
    max_abs = std::max(max_abs, layer.w_ih.cwiseAbs().maxCoeff());
    max_abs = std::max(max_abs, layer.w_hh.cwiseAbs().maxCoeff());
    CHECK((layer.b_ih.segment(128, 128).array() == 1.0).all());  // forget gate
    CHECK(layer.b_ih.head(128).isZero(0));
    CHECK(layer.b_ih.tail(2 * 128).isZero(0));
    CHECK(layer.b_hh.isZero(0));
  }
  CHECK(max_abs <= bound);
  CHECK(max_abs > 0.95 * bound);  // the bound is actually approached
}

TEST_CASE("lstm_cell fixed points") {
  NetworkConfig cfg;
  cfg.input_size = 4;
  cfg.hidden_size = 3;
  cfg.num_layers = 1;

  SUBCASE("all zeros in, zeros out") {
    const NetworkParams p = zero_weight_params(cfg);
    Matrix h, c;
    lstm_cell(Matrix::Zero(4, 2), Matrix::Zero(3, 2), Matrix::Zero(3, 2), p.layers[0], h, c);
    CHECK(h.isZero(0));
    CHECK(c.isZero(0));
  }
  SUBCASE("saturated forget gate preserves the cell state") {
    NetworkParams p = zero_weight_params(cfg);
    p.layers[0].b_ih.segment(3, 3).setConstant(100.0);   // forget -> 1
    p.layers[0].b_ih.segment(0, 3).setConstant(-100.0);  // input -> 0
    Matrix h, c;
    Matrix c_prev(3, 1);
    c_prev << 0.3, -0.7, 1.2;
    lstm_cell(Matrix::Random(4, 1), Matrix::Random(3, 1), c_prev, p.layers[0], h, c);
    CHECK((c - c_prev).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("shape mismatch is a contract violation") {
    const NetworkParams p = zero_weight_params(cfg);
    Matrix h, c;
    CHECK_THROWS_AS(
        lstm_cell(Matrix::Zero(5, 1), Matrix::Zero(3, 1), Matrix::Zero(3, 1), p.layers[0], h, c),
        std::invalid_argument);
  }
}

TEST_CASE("forward is deterministic in eval mode and dropout-free at rate 0") {
  NetworkConfig cfg;
  cfg.input_size = 12;
  cfg.hidden_size = 6;
  const NetworkParams p = init_params(cfg, 5);
  Rng rng(6);
  Matrix window(12, 3);
  for (Eigen::Index i = 0; i < window.size(); ++i) window.data()[i] = rng.uniform(-2, 2);

  const Matrix a = forward_batch(p, window, Mode::Eval);
  const Matrix b = forward_batch(p, window, Mode::Eval);
  CHECK(a == b);

  NetworkConfig no_drop = cfg;
  no_drop.dropout = 0.0;
  NetworkParams p0 = init_params(no_drop, 5);
  const Matrix train_logits = forward_batch(p0, window, Mode::Train, 123);
  const Matrix eval_logits = forward_batch(p0, window, Mode::Eval);
  CHECK(train_logits == eval_logits);
}

TEST_CASE("a negative final-hidden component is dead to the head through ReLU") {
  NetworkConfig cfg;
  cfg.input_size = 2;
  cfg.hidden_size = 2;
  cfg.num_layers = 1;
  cfg.output_size = 3;
  NetworkParams p = zero_weight_params(cfg);
  // saturate unit 0: i ~ 1, g ~ -1, o ~ 1 so h0 ~ -0.76 < 0
  p.layers[0].b_ih[0] = 100.0;   // input gate, unit 0
  p.layers[0].b_ih[4] = -100.0;  // cell candidate, unit 0
  p.layers[0].b_ih[6] = 100.0;   // output gate, unit 0
  p.head_w.setOnes();

  const Matrix window = Matrix::Zero(2, 1);
  ForwardCache cache;
  const Matrix logits = forward_batch(p, window, Mode::Eval, 0, &cache);
  REQUIRE(cache.h[0][0](0, 0) < 0.0);

  NetworkParams perturbed = p;
  perturbed.head_w.col(0).setConstant(42.0);  // weights on the dead unit
  const Matrix logits2 = forward_batch(perturbed, window, Mode::Eval);
  CHECK(logits == logits2);
}

TEST_CASE("cross-entropy fixed points") {
  CHECK(loss(Vector::Zero(3), 0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(loss(Vector::Zero(3), 2) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(loss(Vector::Zero(1), 0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(loss(Vector::Zero(1), 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Vector saturated(1);
  saturated << 50.0;
  CHECK(loss(saturated, 1) < 1e-20);

  Vector big(3);
  big << 50.0, 0.0, 0.0;
  CHECK(loss(big, 0) < 1e-20);
}

TEST_CASE("3-class loss is invariant to a constant logit shift") {
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    Vector logits(3);
    logits << rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5);
    const int y = static_cast<int>(rng.below(3));
    const double base = loss(logits, y);
    const double shifted = loss(logits.array() + rng.uniform(-20, 20), y);
    CHECK(std::abs(base - shifted) < 1e-9);
  }
}

TEST_CASE("softmax probabilities form a simplex point") {
  NetworkConfig cfg;
  cfg.input_size = 5;
  cfg.hidden_size = 4;
  const NetworkParams p = init_params(cfg, 12);
  Rng rng(13);
  for (int i = 0; i < 20; ++i) {
    Vector w(5);
    for (int j = 0; j < 5; ++j) w[j] = rng.uniform(-3, 3);
    const Prediction pred = predict(p, w);
    CHECK(pred.probabilities.size() == 3);
    CHECK(pred.probabilities.minCoeff() >= 0.0);
    CHECK(std::abs(pred.probabilities.sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("a saturated zero-loss batch yields near-zero gradients") {
  NetworkConfig cfg;
  cfg.input_size = 4;
  cfg.hidden_size = 3;
  cfg.output_size = 1;
  NetworkParams p = zero_weight_params(cfg);
  p.head_b[0] = 50.0;  // logit 50 for every input

  Matrix windows = Matrix::Random(4, 6);
  const std::vector<int> ones(6, 1);
  double l = 0;
  const Gradients g = gradient_batch(p, windows, ones, Mode::Eval, 0, &l);
  CHECK(l < 1e-20);
  double max_abs = 0;
  visit_tensors(g, [&](const auto& t) {
    if (t.size()) max_abs = std::max(max_abs, t.cwiseAbs().maxCoeff());
  });
  CHECK(max_abs <= 1e-12);
}

TEST_CASE("analytic gradients match central finite differences on tiny configs") {
  // 20 seeded configurations spanning layers, modes, output sizes and dropout
  int done = 0;
  Rng rng(0xabcdef);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkConfig cfg;
    cfg.input_size = 2 + static_cast<int>(rng.below(7));  // <= 8
    cfg.hidden_size = 2 + static_cast<int>(rng.below(5));  // <= 6
    cfg.num_layers = trial % 3 == 0 ? 1 : 2;
    cfg.output_size = trial % 2 == 0 ? 3 : 1;
    cfg.sequence_mode = trial % 4 == 2 ? SequenceMode::Sequential : SequenceMode::Flat;
    const int batch = 1 + static_cast<int>(rng.below(3));
    const double dropout = (cfg.num_layers > 1 && trial % 5 == 0) ? 0.2 : 0.0;
    check_gradients(cfg, 1000 + static_cast<std::uint64_t>(trial), batch, dropout);
    ++done;
  }
  CHECK(done == 20);
}

TEST_CASE("a batch of two identical samples equals the single-sample gradient") {
  NetworkConfig cfg;
  cfg.input_size = 6;
  cfg.hidden_size = 4;
  const NetworkParams p = init_params(cfg, 3);
  Rng rng(4);
  Vector w(6);
  for (int j = 0; j < 6; ++j) w[j] = rng.uniform(-1, 1);
  Matrix one(6, 1), two(6, 2);
  one.col(0) = w;
  two.col(0) = w;
  two.col(1) = w;

  // equal up to kernel-order rounding: the 1-column and 2-column matrix
  // products reduce their sums in different orders
  const Gradients g1 = gradient_batch(p, one, {2}, Mode::Eval, 0);
  const Gradients g2 = gradient_batch(p, two, {2, 2}, Mode::Eval, 0);
  for (std::size_t l = 0; l < g1.layers.size(); ++l) {
    CHECK(g1.layers[l].w_ih.isApprox(g2.layers[l].w_ih, 1e-12));
    CHECK(g1.layers[l].w_hh.isApprox(g2.layers[l].w_hh, 1e-12));
    CHECK(g1.layers[l].b_ih.isApprox(g2.layers[l].b_ih, 1e-12));
  }
  CHECK(g1.head_w.isApprox(g2.head_w, 1e-12));
  CHECK(g1.head_b.isApprox(g2.head_b, 1e-12));
}

TEST_CASE("rmsprop update rule") {
  NetworkConfig cfg;
  cfg.input_size = 1;
  cfg.hidden_size = 1;
  cfg.num_layers = 1;
  cfg.output_size = 1;

  SUBCASE("zero gradient leaves parameters and state untouched") {
    NetworkParams p = init_params(cfg, 9);
    const NetworkParams before = p;
    RmsPropState state = make_rmsprop_state(cfg);
    rmsprop_step(p, zero_gradients(cfg), state);
    CHECK(p.head_w == before.head_w);
    CHECK(p.layers[0].w_ih == before.layers[0].w_ih);
    CHECK(state.mean_square.head_w.isZero(0));
  }

  SUBCASE("first step from v = 0 with unit gradient") {
    NetworkParams p = zero_weight_params(cfg);
    RmsPropState state = make_rmsprop_state(cfg);  // lr 1e-3, alpha 0.9, eps 1e-8
    Gradients g = zero_gradients(cfg);
    g.head_w(0, 0) = 1.0;
    rmsprop_step(p, g, state);
    const double expected = -1e-3 / (std::sqrt(0.1) + 1e-8);
    CHECK(p.head_w(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(expected == doctest::Approx(-3.1623e-3).epsilon(1e-4));
    CHECK(p.head_b.isZero(0));  // untouched entries stay put
  }

  SUBCASE("constant gradient converges to a step of size lr") {
    NetworkParams p = zero_weight_params(cfg);
    RmsPropState state = make_rmsprop_state(cfg);
    Gradients g = zero_gradients(cfg);
    g.head_w(0, 0) = 1.0;
    double prev = 0, step = 0;
    for (int i = 0; i < 3000; ++i) {
      prev = p.head_w(0, 0);
      rmsprop_step(p, g, state);
      step = std::abs(p.head_w(0, 0) - prev);
    }
    CHECK(step == doctest::Approx(1e-3).epsilon(1e-3));
  }
}

TEST_CASE("fit learns a separable problem to training accuracy 1.0") {
  NetworkConfig cfg;
  cfg.input_size = 10;
  cfg.hidden_size = 16;
  cfg.output_size = 3;
  cfg.epochs = 100;
  cfg.batch_size = 8;

  Rng rng(21);
  Matrix windows(10, 100);
  std::vector<int> classes(100);
  for (int i = 0; i < 100; ++i) {
    const int cls = i % 3;
    classes[static_cast<std::size_t>(i)] = cls;
    for (int j = 0; j < 10; ++j) windows(j, i) = rng.uniform(-0.5, 0.5);
    windows(0, i) = (cls - 1) * 5.0 + rng.uniform(-0.5, 0.5);  // separable by feature 0
  }

  const FitResult result = fit(windows, classes, cfg, {});
  CHECK(result.history.size() == 100);
  CHECK(result.history.back().train_accuracy == 1.0);
  CHECK(result.history.back().mean_loss < result.history.front().mean_loss);
}

TEST_CASE("learning rate zero keeps parameters bitwise at initialization") {
  NetworkConfig cfg;
  cfg.input_size = 6;
  cfg.hidden_size = 4;
  cfg.epochs = 3;
  FitOptions opt;
  opt.init_seed = 55;
  opt.rmsprop.learning_rate = 0.0;

  Matrix windows = Matrix::Random(6, 20);
  std::vector<int> classes(20);
  for (std::size_t i = 0; i < 20; ++i) classes[i] = static_cast<int>(i % 3);

  const FitResult result = fit(windows, classes, cfg, opt);
  const NetworkParams reference = init_params(cfg, 55);
  for (std::size_t l = 0; l < reference.layers.size(); ++l) {
    CHECK(result.params.layers[l].w_ih == reference.layers[l].w_ih);
    CHECK(result.params.layers[l].w_hh == reference.layers[l].w_hh);
    CHECK(result.params.layers[l].b_ih == reference.layers[l].b_ih);
    CHECK(result.params.layers[l].b_hh == reference.layers[l].b_hh);
  }
  CHECK(result.params.head_w == reference.head_w);
  CHECK(result.params.head_b == reference.head_b);
}

TEST_CASE("fit is bitwise deterministic for a fixed seed") {
  NetworkConfig cfg;
  cfg.input_size = 8;
  cfg.hidden_size = 5;
  cfg.epochs = 4;
  Matrix windows = Matrix::Random(8, 50);
  std::vector<int> classes(50);
  for (std::size_t i = 0; i < 50; ++i) classes[i] = static_cast<int>(i % 3);

  const FitResult a = fit(windows, classes, cfg, {});
  const FitResult b = fit(windows, classes, cfg, {});
  for (std::size_t l = 0; l < a.params.layers.size(); ++l) {
    CHECK(a.params.layers[l].w_ih == b.params.layers[l].w_ih);
    CHECK(a.params.layers[l].w_hh == b.params.layers[l].w_hh);
  }
  CHECK(a.params.head_w == b.params.head_w);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].mean_loss == b.history[e].mean_loss);
    CHECK(a.history[e].train_accuracy == b.history[e].train_accuracy);
  }

  CHECK_THROWS_AS(fit(Matrix(8, 0), {}, cfg, {}), ValidationError);
}

TEST_CASE("dropout masks are unbiased in expectation") {
  const int size = 64;
  const int draws = 100000;
  Rng rng(77);
  Vector h(size);
  for (int i = 0; i < size; ++i) h[i] = 0.5 + 1.5 * rng.uniform01();

  Vector sum = Vector::Zero(size);
  for (int d = 0; d < draws; ++d) {
    const Matrix mask = dropout_mask(size, 1, 0.2, rng);
    sum += mask.col(0).cwiseProduct(h);
  }
  const Vector mean = sum / draws;
  for (int i = 0; i < size; ++i)
    CHECK(std::abs(mean[i] - h[i]) / h[i] < 0.01);
}

TEST_CASE("decisions: argmax ties go to the lowest class, binary threshold at 0") {
  NetworkConfig cfg;
  cfg.input_size = 2;
  cfg.hidden_size = 2;
  cfg.num_layers = 1;

  SUBCASE("dominant logit wins with overwhelming probability") {
    cfg.output_size = 3;
    NetworkParams p = zero_weight_params(cfg);
    p.head_b << 10.0, 0.0, 0.0;
    const Prediction pred = predict(p, Vector::Zero(2));
    CHECK(pred.cls == 0);  // LCL slot
    CHECK(pred.probabilities[0] >= 0.9999);
  }
  SUBCASE("all-equal logits pick class 0") {
    cfg.output_size = 3;
    const NetworkParams p = zero_weight_params(cfg);
    CHECK(predict(p, Vector::Zero(2)).cls == 0);
  }
  SUBCASE("binary logit exactly zero is class 0") {
    cfg.output_size = 1;
    const NetworkParams p = zero_weight_params(cfg);
    const Prediction pred = predict(p, Vector::Zero(2));
    CHECK(pred.cls == 0);
    CHECK(pred.probabilities[1] == 0.5);
  }
  SUBCASE("argmax is invariant under positive logit rescaling") {
    cfg.output_size = 3;
    Rng rng(91);
    for (int i = 0; i < 30; ++i) {
      NetworkParams p = zero_weight_params(cfg);
      p.head_b << rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2);
      const int base = predict(p, Vector::Zero(2)).cls;
      p.head_b *= 3.7;
      CHECK(predict(p, Vector::Zero(2)).cls == base);
    }
  }
}

TEST_CASE("model files round-trip byte-identically") {
  NetworkConfig cfg;
  cfg.input_size = 10;
  cfg.hidden_size = 6;
  NetworkParams p = init_params(cfg, 2);
  features::Normalization norm;
  norm.mean = Vector::LinSpaced(10, -1, 1);
  norm.stddev = Vector::Constant(10, 2.0);
  p.normalization = norm;

  const auto dir = std::filesystem::temp_directory_path() / "lcf_seqnet_test";
  std::filesystem::create_directories(dir);

  for (Precision prec : {Precision::F64, Precision::F32}) {
    const auto path = dir / (prec == Precision::F64 ? "m64.lcfm" : "m32.lcfm");
    const auto path2 = dir / "again.lcfm";
    save_model(p, path, prec, {{"note", "round-trip"}});
    const LoadedModel loaded = load_model(path);
    CHECK(loaded.precision == prec);
    CHECK(loaded.meta.at("note") == "round-trip");
    CHECK(loaded.params.normalization.has_value());
    CHECK(loaded.params.normalization->mean == norm.mean);
    save_model(loaded.params, path2, prec, loaded.meta);

    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);
    if (prec == Precision::F64) {
      // lossless: parameters compare bitwise
      CHECK(loaded.params.head_w == p.head_w);
      CHECK(loaded.params.layers[0].w_ih == p.layers[0].w_ih);
    }
  }

  SUBCASE("tampered magic bytes are rejected") {
    const auto path = dir / "m64.lcfm";
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XX", 2);
    f.close();
    CHECK_THROWS_AS(load_model(path), ParseError);
  }
  SUBCASE("truncated parameter block is rejected") {
    save_model(p, dir / "trunc.lcfm", Precision::F64);
    const auto size = std::filesystem::file_size(dir / "trunc.lcfm");
    std::filesystem::resize_file(dir / "trunc.lcfm", size - 9);
    CHECK_THROWS_AS(load_model(dir / "trunc.lcfm"), ParseError);
  }
}

TEST_CASE("history CSV has the documented shape") {
  const std::vector<EpochStats> history = {{1, 1.0986, 0.33}, {2, 0.5, 0.9}};
  const auto path = std::filesystem::temp_directory_path() / "lcf_history_test.csv";
  write_history_csv(history, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,meanLoss,trainAccuracy");
  std::getline(in, line);
  CHECK(line == "1,1.0986,0.33");
}
