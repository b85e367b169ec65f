#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "drivesig/classifier.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/lstm.hpp"
#include "drivesig/model_file.hpp"
#include "drivesig/pipeline.hpp"
#include "drivesig/synth.hpp"
#include "drivesig/training.hpp"
#include "helpers.hpp"

using namespace drivesig;
using testing_helpers::random_matrix;
using testing_helpers::TempDir;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Scalar reference step for a single sequence.
void reference_step(const LstmLayerParams& p, const std::vector<double>& x,
                    std::vector<double>& h, std::vector<double>& c) {
  const std::size_t H = p.hidden_size();
  std::vector<double> z(H + x.size());
  for (std::size_t k = 0; k < H; ++k) z[k] = h[k];
  for (std::size_t k = 0; k < x.size(); ++k) z[H + k] = x[k];
  const auto gate = [&](const Matrix& w, const Matrix& b, std::size_t r) {
    double s = b(r, 0);
    for (std::size_t j = 0; j < z.size(); ++j) s += w(r, j) * z[j];
    return s;
  };
  std::vector<double> nh(H), nc(H);
  for (std::size_t r = 0; r < H; ++r) {
    const double f = sig(gate(p.w_forget, p.b_forget, r));
    const double i = sig(gate(p.w_input, p.b_input, r));
    const double g = std::tanh(gate(p.w_candidate, p.b_candidate, r));
    const double o = sig(gate(p.w_output, p.b_output, r));
    nc[r] = f * c[r] + i * g;
    nh[r] = o * std::tanh(nc[r]);
  }
  h = nh;
  c = nc;
}

std::vector<double> reference_forward(const LstmModel& m, const Matrix& window) {
  std::vector<std::vector<double>> seq(window.rows());
  for (std::size_t t = 0; t < window.rows(); ++t)
    seq[t].assign(window.row(t).begin(), window.row(t).end());
  for (const auto& layer : m.layers) {
    std::vector<double> h(layer.hidden_size(), 0.0), c(layer.hidden_size(), 0.0);
    for (auto& x : seq) {
      reference_step(layer, x, h, c);
      x = h;
    }
  }
  const std::vector<double>& last = seq.back();
  std::vector<double> logits(m.head.weights.rows());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    logits[k] = m.head.bias(k, 0);
    for (std::size_t j = 0; j < last.size(); ++j) logits[k] += m.head.weights(k, j) * last[j];
  }
  double mx = *std::max_element(logits.begin(), logits.end()), sum = 0.0;
  for (double& l : logits) sum += (l = std::exp(l - mx));
  for (double& l : logits) l /= sum;
  return logits;
}

LstmModel small_model(std::vector<std::size_t> hidden, std::size_t input, std::size_t window,
                      std::size_t classes, std::uint64_t seed) {
  ModelConfig cfg;
  cfg.hidden_sizes = std::move(hidden);
  cfg.window_length = window;
  cfg.num_classes = classes;
  SeededRng rng(seed);
  LstmModel m = LstmModel::initialize(cfg, input, rng);
  // Non-zero biases so their gradients are exercised.
  for (auto& l : m.layers)
    for (Matrix* b : {&l.b_forget, &l.b_input, &l.b_candidate, &l.b_output})
      for (double& v : b->values()) v = rng.uniform(-0.5, 0.5);
  for (double& v : m.head.bias.values()) v = rng.uniform(-0.5, 0.5);
  return m;
}

std::vector<const Matrix*> pointers(const std::vector<Matrix>& ws) {
  std::vector<const Matrix*> out;
  for (const auto& w : ws) out.push_back(&w);
  return out;
}

PreparedData separated_data(std::size_t rows_per_trip = 400, std::size_t window = 8) {
  SynthOptions opts;
  opts.rows_per_trip = rows_per_trip;
  opts.trips_per_driver = 2;
  opts.feature_count = 4;
  opts.seed = 5;
  opts.max_window = window;
  PipelineSettings s;
  s.window.length = window;
  return prepare_data(generate(separated_profiles(4), opts), s);
}

}  // namespace

TEST(CellStep, ZeroWeightsHandExample) {
  const LstmLayerParams p = LstmLayerParams::zeros(1, 1);
  LstmState prev = LstmState::zeros(1);
  prev.c(0, 0) = 1.0;
  const LstmState next = cell_step(std::vector<double>{3.0}, prev, p);
  EXPECT_NEAR(next.c(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(next.h(0, 0), 0.5 * std::tanh(0.5), 1e-15);
  EXPECT_NEAR(next.h(0, 0), 0.23105, 1e-5);
}

TEST(CellStep, MatchesScalarOracleAndGateRanges) {
  SeededRng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t H = 1 + rng.below(5), D = 1 + rng.below(4);
    LstmLayerParams p = LstmLayerParams::glorot(H, D, rng);
    for (Matrix* b : {&p.b_forget, &p.b_input, &p.b_candidate, &p.b_output})
      for (double& v : b->values()) v = rng.uniform(-1, 1);
    LstmState prev{random_matrix(H, 1, rng), random_matrix(H, 1, rng, -2, 2)};
    std::vector<double> x(D);
    for (double& v : x) v = rng.uniform(-3, 3);
    GateActivations g;
    const LstmState next = cell_step(x, prev, p, &g);

    std::vector<double> h(prev.h.values().begin(), prev.h.values().end());
    std::vector<double> c(prev.c.values().begin(), prev.c.values().end());
    reference_step(p, x, h, c);
    for (std::size_t k = 0; k < H; ++k) {
      EXPECT_NEAR(next.h(k, 0), h[k], 1e-12);
      EXPECT_NEAR(next.c(k, 0), c[k], 1e-12);
      for (const Matrix* m : {&g.forget, &g.input, &g.output}) {
        EXPECT_GT((*m)(k, 0), 0.0);
        EXPECT_LT((*m)(k, 0), 1.0);
      }
      EXPECT_LE(std::abs(g.candidate(k, 0)), 1.0);
      EXPECT_LE(std::abs(next.h(k, 0)), 1.0);
    }
  }
}

TEST(CellStep, ShapeMismatch) {
  const LstmLayerParams p = LstmLayerParams::zeros(3, 2);
  EXPECT_THROW(cell_step(std::vector<double>{1.0}, LstmState::zeros(3), p), ShapeError);
  EXPECT_THROW(cell_step(std::vector<double>{1.0, 2.0}, LstmState::zeros(2), p), ShapeError);
}

TEST(Forward, ZeroHeadGivesUniform) {
  LstmModel m = small_model({4}, 3, 5, 4, 1);
  m.head.weights.fill(0.0);
  m.head.bias.fill(0.0);
  SeededRng rng(2);
  const Matrix probs = forward(random_matrix(5, 3, rng), m);
  for (double p : probs.values()) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(Forward, ProbabilitiesSumToOneAndMatchOracle) {
  SeededRng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const LstmModel m = small_model({1 + rng.below(4), 1 + rng.below(3)}, 1 + rng.below(3),
                                    1 + rng.below(6), 2 + rng.below(3), trial);
    const Matrix w = random_matrix(m.config.window_length, m.input_size, rng, -2, 2);
    const Matrix probs = forward(w, m);
    double sum = 0.0;
    for (double p : probs.values()) sum += p;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const auto ref = reference_forward(m, w);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(probs(k, 0), ref[k], 1e-10);
  }
}

TEST(Forward, BatchEqualsPerWindow) {
  SeededRng rng(8);
  const LstmModel m = small_model({3, 2}, 2, 4, 3, 8);
  std::vector<Matrix> ws;
  for (int i = 0; i < 5; ++i) ws.push_back(random_matrix(4, 2, rng));
  const Matrix batch = forward_batch(m, pointers(ws));
  for (std::size_t b = 0; b < ws.size(); ++b) {
    const Matrix single = forward(ws[b], m);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(batch(k, b), single(k, 0), 1e-14);
  }
  EXPECT_THROW(forward(random_matrix(3, 2, rng), m), ShapeError);
}

TEST(Loss, HandExamples) {
  EXPECT_NEAR(cross_entropy(Matrix{{1.0}, {0.0}}, 0), 0.0, 1e-15);
  EXPECT_NEAR(cross_entropy(Matrix{{0.25}, {0.25}, {0.25}, {0.25}}, 2), std::log(4.0), 1e-15);
  EXPECT_NEAR(cross_entropy_from_logits(std::vector<double>{0, 0, 0, 0}, 1), std::log(4.0), 1e-15);
  EXPECT_THROW(cross_entropy(Matrix{{0.5}, {0.5}}, 2), ShapeError);
  EXPECT_THROW(cross_entropy_from_logits(std::vector<double>{0, 0}, 5), ShapeError);
  // Large logits stay finite through log-sum-exp.
  EXPECT_NEAR(cross_entropy_from_logits(std::vector<double>{1000, 0}, 1), 1000.0, 1e-9);
}

TEST(Gradients, MatchFiniteDifferences) {
  SeededRng rng(13);
  LstmModel m = small_model({3, 2}, 2, 4, 3, 13);
  std::vector<Matrix> ws;
  for (int i = 0; i < 3; ++i) ws.push_back(random_matrix(4, 2, rng, -1, 1));
  const std::vector<std::size_t> labels{0, 2, 1};
  const auto ptrs = pointers(ws);
  std::vector<Matrix> grads;
  loss_and_gradients(m, ptrs, labels, &grads);
  auto params = m.parameters();
  const auto names = m.parameter_names();
  ASSERT_EQ(grads.size(), params.size());
  const double eps = 1e-5;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ASSERT_TRUE(grads[p].same_shape(*params[p])) << names[p];
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      const double saved = (*params[p])[i];
      (*params[p])[i] = saved + eps;
      const double up = loss_and_gradients(m, ptrs, labels, nullptr);
      (*params[p])[i] = saved - eps;
      const double down = loss_and_gradients(m, ptrs, labels, nullptr);
      (*params[p])[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double analytic = grads[p][i];
      const double denom = std::max(std::abs(numeric) + std::abs(analytic), 1e-6);
      EXPECT_LT(std::abs(numeric - analytic) / denom, 1e-4)
          << names[p] << "[" << i << "] analytic " << analytic << " numeric " << numeric;
    }
  }
}

TEST(Gradients, HeadBiasIsProbabilityMinusOneHot) {
  SeededRng rng(14);
  const LstmModel m = small_model({3}, 2, 3, 4, 14);
  const Matrix w = random_matrix(3, 2, rng);
  const Matrix probs = forward(w, m);
  const auto grads = backward(w, 1, m);
  const Matrix& gb = grads.back();
  for (std::size_t k = 0; k < 4; ++k)
    EXPECT_NEAR(gb(k, 0), probs(k, 0) - (k == 1 ? 1.0 : 0.0), 1e-12);
}

TEST(Gradients, DuplicatedBatchEqualsSingleSample) {
  SeededRng rng(15);
  const LstmModel m = small_model({3, 2}, 2, 3, 3, 15);
  const Matrix w = random_matrix(3, 2, rng);
  const auto single = backward(w, 2, m);
  const std::vector<const Matrix*> dup{&w, &w, &w};
  const std::vector<std::size_t> labels{2, 2, 2};
  std::vector<Matrix> grads;
  const double loss = loss_and_gradients(m, dup, labels, &grads);
  EXPECT_NEAR(loss, cross_entropy(forward(w, m), 2), 1e-12);
  for (std::size_t p = 0; p < grads.size(); ++p)
    for (std::size_t i = 0; i < grads[p].size(); ++i)
      EXPECT_NEAR(grads[p][i], single[p][i], 1e-12);
}

TEST(Predict, ArgmaxAndTies) {
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.7, 0.2}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{0.4, 0.4, 0.2}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1u);
  SeededRng rng(16);
  const LstmModel m = small_model({4}, 3, 5, 3, 16);
  for (int i = 0; i < 20; ++i) {
    const Matrix w = random_matrix(5, 3, rng, -2, 2);
    const Matrix probs = forward(w, m);
    const Prediction p = predict(w, m);
    EXPECT_EQ(p.label, argmax(probs.values()));
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(p.probabilities[k], probs(k, 0));
  }
}

TEST(Forward, HeadRowPermutationPermutesProbabilities) {
  SeededRng rng(17);
  const LstmModel m = small_model({3}, 2, 4, 4, 17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::size_t> perm(4);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    LstmModel q = m;
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t j = 0; j < 3; ++j) q.head.weights(k, j) = m.head.weights(perm[k], j);
      q.head.bias(k, 0) = m.head.bias(perm[k], 0);
    }
    const Matrix w = random_matrix(4, 2, rng);
    const Matrix a = forward(w, m), b = forward(w, q);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(b(k, 0), a(perm[k], 0), 1e-14);
  }
}

TEST(Training, ZeroEpochsReturnsEmptyHistory) {
  const PreparedData d = separated_data();
  ModelConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.num_classes = 2;
  cfg.max_epochs = 0;
  ModelConfig init_cfg = cfg;
  init_cfg.window_length = d.train_windows.window_length;
  const auto r = train_lstm(d.train_windows, d.validation_windows, cfg, 3);
  EXPECT_TRUE(r.history.epochs.empty());
  EXPECT_EQ(r.history.best_epoch, 0u);
  // The parameters are the seeded initialization.
  SeededRng rng(3);
  const LstmModel init = LstmModel::initialize(init_cfg, d.train_windows.feature_count(), rng);
  EXPECT_EQ(r.model.head.weights, init.head.weights);
}

TEST(Training, DeterministicForFixedSeed) {
  const PreparedData d = separated_data();
  ModelConfig cfg;
  cfg.hidden_sizes = {4};
  cfg.num_classes = 2;
  cfg.max_epochs = 3;
  cfg.batch_size = 16;
  const auto a = train_lstm(d.train_windows, d.validation_windows, cfg, 9);
  const auto b = train_lstm(d.train_windows, d.validation_windows, cfg, 9);
  EXPECT_EQ(a.history.epochs, b.history.epochs);
  EXPECT_EQ(a.model.head.weights, b.model.head.weights);
}

TEST(Training, SeparableDriversReachHighValidationF1) {
  const PreparedData d = separated_data(600);
  ModelConfig cfg;
  cfg.hidden_sizes = {8};
  cfg.num_classes = 2;
  cfg.max_epochs = 30;
  cfg.batch_size = 16;
  cfg.learning_rate = 1e-2;
  const auto r = train_lstm(d.train_windows, d.validation_windows, cfg, 4);
  EXPECT_GE(r.history.best_val_macro_f1, 0.95);
  EXPECT_LE(r.history.epochs.size(), 30u);
}

TEST(Training, EmptySetIsAnError) {
  WindowSet empty;
  empty.window_length = 8;
  ModelConfig cfg;
  cfg.hidden_sizes = {2};
  try {
    train_lstm(empty, empty, cfg, 1);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.kind(), TrainingErrorKind::kEmptySet);
  }
}

TEST(Training, InvalidConfigIsTrainingError) {
  const PreparedData d = separated_data();
  ModelConfig cfg;
  cfg.hidden_sizes = {2};
  cfg.batch_size = 0;
  try {
    train_lstm(d.train_windows, d.validation_windows, cfg, 1);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.kind(), TrainingErrorKind::kInvalidConfig);
  }
  cfg.batch_size = 4;
  cfg.learning_rate = -1;
  EXPECT_THROW(train_lstm(d.train_windows, d.validation_windows, cfg, 1), TrainingError);
}

TEST(Training, DivergenceReportsEpoch) {
  Matrix param{{0.0}};
  int calls = 0;
  TrainingProblem problem;
  problem.parameters = {&param};
  problem.sample_count = 4;
  problem.batch_gradient = [&](std::span<const std::size_t>, std::vector<Matrix>& grads) {
    grads.assign(1, Matrix{{1.0}});
    // Two batches per epoch; the fifth call falls in epoch 3.
    return ++calls >= 5 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  problem.validation_macro_f1 = [] { return 0.5; };
  TrainingSchedule schedule;
  schedule.batch_size = 2;
  schedule.max_epochs = 10;
  schedule.patience = 0;
  SeededRng rng(1);
  try {
    run_mini_batch_training(problem, schedule, rng);
    FAIL();
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.kind(), TrainingErrorKind::kDivergence);
    EXPECT_EQ(e.epoch(), 3u);
    EXPECT_NE(std::string(e.what()).find("epoch 3"), std::string::npos);
  }
}

TEST(Training, EarlyStoppingRestoresBestSnapshot) {
  Matrix param{{0.0}};
  TrainingProblem problem;
  problem.parameters = {&param};
  problem.sample_count = 1;
  problem.batch_gradient = [](std::span<const std::size_t>, std::vector<Matrix>& grads) {
    grads.assign(1, Matrix{{-1.0}});
    return 1.0;
  };
  std::vector<double> scores{0.2, 0.9, 0.5, 0.4, 0.3, 0.95};
  std::size_t epoch = 0;
  std::vector<double> param_at_epoch;
  problem.validation_macro_f1 = [&] {
    param_at_epoch.push_back(param(0, 0));
    return scores[epoch++];
  };
  TrainingSchedule schedule;
  schedule.batch_size = 1;
  schedule.max_epochs = 6;
  schedule.patience = 3;
  schedule.learning_rate = 0.1;
  SeededRng rng(1);
  const TrainingHistory h = run_mini_batch_training(problem, schedule, rng);
  EXPECT_TRUE(h.stopped_early);
  EXPECT_EQ(h.epochs.size(), 5u);
  EXPECT_EQ(h.best_epoch, 2u);
  EXPECT_DOUBLE_EQ(h.best_val_macro_f1, 0.9);
  EXPECT_EQ(param(0, 0), param_at_epoch[1]);
}

TEST(Training, LossFallsOnRepeatedSample) {
  SeededRng rng(18);
  WindowSet set;
  set.window_length = 4;
  set.label_names = {"a", "b"};
  Window w;
  w.values = random_matrix(4, 2, rng);
  w.label = 1;
  set.windows.assign(8, w);
  ModelConfig cfg;
  cfg.hidden_sizes = {3};
  cfg.num_classes = 2;
  cfg.max_epochs = 40;
  cfg.early_stop_patience = 0;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  const auto r = train_lstm(set, set, cfg, 2);
  ASSERT_EQ(r.history.epochs.size(), 40u);
  for (std::size_t e = 1; e < r.history.epochs.size(); ++e)
    EXPECT_LT(r.history.epochs[e].train_loss, r.history.epochs[e - 1].train_loss) << e;
}

TEST(ClipGradients, ScalesToMaxNorm) {
  std::vector<Matrix> g{Matrix{{3.0}}, Matrix{{4.0}}};
  clip_gradients(g, 1.0);
  EXPECT_NEAR(g[0](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g[1](0, 0), 0.8, 1e-15);
  std::vector<Matrix> small{Matrix{{0.1}}};
  clip_gradients(small, 1.0);
  EXPECT_EQ(small[0](0, 0), 0.1);
}

// ---- model files -----------------------------------------------------------

namespace {

TrainOutcome tiny_trained(ModelKind kind, const PreparedData& d) {
  ModelTrainingOptions opts;
  opts.seed = 2;
  opts.lstm.hidden_sizes = {3, 2};
  opts.lstm.max_epochs = 2;
  opts.lstm.batch_size = 32;
  opts.fcnn = opts.lstm;
  opts.forest.n_trees = 3;
  opts.forest.max_depth = 3;
  opts.tree.max_depth = 4;
  return train_model(kind, d, opts);
}

}  // namespace

TEST(ModelFile, RoundTripIsExactForEveryKind) {
  const PreparedData d = separated_data(200);
  TempDir dir;
  for (ModelKind kind : {ModelKind::kLstm, ModelKind::kTree, ModelKind::kForest, ModelKind::kFcnn}) {
    const TrainedModel m = tiny_trained(kind, d).model;
    const std::string path = dir.file(std::string(to_string(kind)) + ".dsm");
    save_model(m, path);
    const TrainedModel back = load_model(path);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.label_names, m.label_names);
    EXPECT_EQ(back.feature_names, m.feature_names);
    EXPECT_EQ(back.scaler, m.scaler);
    EXPECT_EQ(back.pipeline.window.length, m.pipeline.window.length);
    EXPECT_EQ(serialize_model(back), serialize_model(m)) << to_string(kind);
    const auto p1 = predict_windows(m, d.test_windows), p2 = predict_windows(back, d.test_windows);
    ASSERT_EQ(p1.size(), p2.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
      EXPECT_EQ(p1[i].label, p2[i].label);
      EXPECT_EQ(p1[i].probabilities, p2[i].probabilities);
    }
  }
}

TEST(ModelFile, OtherVersionIsVersionError) {
  const PreparedData d = separated_data(200);
  std::string text = serialize_model(tiny_trained(ModelKind::kTree, d).model);
  const auto pos = text.find("DRIVESIG-MODEL 1");
  ASSERT_EQ(pos, 0u);
  text.replace(0, 16, "DRIVESIG-MODEL 2");
  EXPECT_THROW(parse_model(text), ModelVersionError);
}

TEST(ModelFile, TruncatedOrFlippedIsCorrupt) {
  const PreparedData d = separated_data(200);
  const std::string text = serialize_model(tiny_trained(ModelKind::kFcnn, d).model);
  EXPECT_THROW(parse_model(text.substr(0, text.size() / 2)), ModelCorruptError);
  EXPECT_THROW(parse_model(text.substr(0, text.size() - 3)), ModelCorruptError);
  SeededRng rng(3);
  for (int i = 0; i < 20; ++i) {
    std::string bad = text;
    // Skip the magic line so the flip lands in the body.
    const std::size_t at = 20 + rng.below(bad.size() - 40);
    bad[at] = bad[at] == '1' ? '2' : '1';
    if (bad == text) continue;
    EXPECT_THROW(parse_model(bad), ModelCorruptError) << "offset " << at;
  }
  EXPECT_THROW(parse_model("not a model"), ModelFileError);
}

TEST(ModelFile, MissingFileNamesPath) {
  try {
    load_model("/no/such/model.dsm");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_EQ(e.kind(), DataErrorKind::kMissingFile);
    EXPECT_NE(std::string(e.what()).find("/no/such/model.dsm"), std::string::npos);
  }
}
