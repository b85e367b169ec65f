#include "drivesig/training.hpp"

#include <algorithm>
#include <cmath>

#include "drivesig/adam.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/metrics.hpp"

namespace drivesig {

void clip_gradients(std::vector<Matrix>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& g : grads) sq += squared_norm(g);
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto& g : grads)
    for (double& v : g.values()) v *= scale;
}

TrainingSchedule schedule_from(const ModelConfig& config) {
  TrainingSchedule s;
  s.learning_rate = config.learning_rate;
  s.batch_size = config.batch_size;
  s.max_epochs = config.max_epochs;
  s.patience = config.early_stop_patience;
  s.clip_norm = config.clip_norm;
  return s;
}

void check_training_config(const ModelConfig& config) {
  try {
    config.validate();
  } catch (const ShapeError& e) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig, e.what());
  }
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig, "learning rate must be positive");
  }
  if (!(config.clip_norm >= 0.0)) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig, "clip norm must be non-negative");
  }
}

TrainingHistory run_mini_batch_training(TrainingProblem& problem,
                                        const TrainingSchedule& schedule, SeededRng& rng,
                                        const EpochCallback& on_epoch) {
  if (problem.sample_count == 0) {
    throw TrainingError(TrainingErrorKind::kEmptySet, "training set is empty");
  }
  if (schedule.batch_size == 0) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig, "batch size must be positive");
  }
  TrainingHistory history;
  if (schedule.max_epochs == 0) return history;

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = schedule.learning_rate;
  std::vector<const Matrix*> const_params(problem.parameters.begin(), problem.parameters.end());
  AdamState adam(adam_cfg, const_params);

  std::vector<Matrix> best;
  const auto snapshot = [&] {
    best.clear();
    for (const Matrix* p : problem.parameters) best.push_back(*p);
  };
  snapshot();

  std::vector<std::size_t> order(problem.sample_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Matrix> grads;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= schedule.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double loss_sum = 0.0;
    try {
      for (std::size_t start = 0; start < order.size(); start += schedule.batch_size) {
        const std::size_t n = std::min(schedule.batch_size, order.size() - start);
        std::span<const std::size_t> batch(order.data() + start, n);
        const double loss = problem.batch_gradient(batch, grads);
        if (!std::isfinite(loss)) throw NumericError("non-finite loss");
        loss_sum += loss * static_cast<double>(n);
        clip_gradients(grads, schedule.clip_norm);
        adam_update(problem.parameters, grads, adam);
      }
    } catch (const NumericError& e) {
      throw TrainingError(TrainingErrorKind::kDivergence,
                          "training diverged in epoch " + std::to_string(epoch) + ": " + e.what(),
                          epoch);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.val_macro_f1 = problem.validation_macro_f1();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_macro_f1 > history.best_val_macro_f1) {
      history.best_val_macro_f1 = rec.val_macro_f1;
      history.best_epoch = epoch;
      since_best = 0;
      snapshot();
    } else if (schedule.patience > 0 && ++since_best >= schedule.patience) {
      history.stopped_early = true;
      break;
    }
  }
  for (std::size_t k = 0; k < best.size(); ++k) *problem.parameters[k] = best[k];
  return history;
}

std::vector<Prediction> predict_windows(const LstmModel& model, const WindowSet& windows,
                                        std::size_t batch) {
  std::vector<Prediction> out;
  out.reserve(windows.size());
  std::vector<const Matrix*> ptrs;
  for (std::size_t start = 0; start < windows.size(); start += batch) {
    const std::size_t n = std::min(batch, windows.size() - start);
    ptrs.clear();
    for (std::size_t i = 0; i < n; ++i) ptrs.push_back(&windows.windows[start + i].values);
    const Matrix probs = forward_batch(model, ptrs);
    for (std::size_t b = 0; b < n; ++b) {
      Prediction p;
      p.probabilities.resize(probs.rows());
      for (std::size_t k = 0; k < probs.rows(); ++k) p.probabilities[k] = probs(k, b);
      p.label = argmax(p.probabilities);
      out.push_back(std::move(p));
    }
  }
  return out;
}

LstmTrainResult train_lstm(const WindowSet& train, const WindowSet& validation,
                           const ModelConfig& config, std::uint64_t seed,
                           const EpochCallback& on_epoch) {
  if (train.empty() || validation.empty()) {
    throw TrainingError(TrainingErrorKind::kEmptySet,
                        train.empty() ? "training window set is empty"
                                      : "validation window set is empty");
  }
  if (train.feature_count() != validation.feature_count() ||
      train.window_length != validation.window_length) {
    throw ShapeError("train_lstm: training and validation windows differ in shape");
  }
  ModelConfig cfg = config;
  cfg.window_length = train.window_length;
  check_training_config(cfg);
  SeededRng init_rng(seed);
  LstmTrainResult result{LstmModel::initialize(cfg, train.feature_count(), init_rng), {}};
  LstmModel& model = result.model;

  std::vector<const Matrix*> batch_windows;
  std::vector<std::size_t> batch_labels;
  std::vector<std::size_t> val_truth;
  for (const auto& w : validation.windows) val_truth.push_back(w.label);

  TrainingProblem problem;
  problem.parameters = model.parameters();
  problem.sample_count = train.size();
  problem.batch_gradient = [&](std::span<const std::size_t> batch, std::vector<Matrix>& grads) {
    batch_windows.clear();
    batch_labels.clear();
    for (std::size_t i : batch) {
      batch_windows.push_back(&train.windows[i].values);
      batch_labels.push_back(train.windows[i].label);
    }
    return loss_and_gradients(model, batch_windows, batch_labels, &grads);
  };
  problem.validation_macro_f1 = [&] {
    const auto preds = predict_windows(model, validation);
    std::vector<std::size_t> labels;
    for (const auto& p : preds) labels.push_back(p.label);
    return compute_metrics(val_truth, labels, cfg.num_classes).macro_f1;
  };

  SeededRng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  result.history = run_mini_batch_training(problem, schedule_from(cfg), shuffle_rng, on_epoch);
  return result;
}

}  // namespace drivesig
