#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "drivesig/data.hpp"
#include "drivesig/lstm.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_macro_f1 = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 means the initial parameters were kept
  double best_val_macro_f1 = -1.0;
  bool stopped_early = false;
};

struct TrainingSchedule {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;  // 0 disables early stopping
  double clip_norm = 0.0;     // 0 disables clipping
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// What the mini-batch loop needs from a model.
struct TrainingProblem {
  std::vector<Matrix*> parameters;
  std::size_t sample_count = 0;
  // Mean loss over the batch; fills grads in parameter order.
  std::function<double(std::span<const std::size_t> batch, std::vector<Matrix>& grads)>
      batch_gradient;
  std::function<double()> validation_macro_f1;
};

// Shuffled mini-batch Adam with best-validation snapshotting and patience.
// The parameters are left at the best snapshot. Throws TrainingError on an
// empty problem or when the loss stops being finite.
TrainingHistory run_mini_batch_training(TrainingProblem& problem,
                                        const TrainingSchedule& schedule, SeededRng& rng,
                                        const EpochCallback& on_epoch = {});

TrainingSchedule schedule_from(const ModelConfig& config);

// Throws TrainingError(kInvalidConfig) for a config no training run can use.
void check_training_config(const ModelConfig& config);

struct LstmTrainResult {
  LstmModel model;
  TrainingHistory history;
};

LstmTrainResult train_lstm(const WindowSet& train, const WindowSet& validation,
                           const ModelConfig& config, std::uint64_t seed,
                           const EpochCallback& on_epoch = {});

std::vector<Prediction> predict_windows(const LstmModel& model, const WindowSet& windows,
                                        std::size_t batch = 256);

// Scales every gradient so the global L2 norm is at most max_norm.
void clip_gradients(std::vector<Matrix>& grads, double max_norm);

}  // namespace drivesig
