#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "drivesig/baselines.hpp"
#include "drivesig/classifier.hpp"
#include "drivesig/data.hpp"
#include "drivesig/training.hpp"

namespace drivesig {

// Raw log split, scaled and windowed according to PipelineSettings.
struct PreparedData {
  PipelineSettings settings;
  std::vector<std::string> label_names;
  Scaler scaler;
  FrameTable raw_train, raw_validation, raw_test;
  FrameTable train, validation, test;  // scaled
  WindowSet train_windows, validation_windows, test_windows;

  const std::vector<std::string>& feature_names() const { return train.feature_names; }
};

// Chronological mode splits rows per driver before windowing. Random mode
// windows first and splits windows; each part's table then holds its windows
// back to back, one pseudo-trip per window, so re-windowing a part returns
// exactly its windows.
PreparedData prepare_data(const FrameTable& raw, const PipelineSettings& settings);

// Re-applies a fitted pipeline to new raw rows (e.g. a corrupted copy).
WindowSet windows_for(const FrameTable& scaled, const PipelineSettings& settings,
                      const std::vector<std::string>& label_names);

struct ModelTrainingOptions {
  ModelConfig lstm;
  ModelConfig fcnn;
  TreeConfig tree;
  ForestConfig forest;
  std::uint64_t seed = 0;
  EpochCallback on_epoch;
};

struct TrainOutcome {
  TrainedModel model;
  TrainingHistory history;  // empty for trees and forests
};

TrainOutcome train_model(ModelKind kind, const PreparedData& data,
                         const ModelTrainingOptions& options);

// Train/val/test parts replaced by the given ones (scaled), windows rebuilt.
PreparedData with_tables(const PreparedData& base, FrameTable train, FrameTable validation,
                         FrameTable test);

}  // namespace drivesig
