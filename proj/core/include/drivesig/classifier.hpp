#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "drivesig/baselines.hpp"
#include "drivesig/data.hpp"
#include "drivesig/lstm.hpp"

namespace drivesig {

enum class ModelKind { kLstm, kTree, kForest, kFcnn };

std::string_view to_string(ModelKind kind);
// Accepts lstm, tree, forest, fcnn.
ModelKind parse_model_kind(std::string_view name);

using ModelVariant = std::variant<LstmModel, DecisionTree, RandomForest, FcnnModel>;

// How raw logs were turned into model inputs; stored with every model so a
// trained file can rebuild the same test split.
struct PipelineSettings {
  std::string label_column = "driver_id";
  std::optional<std::string> trip_column;
  WindowSpec window;
  SplitSpec split;
  bool scale_globally = false;
  bool chronological_split = true;
  std::uint64_t seed = 0;
};

struct TrainedModel {
  ModelKind kind = ModelKind::kLstm;
  ModelVariant model;
  std::vector<std::string> label_names;
  std::vector<std::string> feature_names;
  Scaler scaler;
  PipelineSettings pipeline;

  std::size_t num_classes() const noexcept { return label_names.size(); }
};

// One prediction per window. LSTM models classify whole windows; the row
// baselines classify every row and aggregate with window_vote, reporting the
// mean row probabilities.
std::vector<Prediction> predict_windows(const TrainedModel& model, const WindowSet& windows);
Prediction predict_window(const TrainedModel& model, const Matrix& window);

// Per-row predictions of a row baseline; throws for LSTM models.
Prediction predict_row(const TrainedModel& model, std::span<const double> row);

}  // namespace drivesig
