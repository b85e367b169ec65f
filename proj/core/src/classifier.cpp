#include "drivesig/classifier.hpp"

#include <map>

#include "drivesig/errors.hpp"
#include "drivesig/training.hpp"

namespace drivesig {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLstm:
      return "lstm";
    case ModelKind::kTree:
      return "tree";
    case ModelKind::kForest:
      return "forest";
    case ModelKind::kFcnn:
      return "fcnn";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  static const std::map<std::string_view, ModelKind> kinds = {{"lstm", ModelKind::kLstm},
                                                              {"tree", ModelKind::kTree},
                                                              {"forest", ModelKind::kForest},
                                                              {"fcnn", ModelKind::kFcnn}};
  auto it = kinds.find(name);
  if (it == kinds.end()) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "unknown model kind '" + std::string(name) +
                        "' (expected lstm, tree, forest or fcnn)");
  }
  return it->second;
}

RowDataset rows_from_table(const FrameTable& table, const std::vector<std::string>& label_names) {
  table.validate();
  RowDataset rows;
  rows.num_classes = label_names.size();
  rows.features = Matrix(table.row_count(), table.feature_count());
  rows.labels.reserve(table.row_count());
  for (std::size_t i = 0; i < table.row_count(); ++i) {
    const auto& src = table.rows[i].values;
    std::copy(src.begin(), src.end(), rows.features.row(i).begin());
    rows.labels.push_back(label_index(label_names, table.rows[i].driver_id));
  }
  return rows;
}

std::size_t window_vote(std::span<const Prediction> rows) {
  if (rows.empty()) return 0;
  const std::size_t classes = rows.front().probabilities.size();
  std::vector<std::size_t> votes(std::max(classes, std::size_t{1}), 0);
  std::vector<double> mass(votes.size(), 0.0);
  for (const auto& p : rows) {
    if (p.label >= votes.size()) {
      votes.resize(p.label + 1, 0);
      mass.resize(p.label + 1, 0.0);
    }
    ++votes[p.label];
    for (std::size_t k = 0; k < p.probabilities.size() && k < mass.size(); ++k) {
      mass[k] += p.probabilities[k];
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < votes.size(); ++k) {
    if (votes[k] > votes[best] || (votes[k] == votes[best] && mass[k] > mass[best])) best = k;
  }
  return best;
}

Prediction predict_row(const TrainedModel& model, std::span<const double> row) {
  Prediction p;
  switch (model.kind) {
    case ModelKind::kTree: {
      const auto& tree = std::get<DecisionTree>(model.model);
      p.probabilities = tree.predict_proba(row);
      p.label = tree.predict(row);
      break;
    }
    case ModelKind::kForest: {
      const auto& forest = std::get<RandomForest>(model.model);
      p.probabilities = forest.predict_proba(row);
      p.label = forest.predict(row);
      break;
    }
    case ModelKind::kFcnn: {
      const auto& net = std::get<FcnnModel>(model.model);
      Matrix in(1, row.size(), std::vector<double>(row.begin(), row.end()));
      const Matrix probs = fcnn_probabilities(net, in);
      p.probabilities.assign(probs.values().begin(), probs.values().end());
      p.label = argmax(p.probabilities);
      break;
    }
    case ModelKind::kLstm:
      throw ShapeError("predict_row: LSTM models classify whole windows");
  }
  return p;
}

namespace {

Prediction aggregate(std::vector<Prediction> rows) {
  Prediction out;
  out.probabilities.assign(rows.front().probabilities.size(), 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < r.probabilities.size(); ++k) out.probabilities[k] += r.probabilities[k];
  for (double& v : out.probabilities) v /= static_cast<double>(rows.size());
  out.label = window_vote(rows);
  return out;
}

std::vector<Prediction> fcnn_window_predictions(const FcnnModel& net, const WindowSet& windows) {
  // All rows of all windows in one pass, then regroup.
  const std::size_t len = windows.window_length;
  const std::size_t d = windows.feature_count();
  std::vector<Prediction> out;
  constexpr std::size_t kChunk = 64;
  for (std::size_t start = 0; start < windows.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, windows.size() - start);
    Matrix rows(n * len, d);
    for (std::size_t w = 0; w < n; ++w) {
      const auto src = windows.windows[start + w].values.values();
      std::copy(src.begin(), src.end(), rows.values().begin() + w * len * d);
    }
    const Matrix probs = fcnn_probabilities(net, rows);
    for (std::size_t w = 0; w < n; ++w) {
      std::vector<Prediction> per_row(len);
      for (std::size_t t = 0; t < len; ++t) {
        auto& p = per_row[t];
        p.probabilities.resize(probs.rows());
        for (std::size_t k = 0; k < probs.rows(); ++k) p.probabilities[k] = probs(k, w * len + t);
        p.label = argmax(p.probabilities);
      }
      out.push_back(aggregate(std::move(per_row)));
    }
  }
  return out;
}

}  // namespace

Prediction predict_window(const TrainedModel& model, const Matrix& window) {
  if (model.kind == ModelKind::kLstm) {
    return predict(window, std::get<LstmModel>(model.model));
  }
  if (window.rows() == 0) throw ShapeError("predict_window: empty window");
  std::vector<Prediction> rows;
  for (std::size_t t = 0; t < window.rows(); ++t) rows.push_back(predict_row(model, window.row(t)));
  return aggregate(std::move(rows));
}

std::vector<Prediction> predict_windows(const TrainedModel& model, const WindowSet& windows) {
  if (windows.empty()) return {};
  if (windows.feature_count() != model.scaler.feature_count() &&
      !model.scaler.min.empty()) {
    throw ShapeError("predict_windows: windows have " + std::to_string(windows.feature_count()) +
                     " features, model expects " + std::to_string(model.scaler.feature_count()));
  }
  switch (model.kind) {
    case ModelKind::kLstm:
      return predict_windows(std::get<LstmModel>(model.model), windows);
    case ModelKind::kFcnn:
      return fcnn_window_predictions(std::get<FcnnModel>(model.model), windows);
    default: {
      std::vector<Prediction> out;
      out.reserve(windows.size());
      for (const auto& w : windows.windows) out.push_back(predict_window(model, w.values));
      return out;
    }
  }
}

}  // namespace drivesig
