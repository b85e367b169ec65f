#include <algorithm>

#include "drivesig/baselines.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/metrics.hpp"

namespace drivesig {

FcnnModel FcnnModel::initialize(const ModelConfig& config, std::size_t input_size,
                                SeededRng& rng) {
  config.validate();
  if (input_size == 0) throw ShapeError("FcnnModel: zero input features");
  FcnnModel m;
  m.config = config;
  m.input_size = input_size;
  std::size_t in = input_size;
  std::vector<std::size_t> widths = config.hidden_sizes;
  widths.push_back(config.num_classes);
  for (std::size_t out : widths) {
    m.layers.push_back({glorot_init(out, in, rng), Matrix(out, 1)});
    in = out;
  }
  return m;
}

std::vector<Matrix*> FcnnModel::parameters() {
  std::vector<Matrix*> out;
  for (auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Matrix*> FcnnModel::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& l : layers) {
    out.push_back(&l.weights);
    out.push_back(&l.bias);
  }
  return out;
}

namespace {

// Pre-activations and activations per layer, column-per-sample.
struct Activations {
  std::vector<Matrix> outputs;  // outputs[0] is the transposed input
};

Matrix dense(const DenseLayer& layer, const Matrix& in, bool in_is_rows) {
  Matrix out;
  gemm(layer.weights, false, in, in_is_rows, out);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    const double b = layer.bias[r];
    for (double& v : out.row(r)) v += b;
  }
  return out;
}

Matrix run(const FcnnModel& model, const Matrix& inputs, Activations* acts) {
  if (inputs.cols() != model.input_size) {
    throw ShapeError("fcnn: input rows have " + std::to_string(inputs.cols()) +
                     " features, model expects " + std::to_string(model.input_size));
  }
  if (inputs.rows() == 0) throw ShapeError("fcnn: empty batch");
  if (acts) acts->outputs.assign(1, transpose(inputs));
  Matrix current;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    current = l == 0 ? dense(model.layers[l], inputs, true)
                     : dense(model.layers[l], current, false);
    if (l + 1 < model.layers.size()) {
      for (double& v : current.values()) v = std::max(0.0, v);
    }
    if (acts) acts->outputs.push_back(current);
  }
  return current;
}

}  // namespace

Matrix fcnn_logits(const FcnnModel& model, const Matrix& inputs) {
  return run(model, inputs, nullptr);
}

Matrix fcnn_probabilities(const FcnnModel& model, const Matrix& inputs) {
  return softmax_columns(run(model, inputs, nullptr));
}

double fcnn_loss_and_gradients(const FcnnModel& model, const Matrix& inputs,
                               std::span<const std::size_t> labels,
                               std::vector<Matrix>* grads) {
  if (labels.size() != inputs.rows()) {
    throw ShapeError("fcnn: " + std::to_string(inputs.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  Activations acts;
  const Matrix logits = run(model, inputs, grads ? &acts : nullptr);
  const std::size_t batch = inputs.rows();
  const std::size_t classes = logits.rows();
  double loss = 0.0;
  std::vector<double> column(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < classes; ++k) column[k] = logits(k, b);
    loss += cross_entropy_from_logits(column, labels[b]);
  }
  loss /= static_cast<double>(batch);
  if (!grads) return loss;

  grads->assign(model.layers.size() * 2, Matrix());
  Matrix delta = softmax_columns(logits);
  for (std::size_t b = 0; b < batch; ++b) delta(labels[b], b) -= 1.0;
  for (double& v : delta.values()) v /= static_cast<double>(batch);

  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Matrix& input = acts.outputs[l];
    Matrix& dw = (*grads)[2 * l];
    Matrix& db = (*grads)[2 * l + 1];
    gemm(delta, false, input, true, dw);
    db = Matrix(delta.rows(), 1);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      double s = 0.0;
      for (double v : delta.row(r)) s += v;
      db[r] = s;
    }
    if (l == 0) break;
    Matrix below;
    gemm(model.layers[l].weights, true, delta, false, below);
    // ReLU derivative of the layer below.
    for (std::size_t k = 0; k < below.size(); ++k) {
      if (input[k] <= 0.0) below[k] = 0.0;
    }
    delta = std::move(below);
  }
  return loss;
}

FcnnTrainResult train_fcnn(const RowDataset& train, const RowDataset& validation,
                           const ModelConfig& config, std::uint64_t seed,
                           const EpochCallback& on_epoch) {
  if (train.size() == 0 || validation.size() == 0) {
    throw TrainingError(TrainingErrorKind::kEmptySet,
                        train.size() == 0 ? "fcnn: training rows are empty"
                                          : "fcnn: validation rows are empty");
  }
  check_training_config(config);
  std::vector<std::size_t> per_class(config.num_classes, 0);
  for (std::size_t l : train.labels) {
    if (l >= config.num_classes) throw ShapeError("fcnn: label out of range");
    ++per_class[l];
  }
  if (std::find(per_class.begin(), per_class.end(), 0u) != per_class.end()) {
    throw TrainingError(TrainingErrorKind::kEmptySet,
                        "fcnn: every class needs at least one training row");
  }

  SeededRng init_rng(seed);
  FcnnTrainResult result{FcnnModel::initialize(config, train.feature_count(), init_rng), {}};
  FcnnModel& model = result.model;

  Matrix batch_inputs;
  std::vector<std::size_t> batch_labels;
  TrainingProblem problem;
  problem.parameters = model.parameters();
  problem.sample_count = train.size();
  problem.batch_gradient = [&](std::span<const std::size_t> batch, std::vector<Matrix>& grads) {
    batch_inputs = Matrix(batch.size(), train.feature_count());
    batch_labels.clear();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto src = train.features.row(batch[b]);
      std::copy(src.begin(), src.end(), batch_inputs.row(b).begin());
      batch_labels.push_back(train.labels[batch[b]]);
    }
    return fcnn_loss_and_gradients(model, batch_inputs, batch_labels, &grads);
  };
  problem.validation_macro_f1 = [&] {
    const Matrix probs = fcnn_probabilities(model, validation.features);
    std::vector<std::size_t> pred(validation.size());
    std::vector<double> column(probs.rows());
    for (std::size_t b = 0; b < validation.size(); ++b) {
      for (std::size_t k = 0; k < probs.rows(); ++k) column[k] = probs(k, b);
      pred[b] = argmax(column);
    }
    return compute_metrics(validation.labels, pred, config.num_classes).macro_f1;
  };

  SeededRng shuffle_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  result.history = run_mini_batch_training(problem, schedule_from(config), shuffle_rng, on_epoch);
  return result;
}

}  // namespace drivesig
