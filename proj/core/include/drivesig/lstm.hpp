#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "drivesig/data.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

// Gate weights act on the concatenation [h_{t-1}, x_t] (hidden first).
struct LstmLayerParams {
  Matrix w_forget, w_input, w_candidate, w_output;  // hidden x (hidden + input)
  Matrix b_forget, b_input, b_candidate, b_output;  // hidden x 1

  std::size_t hidden_size() const noexcept { return w_forget.rows(); }
  std::size_t input_size() const noexcept { return w_forget.cols() - w_forget.rows(); }

  static LstmLayerParams zeros(std::size_t hidden, std::size_t input);
  static LstmLayerParams glorot(std::size_t hidden, std::size_t input, SeededRng& rng);
};

// h and c are hidden x batch; a single sequence is hidden x 1.
struct LstmState {
  Matrix h;
  Matrix c;

  static LstmState zeros(std::size_t hidden, std::size_t batch = 1) {
    return {Matrix(hidden, batch), Matrix(hidden, batch)};
  }
};

// Gate activations of one step, kept for BPTT and for invariant checks.
struct GateActivations {
  Matrix forget, input, candidate, output;
  Matrix tanh_cell;
};

struct ClassifierHead {
  Matrix weights;  // num_classes x last_hidden
  Matrix bias;     // num_classes x 1
};

struct ModelConfig {
  std::vector<std::size_t> hidden_sizes = {160, 200};
  std::size_t window_length = 16;
  std::size_t num_classes = 2;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t early_stop_patience = 10;
  // Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;

  void validate() const;
};

struct LstmModel {
  ModelConfig config;
  std::size_t input_size = 0;
  std::vector<LstmLayerParams> layers;
  ClassifierHead head;

  static LstmModel initialize(const ModelConfig& config, std::size_t input_size,
                              SeededRng& rng);

  // Fixed order: per layer W_f, W_i, W_c, W_o, b_f, b_i, b_c, b_o; then
  // head weights and head bias.
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::vector<std::string> parameter_names() const;
};

// One LSTM step for a batch (columns of x are samples):
//   f = s(W_f [h, x] + b_f), i = s(W_i [h, x] + b_i), c~ = tanh(W_c [h, x] + b_c)
//   c' = f * c + i * c~,     o = s(W_o [h, x] + b_o), h' = o * tanh(c')
LstmState cell_step(const Matrix& x, const LstmState& prev, const LstmLayerParams& params,
                    GateActivations* gates = nullptr);
LstmState cell_step(std::span<const double> x, const LstmState& prev,
                    const LstmLayerParams& params, GateActivations* gates = nullptr);

// Class logits / probabilities (num_classes x batch) for a batch of windows.
Matrix forward_logits(const LstmModel& model, std::span<const Matrix* const> windows);
Matrix forward_batch(const LstmModel& model, std::span<const Matrix* const> windows);
// Probabilities for a single window, num_classes x 1.
Matrix forward(const Matrix& window, const LstmModel& model);

// Column-wise softmax (max-shifted).
Matrix softmax_columns(const Matrix& logits);

// -log(probs[label]).
double cross_entropy(const Matrix& probs, std::size_t label);
// Same quantity computed from logits with log-sum-exp.
double cross_entropy_from_logits(std::span<const double> logits, std::size_t label);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> probabilities;
};

// Index of the maximum; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> values);

Prediction predict(const Matrix& window, const LstmModel& model);

// Mean cross-entropy over the batch and, if `grads` is non-null, its exact
// gradient with respect to every parameter (same order as parameters()).
double loss_and_gradients(const LstmModel& model, std::span<const Matrix* const> windows,
                          std::span<const std::size_t> labels, std::vector<Matrix>* grads);

std::vector<Matrix> backward(const Matrix& window, std::size_t label, const LstmModel& model);

}  // namespace drivesig
