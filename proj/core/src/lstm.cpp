#include "drivesig/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drivesig/errors.hpp"

namespace drivesig {

LstmLayerParams LstmLayerParams::zeros(std::size_t hidden, std::size_t input) {
  const std::size_t width = hidden + input;
  LstmLayerParams p;
  p.w_forget = p.w_input = p.w_candidate = p.w_output = Matrix(hidden, width);
  p.b_forget = p.b_input = p.b_candidate = p.b_output = Matrix(hidden, 1);
  return p;
}

LstmLayerParams LstmLayerParams::glorot(std::size_t hidden, std::size_t input,
                                        SeededRng& rng) {
  const std::size_t width = hidden + input;
  LstmLayerParams p = zeros(hidden, input);
  p.w_forget = glorot_init(hidden, width, rng);
  p.w_input = glorot_init(hidden, width, rng);
  p.w_candidate = glorot_init(hidden, width, rng);
  p.w_output = glorot_init(hidden, width, rng);
  return p;
}

void ModelConfig::validate() const {
  if (hidden_sizes.empty()) throw ShapeError("ModelConfig: hidden_sizes is empty");
  for (std::size_t h : hidden_sizes) {
    if (h == 0) throw ShapeError("ModelConfig: zero-width hidden layer");
  }
  if (num_classes < 2) throw ShapeError("ModelConfig: num_classes must be at least 2");
  if (window_length < 1) throw ShapeError("ModelConfig: window_length must be positive");
  if (batch_size == 0) throw ShapeError("ModelConfig: batch_size must be positive");
}

LstmModel LstmModel::initialize(const ModelConfig& config, std::size_t input_size,
                                SeededRng& rng) {
  config.validate();
  if (input_size == 0) throw ShapeError("LstmModel: zero input features");
  LstmModel m;
  m.config = config;
  m.input_size = input_size;
  std::size_t in = input_size;
  for (std::size_t h : config.hidden_sizes) {
    m.layers.push_back(LstmLayerParams::glorot(h, in, rng));
    in = h;
  }
  m.head.weights = glorot_init(config.num_classes, in, rng);
  m.head.bias = Matrix(config.num_classes, 1);
  return m;
}

namespace {

template <typename Self>
auto collect_parameters(Self& model) {
  using Ptr = std::conditional_t<std::is_const_v<Self>, const Matrix*, Matrix*>;
  std::vector<Ptr> out;
  for (auto& l : model.layers) {
    for (auto* m : {&l.w_forget, &l.w_input, &l.w_candidate, &l.w_output, &l.b_forget,
                    &l.b_input, &l.b_candidate, &l.b_output}) {
      out.push_back(m);
    }
  }
  out.push_back(&model.head.weights);
  out.push_back(&model.head.bias);
  return out;
}

}  // namespace

std::vector<Matrix*> LstmModel::parameters() { return collect_parameters(*this); }
std::vector<const Matrix*> LstmModel::parameters() const { return collect_parameters(*this); }

std::vector<std::string> LstmModel::parameter_names() const {
  std::vector<std::string> names;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    for (const char* n : {"w_forget", "w_input", "w_candidate", "w_output", "b_forget",
                          "b_input", "b_candidate", "b_output"}) {
      names.push_back(p + n);
    }
  }
  names.push_back("head.weights");
  names.push_back("head.bias");
  return names;
}

namespace {

// Stacks h (hidden x B) over x (input x B).
Matrix concat_rows(const Matrix& h, const Matrix& x) {
  Matrix z(h.rows() + x.rows(), h.cols());
  std::copy(h.values().begin(), h.values().end(), z.values().begin());
  std::copy(x.values().begin(), x.values().end(), z.values().begin() + h.size());
  return z;
}

void add_bias(Matrix& pre, const Matrix& bias) {
  for (std::size_t r = 0; r < pre.rows(); ++r) {
    const double b = bias[r];
    for (double& v : pre.row(r)) v += b;
  }
}

// Accumulates row sums of `delta` into `bias_grad`.
void add_row_sums(const Matrix& delta, Matrix& bias_grad) {
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    double s = 0.0;
    for (double v : delta.row(r)) s += v;
    bias_grad[r] += s;
  }
}

LstmState step_concat(const Matrix& z, const Matrix& prev_c, const LstmLayerParams& p,
                      GateActivations& g) {
  gemm(p.w_forget, false, z, false, g.forget);
  gemm(p.w_input, false, z, false, g.input);
  gemm(p.w_candidate, false, z, false, g.candidate);
  gemm(p.w_output, false, z, false, g.output);
  add_bias(g.forget, p.b_forget);
  add_bias(g.input, p.b_input);
  add_bias(g.candidate, p.b_candidate);
  add_bias(g.output, p.b_output);

  const std::size_t n = g.forget.size();
  LstmState next{Matrix(prev_c.rows(), prev_c.cols()), Matrix(prev_c.rows(), prev_c.cols())};
  g.tanh_cell = Matrix(prev_c.rows(), prev_c.cols());
  for (std::size_t k = 0; k < n; ++k) {
    const double f = sigmoid(g.forget[k]);
    const double i = sigmoid(g.input[k]);
    const double cand = std::tanh(g.candidate[k]);
    const double o = sigmoid(g.output[k]);
    const double c = f * prev_c[k] + i * cand;
    const double tc = std::tanh(c);
    g.forget[k] = f;
    g.input[k] = i;
    g.candidate[k] = cand;
    g.output[k] = o;
    g.tanh_cell[k] = tc;
    next.c[k] = c;
    next.h[k] = o * tc;
  }
  return next;
}

void check_step_shapes(const Matrix& x, const LstmState& prev, const LstmLayerParams& p) {
  if (p.w_forget.cols() < p.w_forget.rows()) {
    throw ShapeError("cell_step: malformed gate weights " + p.w_forget.shape_string());
  }
  const std::size_t hidden = p.hidden_size();
  if (x.rows() != p.input_size()) {
    throw ShapeError("cell_step: input has " + std::to_string(x.rows()) +
                     " features, layer expects " + std::to_string(p.input_size()));
  }
  if (prev.h.rows() != hidden || prev.c.rows() != hidden || prev.h.cols() != x.cols() ||
      prev.c.cols() != x.cols()) {
    throw ShapeError("cell_step: state " + prev.h.shape_string() + "/" +
                     prev.c.shape_string() + " does not match hidden size " +
                     std::to_string(hidden) + " and batch " + std::to_string(x.cols()));
  }
}

// Everything the backward pass needs from one forward pass of one layer.
struct LayerTape {
  std::vector<Matrix> concat;  // [h_{t-1}; x_t]
  std::vector<GateActivations> gates;
  std::vector<Matrix> cell;    // c_t
  std::vector<Matrix> hidden;  // h_t
};

// Time-major inputs: inputs[t] is input x B.
std::vector<Matrix> gather_inputs(const LstmModel& model,
                                  std::span<const Matrix* const> windows) {
  if (windows.empty()) throw ShapeError("forward: empty batch");
  const std::size_t steps = windows.front()->rows();
  const std::size_t batch = windows.size();
  if (steps != model.config.window_length) {
    throw ShapeError("forward: window has " + std::to_string(steps) +
                     " steps, model expects " + std::to_string(model.config.window_length));
  }
  for (const Matrix* w : windows) {
    if (w->rows() != steps || w->cols() != model.input_size || steps == 0) {
      throw ShapeError("forward: window " + w->shape_string() + " does not match " +
                       std::to_string(steps) + "x" + std::to_string(model.input_size));
    }
  }
  std::vector<Matrix> inputs(steps, Matrix(model.input_size, batch));
  for (std::size_t b = 0; b < batch; ++b) {
    const Matrix& w = *windows[b];
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t f = 0; f < model.input_size; ++f) inputs[t](f, b) = w(t, f);
    }
  }
  return inputs;
}

Matrix run_forward(const LstmModel& model, std::span<const Matrix* const> windows,
                   std::vector<LayerTape>* tapes) {
  std::vector<Matrix> seq = gather_inputs(model, windows);
  const std::size_t batch = windows.size();
  if (tapes) tapes->assign(model.layers.size(), {});
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const LstmLayerParams& p = model.layers[l];
    LstmState state = LstmState::zeros(p.hidden_size(), batch);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      Matrix z = concat_rows(state.h, seq[t]);
      GateActivations g;
      state = step_concat(z, state.c, p, g);
      seq[t] = state.h;
      if (tapes) {
        auto& tape = (*tapes)[l];
        tape.concat.push_back(std::move(z));
        tape.gates.push_back(std::move(g));
        tape.cell.push_back(state.c);
        tape.hidden.push_back(state.h);
      }
    }
  }
  Matrix logits;
  gemm(model.head.weights, false, seq.back(), false, logits);
  add_bias(logits, model.head.bias);
  return logits;
}

}  // namespace

LstmState cell_step(const Matrix& x, const LstmState& prev, const LstmLayerParams& params,
                    GateActivations* gates) {
  check_step_shapes(x, prev, params);
  GateActivations local;
  GateActivations& g = gates ? *gates : local;
  return step_concat(concat_rows(prev.h, x), prev.c, params, g);
}

LstmState cell_step(std::span<const double> x, const LstmState& prev,
                    const LstmLayerParams& params, GateActivations* gates) {
  return cell_step(Matrix::column(x), prev, params, gates);
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t b = 0; b < logits.cols(); ++b) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < logits.rows(); ++k) mx = std::max(mx, logits(k, b));
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.rows(); ++k) {
      const double e = std::exp(logits(k, b) - mx);
      out(k, b) = e;
      sum += e;
    }
    for (std::size_t k = 0; k < logits.rows(); ++k) out(k, b) /= sum;
  }
  return out;
}

Matrix forward_logits(const LstmModel& model, std::span<const Matrix* const> windows) {
  return run_forward(model, windows, nullptr);
}

Matrix forward_batch(const LstmModel& model, std::span<const Matrix* const> windows) {
  return softmax_columns(run_forward(model, windows, nullptr));
}

Matrix forward(const Matrix& window, const LstmModel& model) {
  const Matrix* w = &window;
  return forward_batch(model, std::span<const Matrix* const>(&w, 1));
}

double cross_entropy(const Matrix& probs, std::size_t label) {
  if (label >= probs.size()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(probs.size()) + " classes");
  }
  return -std::log(probs[label]);
}

double cross_entropy_from_logits(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ShapeError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return mx + std::log(sum) - logits[label];
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

Prediction predict(const Matrix& window, const LstmModel& model) {
  Matrix probs = forward(window, model);
  Prediction p;
  p.probabilities.assign(probs.values().begin(), probs.values().end());
  p.label = argmax(p.probabilities);
  return p;
}

double loss_and_gradients(const LstmModel& model, std::span<const Matrix* const> windows,
                          std::span<const std::size_t> labels, std::vector<Matrix>* grads) {
  if (windows.size() != labels.size()) {
    throw ShapeError("loss_and_gradients: " + std::to_string(windows.size()) +
                     " windows but " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t batch = windows.size();
  const std::size_t classes = model.head.weights.rows();
  std::vector<LayerTape> tapes;
  const Matrix logits = run_forward(model, windows, grads ? &tapes : nullptr);

  double loss = 0.0;
  std::vector<double> column(classes);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < classes; ++k) column[k] = logits(k, b);
    loss += cross_entropy_from_logits(column, labels[b]);
  }
  loss /= static_cast<double>(batch);
  if (!grads) return loss;

  const auto params = model.parameters();
  grads->clear();
  grads->reserve(params.size());
  for (const Matrix* p : params) grads->emplace_back(p->rows(), p->cols());
  Matrix& d_head_w = (*grads)[params.size() - 2];
  Matrix& d_head_b = (*grads)[params.size() - 1];

  // d loss / d logits = (softmax - one_hot) / batch.
  Matrix d_logits = softmax_columns(logits);
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) d_logits(labels[b], b) -= 1.0;
  for (double& v : d_logits.values()) v *= inv_batch;

  const std::size_t steps = tapes.front().hidden.size();
  gemm(d_logits, false, tapes.back().hidden.back(), true, d_head_w, true);
  add_row_sums(d_logits, d_head_b);

  // Gradient flowing into each layer's hidden output at every step.
  std::vector<Matrix> d_hidden_seq(steps);
  d_hidden_seq.back() = Matrix();
  gemm(model.head.weights, true, d_logits, false, d_hidden_seq.back());

  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const LstmLayerParams& p = model.layers[l];
    const LayerTape& tape = tapes[l];
    const std::size_t hidden = p.hidden_size();
    const std::size_t input = p.input_size();
    Matrix* g = &(*grads)[l * 8];
    Matrix& dw_f = g[0];
    Matrix& dw_i = g[1];
    Matrix& dw_c = g[2];
    Matrix& dw_o = g[3];
    Matrix& db_f = g[4];
    Matrix& db_i = g[5];
    Matrix& db_c = g[6];
    Matrix& db_o = g[7];

    std::vector<Matrix> d_below(l > 0 ? steps : 0);
    Matrix dh_next(hidden, batch);
    Matrix dc_next(hidden, batch);
    Matrix da_f(hidden, batch), da_i(hidden, batch), da_c(hidden, batch), da_o(hidden, batch);
    Matrix d_concat(hidden + input, batch);
    const Matrix zero_cell(hidden, batch);

    for (std::size_t t = steps; t-- > 0;) {
      const GateActivations& ga = tape.gates[t];
      const Matrix& c_prev = t > 0 ? tape.cell[t - 1] : zero_cell;
      const Matrix& dh_above = d_hidden_seq[t];
      for (std::size_t k = 0; k < hidden * batch; ++k) {
        const double dh = dh_next[k] + (dh_above.empty() ? 0.0 : dh_above[k]);
        const double f = ga.forget[k];
        const double i = ga.input[k];
        const double cand = ga.candidate[k];
        const double o = ga.output[k];
        const double tc = ga.tanh_cell[k];
        const double dc = dc_next[k] + dh * o * (1.0 - tc * tc);
        da_o[k] = dh * tc * o * (1.0 - o);
        da_f[k] = dc * c_prev[k] * f * (1.0 - f);
        da_i[k] = dc * cand * i * (1.0 - i);
        da_c[k] = dc * i * (1.0 - cand * cand);
        dc_next[k] = dc * f;
      }
      const Matrix& z = tape.concat[t];
      gemm(da_f, false, z, true, dw_f, true);
      gemm(da_i, false, z, true, dw_i, true);
      gemm(da_c, false, z, true, dw_c, true);
      gemm(da_o, false, z, true, dw_o, true);
      add_row_sums(da_f, db_f);
      add_row_sums(da_i, db_i);
      add_row_sums(da_c, db_c);
      add_row_sums(da_o, db_o);

      gemm(p.w_forget, true, da_f, false, d_concat);
      gemm(p.w_input, true, da_i, false, d_concat, true);
      gemm(p.w_candidate, true, da_c, false, d_concat, true);
      gemm(p.w_output, true, da_o, false, d_concat, true);
      auto dz = d_concat.values();
      std::copy(dz.begin(), dz.begin() + hidden * batch, dh_next.values().begin());
      if (l > 0) {
        d_below[t] = Matrix(input, batch);
        std::copy(dz.begin() + hidden * batch, dz.end(), d_below[t].values().begin());
      }
    }
    d_hidden_seq = std::move(d_below);
  }
  for (const Matrix& g : *grads) require_finite(g, "loss_and_gradients");
  return loss;
}

std::vector<Matrix> backward(const Matrix& window, std::size_t label, const LstmModel& model) {
  const Matrix* w = &window;
  std::vector<Matrix> grads;
  loss_and_gradients(model, std::span<const Matrix* const>(&w, 1),
                     std::span<const std::size_t>(&label, 1), &grads);
  return grads;
}

}  // namespace drivesig
