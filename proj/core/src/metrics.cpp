#include "drivesig/metrics.hpp"

#include <algorithm>
#include <string>

#include "drivesig/errors.hpp"

namespace drivesig {

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) {
    throw ShapeError("ConfusionMatrix: label out of range (" + std::to_string(truth) + ", " +
                     std::to_string(predicted) + ") for " + std::to_string(classes_) +
                     " classes");
  }
  ++counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t t = 0;
  for (std::size_t c : counts_) t += c;
  return t;
}

std::size_t ConfusionMatrix::false_positives(std::size_t k) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t)
    if (t != k) s += count(t, k);
  return s;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t k) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != k) s += count(k, p);
  return s;
}

bool MetricsReport::any_degenerate() const noexcept {
  return std::any_of(per_class.begin(), per_class.end(),
                     [](const ClassMetrics& m) { return m.degenerate; });
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion) {
  MetricsReport r;
  r.confusion = confusion;
  r.window_count = confusion.total();
  const std::size_t k_count = confusion.classes();
  std::size_t correct = 0;
  for (std::size_t k = 0; k < k_count; ++k) {
    const double tp = static_cast<double>(confusion.true_positives(k));
    const std::size_t fp = confusion.false_positives(k);
    const std::size_t fn = confusion.false_negatives(k);
    ClassMetrics m;
    m.support = confusion.true_positives(k) + fn;
    const std::size_t p_den = confusion.true_positives(k) + fp;
    const std::size_t r_den = confusion.true_positives(k) + fn;
    m.degenerate = p_den == 0 || r_den == 0;
    m.precision = p_den == 0 ? 0.0 : tp / static_cast<double>(p_den);
    m.recall = r_den == 0 ? 0.0 : tp / static_cast<double>(r_den);
    const double pr = m.precision + m.recall;
    m.f1 = pr == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / pr;
    correct += confusion.true_positives(k);
    r.macro_precision += m.precision;
    r.macro_recall += m.recall;
    r.macro_f1 += m.f1;
    r.per_class.push_back(m);
  }
  if (k_count > 0) {
    r.macro_precision /= static_cast<double>(k_count);
    r.macro_recall /= static_cast<double>(k_count);
    r.macro_f1 /= static_cast<double>(k_count);
  }
  r.accuracy = r.window_count == 0
                   ? 0.0
                   : static_cast<double>(correct) / static_cast<double>(r.window_count);
  return r;
}

MetricsReport compute_metrics(std::span<const std::size_t> truth,
                              std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw ShapeError("compute_metrics: " + std::to_string(truth.size()) + " true labels vs " +
                     std::to_string(predicted.size()) + " predictions");
  }
  if (truth.empty()) throw ShapeError("compute_metrics: no labels");
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return metrics_from_confusion(cm);
}

}  // namespace drivesig
