#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drivesig {

// counts[true][predicted].
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0)
      : classes_(classes), counts_(classes * classes, 0) {}

  void add(std::size_t truth, std::size_t predicted);
  std::size_t classes() const noexcept { return classes_; }
  std::size_t count(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  std::size_t total() const noexcept;
  std::size_t true_positives(std::size_t k) const { return count(k, k); }
  std::size_t false_positives(std::size_t k) const;
  std::size_t false_negatives(std::size_t k) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  // Set when a precision or recall denominator was zero and the
  // metric was defined as 0.
  bool degenerate = false;
};

struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t window_count = 0;
  ConfusionMatrix confusion;

  bool any_degenerate() const noexcept;
};

// Precision TP/(TP+FP), recall TP/(TP+FN), F1 2PR/(P+R); a zero denominator
// yields 0. Macro averages are unweighted means over all K classes.
MetricsReport compute_metrics(std::span<const std::size_t> truth,
                              std::span<const std::size_t> predicted, std::size_t classes);

MetricsReport metrics_from_confusion(const ConfusionMatrix& confusion);

}  // namespace drivesig
