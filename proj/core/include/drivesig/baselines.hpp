#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "drivesig/data.hpp"
#include "drivesig/lstm.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"
#include "drivesig/training.hpp"

namespace drivesig {

// One row per sample; labels index into a shared label list.
struct RowDataset {
  Matrix features;  // n x d
  std::vector<std::size_t> labels;
  std::size_t num_classes = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t feature_count() const noexcept { return features.cols(); }
};

RowDataset rows_from_table(const FrameTable& table,
                           const std::vector<std::string>& label_names);

// ---- CART decision tree ----------------------------------------------------

struct TreeNode {
  // Internal nodes: feature >= 0, rows with x[feature] <= threshold go left.
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  std::vector<double> class_counts;  // filled for every node

  bool is_leaf() const noexcept { return feature < 0; }
};

struct TreeConfig {
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_split = 2;
  // Candidate features sampled per split; 0 means all features.
  std::size_t features_per_split = 0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t num_classes, std::size_t features)
      : nodes_(std::move(nodes)), num_classes_(num_classes), feature_count_(features) {}

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t feature_count() const noexcept { return feature_count_; }
  std::size_t depth() const;

  const TreeNode& leaf_for(std::span<const double> row) const;
  std::size_t predict(std::span<const double> row) const;
  std::vector<double> predict_proba(std::span<const double> row) const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t num_classes_ = 0;
  std::size_t feature_count_ = 0;
};

// Gini impurity 1 - sum p_k^2 of a count vector (0 for an empty vector).
double gini(std::span<const double> counts);

// Greedy CART: best Gini gain over midpoints between sorted distinct values.
// Stops at purity, below min_samples_split, or at max_depth.
DecisionTree train_tree(const RowDataset& rows, const TreeConfig& config, SeededRng& rng);

// ---- Random forest ---------------------------------------------------------

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t features_per_split = 0;  // 0 means ceil(sqrt(d))
  bool bootstrap = true;
  std::optional<std::size_t> max_depth;
  std::size_t jobs = 1;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  std::size_t num_classes = 0;

  // Per-class vote counts of the trees for one row.
  std::vector<std::size_t> votes(std::span<const double> row) const;
  // Majority vote; ties go to the lowest class index.
  std::size_t predict(std::span<const double> row) const;
  // Vote fractions.
  std::vector<double> predict_proba(std::span<const double> row) const;
};

// Tree i draws from its own stream seeded with seed + i.
RandomForest train_forest(const RowDataset& rows, const ForestConfig& config,
                          std::uint64_t seed);

// ---- Fully connected network -----------------------------------------------

struct DenseLayer {
  Matrix weights;  // out x in
  Matrix bias;     // out x 1
};

// ReLU hidden layers sized by config.hidden_sizes followed by a softmax head.
struct FcnnModel {
  ModelConfig config;
  std::size_t input_size = 0;
  std::vector<DenseLayer> layers;  // hidden layers then the head

  static FcnnModel initialize(const ModelConfig& config, std::size_t input_size,
                              SeededRng& rng);
  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
};

// Logits (K x B) for the rows of `inputs` (B x d).
Matrix fcnn_logits(const FcnnModel& model, const Matrix& inputs);
Matrix fcnn_probabilities(const FcnnModel& model, const Matrix& inputs);

double fcnn_loss_and_gradients(const FcnnModel& model, const Matrix& inputs,
                               std::span<const std::size_t> labels,
                               std::vector<Matrix>* grads);

struct FcnnTrainResult {
  FcnnModel model;
  TrainingHistory history;
};

// Same Adam and early-stopping loop as the LSTM, on single rows.
FcnnTrainResult train_fcnn(const RowDataset& train, const RowDataset& validation,
                           const ModelConfig& config, std::uint64_t seed,
                           const EpochCallback& on_epoch = {});

// ---- Window aggregation ----------------------------------------------------

// Majority vote over per-row predictions; ties go to the largest summed
// probability, then to the lowest class index.
std::size_t window_vote(std::span<const Prediction> rows);

}  // namespace drivesig
