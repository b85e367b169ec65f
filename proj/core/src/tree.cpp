#include <algorithm>
#include <cmath>

#include "drivesig/baselines.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/parallel.hpp"

namespace drivesig {

double gini(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) {
    const double p = c / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::size_t DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[n].is_leaf()) {
      stack.push_back({nodes_[n].left, d + 1});
      stack.push_back({nodes_[n].right, d + 1});
    }
  }
  return best;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  if (nodes_.empty()) throw ShapeError("DecisionTree: empty tree");
  if (row.size() != feature_count_) {
    throw ShapeError("DecisionTree: row has " + std::to_string(row.size()) +
                     " features, tree expects " + std::to_string(feature_count_));
  }
  const TreeNode* node = &nodes_.front();
  while (!node->is_leaf()) {
    node = &nodes_[row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                   : node->right];
  }
  return *node;
}

std::size_t DecisionTree::predict(std::span<const double> row) const {
  return argmax(leaf_for(row).class_counts);
}

std::vector<double> DecisionTree::predict_proba(std::span<const double> row) const {
  std::vector<double> p = leaf_for(row).class_counts;
  double total = 0.0;
  for (double c : p) total += c;
  for (double& v : p) v /= total;
  return p;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = -1.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const RowDataset& rows, const TreeConfig& config, SeededRng& rng)
      : rows_(rows), config_(config), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> root_indices) {
    struct Task {
      std::vector<std::size_t> idx;
      std::size_t node;
      std::size_t depth;
    };
    std::vector<TreeNode> nodes;
    nodes.push_back(make_node(root_indices));
    std::vector<Task> stack;
    stack.push_back({std::move(root_indices), 0, 0});
    while (!stack.empty()) {
      Task task = std::move(stack.back());
      stack.pop_back();
      const auto& counts = nodes[task.node].class_counts;
      const bool pure = gini(counts) == 0.0;
      const bool too_small = task.idx.size() < std::max<std::size_t>(config_.min_samples_split, 2);
      const bool too_deep = config_.max_depth && task.depth >= *config_.max_depth;
      if (pure || too_small || too_deep) continue;
      const SplitChoice split = best_split(task.idx, counts);
      if (split.feature < 0) continue;

      std::vector<std::size_t> left, right;
      for (std::size_t i : task.idx) {
        (rows_.features(i, static_cast<std::size_t>(split.feature)) <= split.threshold ? left
                                                                                       : right)
            .push_back(i);
      }
      const std::size_t left_id = nodes.size();
      nodes.push_back(make_node(left));
      const std::size_t right_id = nodes.size();
      nodes.push_back(make_node(right));
      nodes[task.node].feature = split.feature;
      nodes[task.node].threshold = split.threshold;
      nodes[task.node].left = left_id;
      nodes[task.node].right = right_id;
      stack.push_back({std::move(right), right_id, task.depth + 1});
      stack.push_back({std::move(left), left_id, task.depth + 1});
    }
    return DecisionTree(std::move(nodes), rows_.num_classes, rows_.feature_count());
  }

 private:
  TreeNode make_node(const std::vector<std::size_t>& idx) const {
    TreeNode n;
    n.class_counts.assign(rows_.num_classes, 0.0);
    for (std::size_t i : idx) n.class_counts[rows_.labels[i]] += 1.0;
    return n;
  }

  SplitChoice best_split(const std::vector<std::size_t>& idx, const std::vector<double>& counts) {
    const std::size_t d = rows_.feature_count();
    std::vector<std::size_t> features(d);
    for (std::size_t f = 0; f < d; ++f) features[f] = f;
    std::size_t wanted = d;
    if (config_.features_per_split > 0 && config_.features_per_split < d) {
      for (std::size_t i = d; i > 1; --i) std::swap(features[i - 1], features[rng_.below(i)]);
      wanted = config_.features_per_split;
    }
    const double parent = gini(counts);
    const double n = static_cast<double>(idx.size());
    SplitChoice best;
    std::size_t tried_valid = 0;
    std::vector<std::size_t> sorted = idx;
    std::vector<double> left(counts.size()), right(counts.size());
    for (std::size_t fi = 0; fi < d; ++fi) {
      // Keep drawing past the requested subset only while nothing splittable was found.
      if (fi >= wanted && tried_valid > 0) break;
      const std::size_t f = features[fi];
      std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        const double va = rows_.features(a, f);
        const double vb = rows_.features(b, f);
        return va < vb || (va == vb && a < b);
      });
      if (rows_.features(sorted.front(), f) == rows_.features(sorted.back(), f)) continue;
      ++tried_valid;
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const std::size_t label = rows_.labels[sorted[i]];
        left[label] += 1.0;
        right[label] -= 1.0;
        const double v = rows_.features(sorted[i], f);
        const double next = rows_.features(sorted[i + 1], f);
        if (!(v < next)) continue;
        const double nl = static_cast<double>(i + 1);
        const double weighted = (nl * gini(left) + (n - nl) * gini(right)) / n;
        const double gain = parent - weighted;
        if (gain > best.gain) {
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const RowDataset& rows_;
  const TreeConfig& config_;
  SeededRng& rng_;
};

void check_rows(const RowDataset& rows, const char* who) {
  if (rows.size() == 0) {
    throw TrainingError(TrainingErrorKind::kEmptySet, std::string(who) + ": no training rows");
  }
  if (rows.features.rows() != rows.labels.size()) {
    throw ShapeError(std::string(who) + ": feature rows and labels differ in count");
  }
  for (std::size_t l : rows.labels) {
    if (l >= rows.num_classes) throw ShapeError(std::string(who) + ": label out of range");
  }
}

}  // namespace

DecisionTree train_tree(const RowDataset& rows, const TreeConfig& config, SeededRng& rng) {
  check_rows(rows, "train_tree");
  std::vector<std::size_t> idx(rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return TreeBuilder(rows, config, rng).build(std::move(idx));
}

std::vector<std::size_t> RandomForest::votes(std::span<const double> row) const {
  std::vector<std::size_t> tally(num_classes, 0);
  for (const auto& t : trees) ++tally[t.predict(row)];
  return tally;
}

std::size_t RandomForest::predict(std::span<const double> row) const {
  const auto tally = votes(row);
  std::size_t best = 0;
  for (std::size_t k = 1; k < tally.size(); ++k)
    if (tally[k] > tally[best]) best = k;
  return best;
}

std::vector<double> RandomForest::predict_proba(std::span<const double> row) const {
  const auto tally = votes(row);
  std::vector<double> p(tally.size());
  for (std::size_t k = 0; k < tally.size(); ++k)
    p[k] = static_cast<double>(tally[k]) / static_cast<double>(trees.size());
  return p;
}

RandomForest train_forest(const RowDataset& rows, const ForestConfig& config,
                          std::uint64_t seed) {
  check_rows(rows, "train_forest");
  if (config.n_trees == 0) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig, "train_forest: n_trees must be >= 1");
  }
  const std::size_t d = rows.feature_count();
  if (config.features_per_split > d) {
    throw TrainingError(TrainingErrorKind::kInvalidConfig,
                        "train_forest: features_per_split exceeds feature count");
  }
  TreeConfig tree_cfg;
  tree_cfg.max_depth = config.max_depth;
  tree_cfg.features_per_split =
      config.features_per_split > 0
          ? config.features_per_split
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  RandomForest forest;
  forest.num_classes = rows.num_classes;
  forest.trees.resize(config.n_trees);
  parallel_for(config.n_trees, config.jobs, [&](std::size_t t) {
    SeededRng rng(seed + t);
    std::vector<std::size_t> idx(rows.size());
    if (config.bootstrap) {
      for (auto& i : idx) i = rng.below(rows.size());
      std::sort(idx.begin(), idx.end());
    } else {
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    }
    forest.trees[t] = TreeBuilder(rows, tree_cfg, rng).build(std::move(idx));
  });
  return forest;
}

}  // namespace drivesig
