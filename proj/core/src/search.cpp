#include <algorithm>

#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"
#include "drivesig/parallel.hpp"

namespace drivesig {

std::vector<SearchCandidate> grid_search(
    std::span<const std::vector<std::size_t>> hidden_grid, std::span<const std::size_t> windows,
    const PreparedData& data, const ModelConfig& base, std::size_t epochs, std::uint64_t seed,
    std::size_t jobs) {
  if (hidden_grid.empty() || windows.empty()) {
    throw DataError(DataErrorKind::kInvalidArgument, "grid_search: empty grid");
  }
  std::vector<SearchCandidate> table;
  for (std::size_t w : windows)
    for (const auto& hidden : hidden_grid) {
      SearchCandidate c;
      c.hidden_sizes = hidden;
      c.window_length = w;
      table.push_back(c);
    }

  parallel_for(table.size(), jobs, [&](std::size_t i) {
    SearchCandidate& c = table[i];
    PipelineSettings settings = data.settings;
    settings.window.length = c.window_length;
    const WindowSet train = windows_for(data.train, settings, data.label_names);
    const WindowSet val = windows_for(data.validation, settings, data.label_names);
    if (train.empty() || val.empty()) {
      c.feasible = false;
      return;
    }
    ModelConfig cfg = base;
    cfg.hidden_sizes = c.hidden_sizes;
    cfg.window_length = c.window_length;
    cfg.num_classes = data.label_names.size();
    cfg.max_epochs = epochs;
    const LstmTrainResult result = train_lstm(train, val, cfg, seed);
    c.val_macro_f1 = std::max(0.0, result.history.best_val_macro_f1);
    c.epochs_run = result.history.epochs.size();
  });

  std::stable_sort(table.begin(), table.end(), [](const SearchCandidate& a, const SearchCandidate& b) {
    if (a.feasible != b.feasible) return a.feasible;
    return a.val_macro_f1 > b.val_macro_f1;
  });
  for (std::size_t i = 0; i < table.size(); ++i) table[i].rank = i + 1;
  return table;
}

}  // namespace drivesig
