#include <cmath>

#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"
#include "drivesig/parallel.hpp"

namespace drivesig {

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNoiseSeverity:
      return "noise_severity";
    case SweepAxis::kNoiseLevel:
      return "noise_level";
    case SweepAxis::kAnomalyRate:
      return "anomaly_rate";
  }
  return "unknown";
}

std::vector<double> clean_feature_stddev(const PreparedData& data, bool raw) {
  return feature_stddev(raw ? data.raw_train : data.train);
}

namespace {

FrameTable corrupt_copy(const FrameTable& source, SweepAxis axis, double value, double fixed,
                        std::uint64_t seed, const std::vector<double>& sigma,
                        AnomalyMode mode) {
  switch (axis) {
    case SweepAxis::kNoiseSeverity:
      return inject_noise(source, NoiseSpec{fixed, value, seed}, sigma);
    case SweepAxis::kNoiseLevel:
      return inject_noise(source, NoiseSpec{value, fixed, seed}, sigma);
    case SweepAxis::kAnomalyRate:
      return inject_anomaly(source, AnomalySpec{fixed, value, seed, mode});
  }
  return source;
}

void validate_point(SweepAxis axis, double value, double fixed) {
  switch (axis) {
    case SweepAxis::kNoiseSeverity:
      NoiseSpec{fixed, value, 0}.validate();
      break;
    case SweepAxis::kNoiseLevel:
      NoiseSpec{value, fixed, 0}.validate();
      break;
    case SweepAxis::kAnomalyRate:
      AnomalySpec{fixed, value, 0}.validate();
      break;
  }
}

SweepResult run_sweep(std::span<const TrainedModel> models, const PreparedData& data,
                      SweepAxis axis, std::span<const double> grid, double fixed,
                      const SweepOptions& options) {
  if (grid.empty()) throw DataError(DataErrorKind::kInvalidArgument, "sweep: empty grid");
  if (options.repeats == 0) {
    throw DataError(DataErrorKind::kInvalidArgument, "sweep: repeats must be at least 1");
  }
  if (models.empty()) throw DataError(DataErrorKind::kInvalidArgument, "sweep: no models");
  if (data.test_windows.empty()) throw ShapeError("sweep: empty test set");
  for (double v : grid) validate_point(axis, v, fixed);

  const std::vector<double> sigma = clean_feature_stddev(data, options.corrupt_raw);
  const FrameTable& source = options.corrupt_raw ? data.raw_test : data.test;
  const std::size_t reps = options.repeats;
  const std::size_t cells = grid.size() * reps;
  // correct[(cell * models) + m]
  std::vector<std::int64_t> correct(cells * models.size(), 0);
  std::vector<std::size_t> totals(cells, 0);

  parallel_for(cells, options.jobs, [&](std::size_t cell) {
    const std::size_t g = cell / reps;
    const std::size_t r = cell % reps;
    FrameTable corrupted = corrupt_copy(source, axis, grid[g], fixed, options.base_seed + r,
                                        sigma, options.anomaly_mode);
    if (options.corrupt_raw) corrupted = transform(data.scaler, corrupted);
    const WindowSet windows = windows_for(corrupted, data.settings, data.label_names);
    totals[cell] = windows.size();
    for (std::size_t m = 0; m < models.size(); ++m) {
      const auto preds = predict_windows(models[m], windows);
      std::int64_t hits = 0;
      for (std::size_t i = 0; i < windows.size(); ++i)
        if (preds[i].label == windows.windows[i].label) ++hits;
      correct[cell * models.size() + m] = hits;
    }
  });

  SweepResult result;
  result.axis = axis;
  result.grid.assign(grid.begin(), grid.end());
  result.repeats = reps;
  result.base_seed = options.base_seed;
  for (std::size_t r = 0; r < reps; ++r) result.seeds.push_back(options.base_seed + r);
  result.fixed_parameter = fixed;
  result.window_count = data.test_windows.size();
  result.corrupt_raw = options.corrupt_raw;
  for (std::size_t m = 0; m < models.size(); ++m) {
    SweepSeries s;
    s.model = std::string(to_string(models[m].kind));
    for (std::size_t g = 0; g < grid.size(); ++g) {
      // Integer sums keep the zero-corruption point bit-equal to the clean
      // accuracy and its spread exactly zero.
      std::int64_t sum = 0;
      std::int64_t sum_sq = 0;
      const auto n = static_cast<std::int64_t>(totals[g * reps]);
      for (std::size_t r = 0; r < reps; ++r) {
        const std::int64_t c = correct[(g * reps + r) * models.size() + m];
        sum += c;
        sum_sq += c * c;
      }
      const auto R = static_cast<std::int64_t>(reps);
      const double denom = static_cast<double>(R * n);
      s.mean_accuracy.push_back(n == 0 ? 0.0 : static_cast<double>(sum) / denom);
      const std::int64_t spread = R * sum_sq - sum * sum;
      s.std_accuracy.push_back(n == 0 ? 0.0 : std::sqrt(static_cast<double>(spread)) / denom);
    }
    result.series.push_back(std::move(s));
  }
  return result;
}

}  // namespace

SweepResult sweep_noise(std::span<const TrainedModel> models, const PreparedData& data,
                        std::span<const double> severities, double level,
                        const SweepOptions& options) {
  return run_sweep(models, data, SweepAxis::kNoiseSeverity, severities, level, options);
}

SweepResult sweep_noise_level(std::span<const TrainedModel> models, const PreparedData& data,
                              std::span<const double> levels, double severity,
                              const SweepOptions& options) {
  return run_sweep(models, data, SweepAxis::kNoiseLevel, levels, severity, options);
}

SweepResult sweep_anomaly(std::span<const TrainedModel> models, const PreparedData& data,
                          std::span<const double> rates, double affected_fraction,
                          const SweepOptions& options) {
  return run_sweep(models, data, SweepAxis::kAnomalyRate, rates, affected_fraction, options);
}

}  // namespace drivesig
