#include "drivesig/corruption.hpp"

#include <string>

#include "drivesig/errors.hpp"

namespace drivesig {

void NoiseSpec::validate() const {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw DataError(DataErrorKind::kInvalidArgument, "noise level must lie in [0,1]");
  }
  if (!(severity >= 0.0 && severity <= 2.0)) {
    throw DataError(DataErrorKind::kInvalidArgument, "noise severity must lie in [0,2]");
  }
}

void AnomalySpec::validate() const {
  if (!(affected_fraction >= 0.0 && affected_fraction <= 1.0)) {
    throw DataError(DataErrorKind::kInvalidArgument, "anomaly fraction must lie in [0,1]");
  }
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw DataError(DataErrorKind::kInvalidArgument, "anomaly rate must lie in [0,1]");
  }
}

namespace {

class NoiseCells {
 public:
  NoiseCells(const NoiseSpec& spec, std::span<const double> sigma, CorruptionTally* tally)
      : spec_(spec), sigma_(sigma), rng_(spec.seed), tally_(tally) {}

  void apply(std::span<double> row) {
    for (std::size_t f = 0; f < row.size(); ++f) {
      if (tally_) ++tally_->cells;
      if (!(rng_.uniform() < spec_.level)) continue;
      const double delta = rng_.gaussian() * spec_.severity * sigma_[f];
      if (tally_) {
        ++tally_->corrupted;
        tally_->perturbation_sum += delta;
      }
      if (delta != 0.0) row[f] += delta;
    }
  }

 private:
  const NoiseSpec& spec_;
  std::span<const double> sigma_;
  SeededRng rng_;
  CorruptionTally* tally_;
};

class AnomalyCells {
 public:
  AnomalyCells(const AnomalySpec& spec, CorruptionTally* tally)
      : spec_(spec), rng_(spec.seed), tally_(tally) {}

  void apply(std::span<double> row) {
    const bool row_selected =
        spec_.mode == AnomalyMode::kPerRow && rng_.uniform() < spec_.affected_fraction;
    for (double& x : row) {
      if (tally_) ++tally_->cells;
      const bool selected = spec_.mode == AnomalyMode::kPerRow
                                ? row_selected
                                : rng_.uniform() < spec_.affected_fraction;
      if (!selected) continue;
      const double next = x * (1.0 + spec_.rate);
      if (tally_) {
        ++tally_->corrupted;
        tally_->perturbation_sum += next - x;
      }
      if (next != x) x = next;
    }
  }

 private:
  const AnomalySpec& spec_;
  SeededRng rng_;
  CorruptionTally* tally_;
};

void check_stats(std::size_t features, std::span<const double> sigma) {
  if (sigma.size() < features) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "inject_noise: feature statistics cover " + std::to_string(sigma.size()) +
                        " of " + std::to_string(features) + " features");
  }
}

}  // namespace

FrameTable inject_noise(const FrameTable& table, const NoiseSpec& spec,
                        std::span<const double> feature_stddev, CorruptionTally* tally) {
  spec.validate();
  check_stats(table.feature_count(), feature_stddev);
  FrameTable out = table;
  if (spec.is_identity() && !tally) return out;
  NoiseCells cells(spec, feature_stddev, tally);
  for (auto& row : out.rows) cells.apply(row.values);
  return out;
}

WindowSet inject_noise(const WindowSet& windows, const NoiseSpec& spec,
                       std::span<const double> feature_stddev, CorruptionTally* tally) {
  spec.validate();
  check_stats(windows.feature_count(), feature_stddev);
  WindowSet out = windows;
  if (spec.is_identity() && !tally) return out;
  NoiseCells cells(spec, feature_stddev, tally);
  for (auto& w : out.windows)
    for (std::size_t t = 0; t < w.values.rows(); ++t) cells.apply(w.values.row(t));
  return out;
}

FrameTable inject_anomaly(const FrameTable& table, const AnomalySpec& spec,
                          CorruptionTally* tally) {
  spec.validate();
  FrameTable out = table;
  if (spec.is_identity() && !tally) return out;
  AnomalyCells cells(spec, tally);
  for (auto& row : out.rows) cells.apply(row.values);
  return out;
}

WindowSet inject_anomaly(const WindowSet& windows, const AnomalySpec& spec,
                         CorruptionTally* tally) {
  spec.validate();
  WindowSet out = windows;
  if (spec.is_identity() && !tally) return out;
  AnomalyCells cells(spec, tally);
  for (auto& w : out.windows)
    for (std::size_t t = 0; t < w.values.rows(); ++t) cells.apply(w.values.row(t));
  return out;
}

}  // namespace drivesig
