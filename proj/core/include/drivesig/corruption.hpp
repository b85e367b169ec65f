#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "drivesig/data.hpp"
#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

// White Gaussian noise: each cell, independently with probability `level`,
// becomes x + g with g ~ N(0, (severity * sigma_feature)^2).
struct NoiseSpec {
  double level = 1.0;     // in [0, 1]
  double severity = 0.0;  // in [0, 2], multiples of the clean per-feature stddev
  std::uint64_t seed = 0;

  void validate() const;
  bool is_identity() const noexcept { return level == 0.0 || severity == 0.0; }
};

enum class AnomalyMode {
  kPerCell,  // every cell is an independent Bernoulli(affected_fraction) draw
  kPerRow,   // one draw per row; a selected row has every feature scaled
};

// Multiplicative anomaly: a selected cell x becomes x * (1 + rate).
struct AnomalySpec {
  double affected_fraction = 0.40;  // in [0, 1]
  double rate = 0.0;                // in [0, 1]
  std::uint64_t seed = 0;
  AnomalyMode mode = AnomalyMode::kPerCell;

  void validate() const;
  bool is_identity() const noexcept { return affected_fraction == 0.0 || rate == 0.0; }
};

// Tallies filled by the injectors (optional), used by statistical tests.
struct CorruptionTally {
  std::size_t cells = 0;
  std::size_t corrupted = 0;
  double perturbation_sum = 0.0;  // sum of (new - old) over corrupted cells
};

// Cells are visited row-major in table order; each visit draws one uniform
// and, if selected, one Gaussian. Inputs are never modified.
FrameTable inject_noise(const FrameTable& table, const NoiseSpec& spec,
                        std::span<const double> feature_stddev,
                        CorruptionTally* tally = nullptr);
WindowSet inject_noise(const WindowSet& windows, const NoiseSpec& spec,
                       std::span<const double> feature_stddev,
                       CorruptionTally* tally = nullptr);

FrameTable inject_anomaly(const FrameTable& table, const AnomalySpec& spec,
                          CorruptionTally* tally = nullptr);
WindowSet inject_anomaly(const WindowSet& windows, const AnomalySpec& spec,
                         CorruptionTally* tally = nullptr);

}  // namespace drivesig
