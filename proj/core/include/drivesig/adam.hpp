#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "drivesig/numerics.hpp"

namespace drivesig {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
  std::size_t step_count = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::span<const Matrix* const> params);
};

// One bias-corrected Adam step over a parameter set:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// An empty state is lazily shaped to the parameters on the first call.
void adam_update(std::span<Matrix* const> params, std::span<const Matrix> grads,
                 AdamState& state);

}  // namespace drivesig
