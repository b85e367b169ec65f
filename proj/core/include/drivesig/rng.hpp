#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace drivesig {

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the uniform and Gaussian transforms are
// implemented here rather than through <random> distributions, whose
// algorithms vary between standard libraries.
class SeededRng {
 public:
  static constexpr std::string_view kAlgorithmId = "mt19937_64/box-muller";

  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::string_view algorithm_id() const noexcept { return kAlgorithmId; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double gaussian();
  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Independent child stream, e.g. one per tree or per repeat.
  SeededRng derive(std::uint64_t offset) const { return SeededRng(seed_ + offset); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace drivesig
