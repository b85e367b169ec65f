#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "drivesig/data.hpp"

namespace drivesig {

// Per-driver generative parameters. Vectors hold one entry per feature.
struct DriverProfile {
  std::string driver_id;
  // z_t = ar1 * z_{t-1} + ar2 * z_{t-2} + e_t, scaled to unit stationary variance.
  std::vector<double> ar1;
  std::vector<double> ar2;
  // Probability that a burst starts at a period boundary.
  double event_intensity = 0.5;
  std::vector<double> cruise_mean;
  std::vector<double> cruise_spread;  // process standard deviation
  // Bursts start on multiples of `period` steps and last half of it.
  std::size_t period = 8;
  // Burst offset in units of cruise_spread; 0 for features bursts don't touch.
  std::vector<double> burst_gain;

  // Fraction of steps spent inside a burst.
  double burst_fraction() const;
  // Stationary standard deviation of feature f, bursts included.
  double process_stddev(std::size_t f) const;

  // Throws DataError naming the first violated invariant.
  void validate(std::size_t feature_count) const;
};

struct SynthOptions {
  std::size_t trips_per_driver = 3;
  std::size_t rows_per_trip = 2000;
  std::size_t feature_count = 8;
  std::uint64_t seed = 0;
  // Largest window the data must support; rows_per_trip >= 4x this.
  std::size_t max_window = 16;
};

// Default names: speed, rpm, throttle, engine_load, brake, accel_x,
// fuel_rate, coolant_temp; f<i> beyond those.
std::vector<std::string> synth_feature_names(std::size_t feature_count);

// Five distinct drivers.
std::vector<DriverProfile> default_profiles(std::size_t feature_count = 8,
                                            std::size_t drivers = 5);
// Two drivers whose cruising bands sit far apart on every feature.
std::vector<DriverProfile> separated_profiles(std::size_t feature_count = 8);

// Trips are emitted driver by driver in order; trip ids are <driver>_t<j>.
FrameTable generate(const std::vector<DriverProfile>& profiles, const SynthOptions& options);

// Every emitted value lies within this many process_stddev of cruise_mean.
inline constexpr double kSynthMaxDeviation = 6.0;

}  // namespace drivesig
