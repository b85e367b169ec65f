#include "drivesig/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "drivesig/errors.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

namespace {

struct FeatureBase {
  const char* name;
  double mean;
  double spread;
};

constexpr std::array<FeatureBase, 8> kBases = {{{"speed", 60.0, 8.0},
                                                {"rpm", 2200.0, 300.0},
                                                {"throttle", 25.0, 6.0},
                                                {"engine_load", 40.0, 8.0},
                                                {"brake", 5.0, 2.0},
                                                {"accel_x", 0.0, 0.5},
                                                {"fuel_rate", 6.0, 1.5},
                                                {"coolant_temp", 88.0, 2.0}}};

// rpm, throttle, brake, accel_x (and every odd feature past the named ones).
bool is_pulse_feature(std::size_t f) {
  if (f < kBases.size()) return f == 1 || f == 2 || f == 4 || f == 5;
  return f % 2 == 1;
}

FeatureBase base_for(std::size_t f) {
  if (f < kBases.size()) return kBases[f];
  return {nullptr, 10.0, 1.0};
}

// Innovations are truncated at this many standard deviations and the AR
// state at kStateCap; validate() checks kStateCap + gain against the
// deviation bound.
constexpr double kInnovationCap = 3.0;
constexpr double kStateCap = 4.0;
constexpr double kMaxBurstGain = 16.0;
constexpr std::size_t kBurnIn = 64;

double stationary_variance(double a1, double a2) {
  return (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
}

bool ar_stable(double a1, double a2) {
  // Companion-matrix eigenvalues inside the unit circle.
  return std::abs(a2) < 1.0 && a1 + a2 < 1.0 && a2 - a1 < 1.0;
}

[[noreturn]] void bad_profile(const DriverProfile& p, const std::string& what) {
  throw DataError(DataErrorKind::kInvalidArgument,
                  "synth profile '" + p.driver_id + "': " + what);
}

double truncated_gaussian(SeededRng& rng) {
  for (;;) {
    const double z = rng.gaussian();
    if (std::abs(z) <= kInnovationCap) return z;
  }
}

}  // namespace

double DriverProfile::burst_fraction() const {
  if (period == 0) return 0.0;
  const double len = static_cast<double>(std::max<std::size_t>(1, period / 2));
  return event_intensity * len / static_cast<double>(period);
}

double DriverProfile::process_stddev(std::size_t f) const {
  // Independent unit AR part plus a Bernoulli(q) step of height gain.
  const double q = burst_fraction();
  const double g = burst_gain.at(f);
  return cruise_spread.at(f) * std::sqrt(1.0 + g * g * q * (1.0 - q));
}

void DriverProfile::validate(std::size_t feature_count) const {
  if (driver_id.empty()) bad_profile(*this, "driver_id is empty");
  const auto check_size = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != feature_count) {
      bad_profile(*this, std::string(name) + " has " + std::to_string(v.size()) +
                             " entries, expected " + std::to_string(feature_count));
    }
  };
  check_size(ar1, "ar1");
  check_size(ar2, "ar2");
  check_size(cruise_mean, "cruise_mean");
  check_size(cruise_spread, "cruise_spread");
  check_size(burst_gain, "burst_gain");
  if (period < 2) bad_profile(*this, "period must be at least 2");
  if (!(event_intensity >= 0.0 && event_intensity <= 1.0)) {
    bad_profile(*this, "event_intensity must lie in [0, 1]");
  }
  for (std::size_t f = 0; f < feature_count; ++f) {
    if (!ar_stable(ar1[f], ar2[f])) {
      bad_profile(*this, "AR coefficients of feature " + std::to_string(f) +
                             " are not stable (spectral radius >= 1)");
    }
    if (!(cruise_spread[f] > 0.0) || !std::isfinite(cruise_spread[f])) {
      bad_profile(*this, "cruise_spread of feature " + std::to_string(f) + " must be positive");
    }
    if (!std::isfinite(cruise_mean[f])) {
      bad_profile(*this, "cruise_mean of feature " + std::to_string(f) + " is not finite");
    }
    if (!(std::abs(burst_gain[f]) <= kMaxBurstGain)) {
      bad_profile(*this, "burst_gain of feature " + std::to_string(f) + " exceeds 16");
    }
    if ((kStateCap + std::abs(burst_gain[f])) * cruise_spread[f] >
        kSynthMaxDeviation * process_stddev(f)) {
      bad_profile(*this, "burst_gain of feature " + std::to_string(f) +
                             " can push values past 6 process standard deviations");
    }
  }
}

std::vector<std::string> synth_feature_names(std::size_t feature_count) {
  std::vector<std::string> names;
  for (std::size_t f = 0; f < feature_count; ++f) {
    const auto b = base_for(f);
    names.push_back(b.name ? b.name : "f" + std::to_string(f));
  }
  return names;
}

std::vector<DriverProfile> default_profiles(std::size_t feature_count, std::size_t drivers) {
  // Level features carry the cruising-band differences: offsets are a
  // permutation of 0..D-1 per feature, so any two drivers differ by at least
  // one step. Pulse features share one marginal distribution across drivers
  // (same gain, same on-fraction) and differ only in burst period and length.
  constexpr double kMeanStep = 0.3;
  constexpr double kPulseGain = 12.0;
  constexpr double kIntensity = 0.9;
  static constexpr std::array<std::pair<double, double>, 5> kAr = {
      {{1.2, -0.5}, {0.3, 0.2}, {-0.4, 0.3}, {0.9, 0.0}, {0.0, -0.6}}};
  static constexpr std::array<std::size_t, 5> kPeriods = {2, 4, 6, 8, 10};

  std::vector<DriverProfile> out;
  for (std::size_t d = 0; d < drivers; ++d) {
    DriverProfile p;
    p.driver_id = "driver_" + std::to_string(d + 1);
    p.period = kPeriods[d % kPeriods.size()] + 2 * kPeriods.size() * (d / kPeriods.size());
    p.event_intensity = kIntensity;
    std::size_t level_rank = 0;
    for (std::size_t f = 0; f < feature_count; ++f) {
      const auto b = base_for(f);
      const auto [a1, a2] = kAr[(d + f) % kAr.size()];
      p.ar1.push_back(a1);
      p.ar2.push_back(a2);
      p.cruise_spread.push_back(b.spread);
      if (is_pulse_feature(f)) {
        p.cruise_mean.push_back(b.mean);
        p.burst_gain.push_back(kPulseGain);
      } else {
        ++level_rank;
        const std::size_t slot = (d * level_rank) % std::max<std::size_t>(drivers, 1);
        const double centred = static_cast<double>(slot) - 0.5 * static_cast<double>(drivers - 1);
        p.cruise_mean.push_back(b.mean + kMeanStep * centred * b.spread);
        p.burst_gain.push_back(0.0);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<DriverProfile> separated_profiles(std::size_t feature_count) {
  auto out = default_profiles(feature_count, 2);
  for (std::size_t d = 0; d < out.size(); ++d) {
    for (std::size_t f = 0; f < feature_count; ++f) {
      const auto b = base_for(f);
      out[d].cruise_mean[f] = b.mean + (d == 0 ? -6.0 : 6.0) * b.spread;
    }
  }
  return out;
}

FrameTable generate(const std::vector<DriverProfile>& profiles, const SynthOptions& options) {
  if (profiles.size() < 2) {
    throw DataError(DataErrorKind::kInvalidArgument, "synth: at least 2 driver profiles required");
  }
  if (options.feature_count == 0) {
    throw DataError(DataErrorKind::kInvalidArgument, "synth: feature_count must be positive");
  }
  if (options.trips_per_driver == 0) {
    throw DataError(DataErrorKind::kInvalidArgument, "synth: trips_per_driver must be positive");
  }
  if (options.rows_per_trip < 4 * options.max_window) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "synth: rows_per_trip must be at least 4 x max window (" +
                        std::to_string(4 * options.max_window) + ")");
  }
  for (const auto& p : profiles) p.validate(options.feature_count);

  const std::size_t nf = options.feature_count;
  FrameTable table;
  table.feature_names = synth_feature_names(nf);
  table.rows.reserve(profiles.size() * options.trips_per_driver * options.rows_per_trip);

  for (std::size_t d = 0; d < profiles.size(); ++d) {
    const DriverProfile& p = profiles[d];
    std::vector<double> innovation_sd(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      innovation_sd[f] = 1.0 / std::sqrt(stationary_variance(p.ar1[f], p.ar2[f]));
    }
    for (std::size_t trip = 0; trip < options.trips_per_driver; ++trip) {
      SeededRng rng(options.seed ^ (0x51f15e11ULL * (d + 1) + 0x2545f491ULL * (trip + 1)));
      std::vector<double> z1(nf, 0.0), z2(nf, 0.0);
      const auto step_state = [&]() {
        for (std::size_t f = 0; f < nf; ++f) {
          double z = p.ar1[f] * z1[f] + p.ar2[f] * z2[f] + innovation_sd[f] * truncated_gaussian(rng);
          z = std::clamp(z, -kStateCap, kStateCap);
          z2[f] = z1[f];
          z1[f] = z;
        }
      };
      for (std::size_t t = 0; t < kBurnIn; ++t) step_state();

      const std::size_t phase = static_cast<std::size_t>(rng.below(p.period));
      const std::size_t burst_len = std::max<std::size_t>(1, p.period / 2);
      bool bursting = false;
      const std::string trip_id = p.driver_id + "_t" + std::to_string(trip + 1);
      for (std::size_t t = 0; t < options.rows_per_trip; ++t) {
        step_state();
        const std::size_t pos = (t + phase) % p.period;
        if (pos == 0) bursting = rng.uniform() < p.event_intensity;
        const bool active = bursting && pos < burst_len;
        FrameRow row;
        row.driver_id = p.driver_id;
        row.trip_id = trip_id;
        row.values.resize(nf);
        for (std::size_t f = 0; f < nf; ++f) {
          const double dev = z1[f] + (active ? p.burst_gain[f] : 0.0);
          row.values[f] = p.cruise_mean[f] + p.cruise_spread[f] * dev;
        }
        table.rows.push_back(std::move(row));
      }
    }
  }
  return table;
}

}  // namespace drivesig
