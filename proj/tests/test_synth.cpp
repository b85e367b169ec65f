#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "drivesig/baselines.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/synth.hpp"

using namespace drivesig;

namespace {

std::string profile_error(DriverProfile p, std::size_t features = 8) {
  try {
    p.validate(features);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Synth, DefaultSuiteShape) {
  const FrameTable t = generate(default_profiles(), {});
  EXPECT_EQ(t.row_count(), 30000u);
  EXPECT_EQ(t.feature_count(), 8u);
  EXPECT_EQ(t.driver_ids().size(), 5u);
  EXPECT_EQ(t.feature_names.front(), "speed");
  std::set<std::string> trips;
  for (const auto& r : t.rows) trips.insert(r.trip_id);
  EXPECT_EQ(trips.size(), 15u);
  EXPECT_TRUE(trips.count("driver_1_t1"));
}

TEST(Synth, SameSeedSameTable) {
  SynthOptions o;
  o.rows_per_trip = 300;
  o.seed = 42;
  const FrameTable a = generate(default_profiles(), o), b = generate(default_profiles(), o);
  EXPECT_EQ(a.rows, b.rows);
  o.seed = 43;
  EXPECT_NE(generate(default_profiles(), o).rows, a.rows);
}

TEST(Synth, SeparatedProfilesShallowTree) {
  SynthOptions o;
  o.rows_per_trip = 500;
  o.seed = 3;
  const FrameTable t = generate(separated_profiles(), o);
  const RowDataset rows = rows_from_table(t, t.driver_ids());
  TreeConfig cfg;
  cfg.max_depth = 3;
  SeededRng rng(1);
  const DecisionTree tree = train_tree(rows, cfg, rng);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) ok += tree.predict(rows.features.row(i)) == rows.labels[i];
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(rows.size()), 0.9);
}

TEST(Synth, ValuesStayWithinDeviationBound) {
  const auto profiles = default_profiles(12, 7);
  SynthOptions o;
  o.feature_count = 12;
  o.rows_per_trip = 1000;
  o.seed = 9;
  const FrameTable t = generate(profiles, o);
  std::map<std::string, const DriverProfile*> by_id;
  for (const auto& p : profiles) by_id[p.driver_id] = &p;
  for (const auto& r : t.rows) {
    const DriverProfile& p = *by_id.at(r.driver_id);
    for (std::size_t f = 0; f < 12; ++f) {
      ASSERT_TRUE(std::isfinite(r.values[f]));
      ASSERT_LE(std::abs(r.values[f] - p.cruise_mean[f]), kSynthMaxDeviation * p.process_stddev(f))
          << r.driver_id << " feature " << f;
    }
  }
}

TEST(Synth, DefaultMeansSpreadOnHalfTheFeatures) {
  const auto profiles = default_profiles();
  const FrameTable t = generate(profiles, {});
  const auto drivers = t.driver_ids();
  std::map<std::string, std::vector<double>> sum;
  std::map<std::string, double> n;
  for (const auto& r : t.rows) {
    auto& s = sum[r.driver_id];
    s.resize(8, 0.0);
    for (std::size_t f = 0; f < 8; ++f) s[f] += r.values[f];
    n[r.driver_id] += 1;
  }
  std::size_t separated_declared = 0, separated_observed = 0;
  for (std::size_t f = 0; f < 8; ++f) {
    double lo = 1e300, hi = -1e300, elo = 1e300, ehi = -1e300, sd = 0.0;
    for (const auto& p : profiles) {
      lo = std::min(lo, p.cruise_mean[f]);
      hi = std::max(hi, p.cruise_mean[f]);
      sd = std::max(sd, p.process_stddev(f));
      const double m = sum[p.driver_id][f] / n[p.driver_id];
      elo = std::min(elo, m);
      ehi = std::max(ehi, m);
    }
    separated_declared += hi - lo >= sd;
    separated_observed += ehi - elo >= sd;
  }
  EXPECT_GE(2 * separated_declared, 8u);
  EXPECT_GE(2 * separated_observed, 8u);
}

TEST(Synth, BurstFractionAndStddev) {
  DriverProfile p = default_profiles(8, 2)[0];
  p.period = 10;
  p.event_intensity = 0.5;
  EXPECT_DOUBLE_EQ(p.burst_fraction(), 0.25);
  p.burst_gain[1] = 2.0;
  EXPECT_DOUBLE_EQ(p.process_stddev(1), p.cruise_spread[1] * std::sqrt(1.0 + 4.0 * 0.25 * 0.75));
}

TEST(Synth, InvalidProfilesNameTheInvariant) {
  const DriverProfile good = default_profiles()[0];
  EXPECT_EQ(profile_error(good), "");

  DriverProfile p = good;
  p.ar1[2] = 1.5;
  p.ar2[2] = 0.0;
  EXPECT_NE(profile_error(p).find("not stable"), std::string::npos) << profile_error(p);
  EXPECT_NE(profile_error(p).find("feature 2"), std::string::npos);
  EXPECT_NE(profile_error(p).find(good.driver_id), std::string::npos);

  p = good;
  p.period = 1;
  EXPECT_NE(profile_error(p).find("period"), std::string::npos);

  p = good;
  p.event_intensity = 1.5;
  EXPECT_NE(profile_error(p).find("event_intensity"), std::string::npos);

  p = good;
  p.cruise_spread[0] = 0.0;
  EXPECT_NE(profile_error(p).find("cruise_spread"), std::string::npos);

  p = good;
  p.burst_gain.pop_back();
  EXPECT_NE(profile_error(p).find("burst_gain has 7 entries"), std::string::npos);

  p = good;
  p.burst_gain[0] = 20.0;
  EXPECT_NE(profile_error(p).find("exceeds"), std::string::npos);
}

TEST(Synth, OptionErrors) {
  SynthOptions o;
  EXPECT_THROW(generate({default_profiles()[0]}, o), DataError);
  o.rows_per_trip = 63;
  EXPECT_THROW(generate(default_profiles(), o), DataError);
  o = {};
  o.trips_per_driver = 0;
  EXPECT_THROW(generate(default_profiles(), o), DataError);
  o = {};
  o.feature_count = 0;
  EXPECT_THROW(generate(default_profiles(), o), DataError);
  o = {};
  o.feature_count = 4;
  // Profiles built for 8 features do not fit a 4-feature table.
  EXPECT_THROW(generate(default_profiles(8), o), DataError);
}

TEST(Synth, FeatureNamesPastTheNamedOnes) {
  const auto names = synth_feature_names(10);
  EXPECT_EQ(names[7], "coolant_temp");
  EXPECT_EQ(names[8], "f8");
  EXPECT_EQ(names[9], "f9");
}
