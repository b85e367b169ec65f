#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "drivesig/corruption.hpp"
#include "drivesig/errors.hpp"
#include "helpers.hpp"

using namespace drivesig;
using testing_helpers::random_table;

namespace {

FrameTable constant_table(std::size_t rows, std::size_t features, double value) {
  FrameTable t;
  for (std::size_t f = 0; f < features; ++f) t.feature_names.push_back("f" + std::to_string(f));
  for (std::size_t r = 0; r < rows; ++r)
    t.rows.push_back({r % 2 ? "a" : "b", "t", std::vector<double>(features, value)});
  return t;
}

bool bitwise_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Noise, IdentityAtZeroLevelOrSeverity) {
  SeededRng rng(1);
  const FrameTable t = random_table(2, 2, 50, 4, rng);
  const std::vector<double> sd(4, 1.0);
  EXPECT_EQ(inject_noise(t, {0.0, 2.0, 5}, sd).rows, t.rows);
  EXPECT_EQ(inject_noise(t, {1.0, 0.0, 5}, sd).rows, t.rows);
  CorruptionTally tally;
  EXPECT_EQ(inject_noise(t, {1.0, 0.0, 5}, sd, &tally).rows, t.rows);
  EXPECT_EQ(tally.cells, 800u);
}

TEST(Noise, CellStatisticsMatchSpec) {
  const FrameTable t = constant_table(25000, 4, 3.0);
  const std::vector<double> sd{2.0, 2.0, 2.0, 2.0};
  const NoiseSpec spec{0.3, 1.0, 17};
  CorruptionTally tally;
  const FrameTable out = inject_noise(t, spec, sd, &tally);
  const double n = 1e5;
  ASSERT_EQ(tally.cells, 100000u);
  const double frac = static_cast<double>(tally.corrupted) / n;
  EXPECT_LE(std::abs(frac - 0.3), 3 * std::sqrt(0.3 * 0.7 / n));

  double sum = 0.0, sq = 0.0;
  std::size_t changed = 0;
  for (const auto& r : out.rows)
    for (double v : r.values) {
      const double d = v - 3.0;
      if (d != 0.0) ++changed;
      sum += d;
      sq += d * d;
    }
  const double k = static_cast<double>(tally.corrupted);
  EXPECT_EQ(changed, tally.corrupted);
  EXPECT_LE(std::abs(sum / k), 3 * 2.0 / std::sqrt(k));
  EXPECT_LE(std::abs(sq / k - 4.0), 3 * std::sqrt(2.0 * 16.0 / k));
  EXPECT_NEAR(tally.perturbation_sum, sum, 1e-6);
}

TEST(Noise, ScalesWithSeverityAndFeatureStddev) {
  const FrameTable t = constant_table(20000, 2, 0.0);
  const std::vector<double> sd{1.0, 3.0};
  const FrameTable out = inject_noise(t, {1.0, 0.5, 3}, sd);
  double sq[2] = {0, 0};
  for (const auto& r : out.rows)
    for (int f = 0; f < 2; ++f) sq[f] += r.values[f] * r.values[f];
  const double n = 20000;
  EXPECT_LE(std::abs(sq[0] / n - 0.25), 3 * std::sqrt(2 * 0.0625 / n));
  EXPECT_LE(std::abs(sq[1] / n - 2.25), 3 * std::sqrt(2 * 2.25 * 2.25 / n));
}

TEST(Noise, PureAndDeterministic) {
  SeededRng rng(2);
  const FrameTable t = random_table(2, 1, 100, 3, rng);
  const FrameTable copy = t;
  const std::vector<double> sd(3, 1.0);
  const FrameTable a = inject_noise(t, {0.5, 1.0, 8}, sd);
  const FrameTable b = inject_noise(t, {0.5, 1.0, 8}, sd);
  const FrameTable c = inject_noise(t, {0.5, 1.0, 9}, sd);
  EXPECT_EQ(t.rows, copy.rows);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_NE(a.rows, c.rows);
}

TEST(Noise, MatchesReplayOfDrawProtocol) {
  SeededRng rng(3);
  const FrameTable t = random_table(2, 2, 40, 3, rng);
  const std::vector<double> sd{0.5, 1.0, 2.0};
  const NoiseSpec spec{0.4, 1.5, 77};
  const FrameTable out = inject_noise(t, spec, sd);
  SeededRng replay(77);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t f = 0; f < 3; ++f) {
      const double x = t.rows[r].values[f];
      if (replay.uniform() < 0.4) {
        EXPECT_EQ(out.rows[r].values[f], x + replay.gaussian() * 1.5 * sd[f]);
      } else {
        EXPECT_TRUE(bitwise_equal(out.rows[r].values[f], x));
      }
    }
}

TEST(Noise, WindowAndTableFormsAgreeOnSameCells) {
  SeededRng rng(4);
  const FrameTable t = random_table(2, 1, 64, 2, rng);
  const WindowSet w = make_windows(t, {16, 0.0});
  const std::vector<double> sd{1.0, 1.0};
  const NoiseSpec spec{0.5, 1.0, 4};
  const FrameTable ct = inject_noise(t, spec, sd);
  const WindowSet cw = inject_noise(w, spec, sd);
  // Zero-overlap windows cover every row exactly once in table order.
  for (std::size_t i = 0; i < cw.size(); ++i)
    for (std::size_t s = 0; s < 16; ++s)
      for (std::size_t f = 0; f < 2; ++f)
        EXPECT_EQ(cw.windows[i].values(s, f), ct.rows[cw.windows[i].first_row + s].values[f]);
}

TEST(Noise, MissingStatsAndRanges) {
  const FrameTable t = constant_table(4, 3, 1.0);
  EXPECT_THROW(inject_noise(t, {0.5, 1.0, 1}, std::vector<double>{1.0}), DataError);
  EXPECT_THROW((NoiseSpec{1.5, 1.0, 0}).validate(), DataError);
  EXPECT_THROW((NoiseSpec{0.5, 2.5, 0}).validate(), DataError);
  EXPECT_THROW((NoiseSpec{-0.1, 1.0, 0}).validate(), DataError);
  EXPECT_NO_THROW((NoiseSpec{1.0, 2.0, 0}).validate());
}

TEST(Anomaly, HandExampleAndIdentity) {
  const FrameTable t = constant_table(10, 2, 10.0);
  const FrameTable all = inject_anomaly(t, {1.0, 0.4, 1});
  for (const auto& r : all.rows)
    for (double v : r.values) EXPECT_DOUBLE_EQ(v, 14.0);
  EXPECT_EQ(inject_anomaly(t, {0.0, 0.4, 1}).rows, t.rows);
  EXPECT_EQ(inject_anomaly(t, {0.4, 0.0, 1}).rows, t.rows);
}

TEST(Anomaly, AffectedFractionStatistics) {
  const FrameTable t = constant_table(25000, 4, 5.0);
  CorruptionTally tally;
  const FrameTable out = inject_anomaly(t, {0.4, 0.2, 21}, &tally);
  std::size_t changed = 0;
  for (const auto& r : out.rows)
    for (double v : r.values) {
      if (v != 5.0) {
        ++changed;
        EXPECT_DOUBLE_EQ(v, 6.0);
      }
    }
  EXPECT_EQ(changed, tally.corrupted);
  const double n = 1e5;
  EXPECT_LE(std::abs(changed / n - 0.4), 3 * std::sqrt(0.24 / n));
}

TEST(Anomaly, PerRowModeScalesWholeRows) {
  const FrameTable t = constant_table(5000, 3, 2.0);
  AnomalySpec spec{0.4, 0.5, 6, AnomalyMode::kPerRow};
  const FrameTable out = inject_anomaly(t, spec);
  std::size_t rows_hit = 0;
  for (const auto& r : out.rows) {
    const bool hit = r.values[0] != 2.0;
    rows_hit += hit;
    for (double v : r.values) EXPECT_EQ(v, hit ? 3.0 : 2.0);
  }
  EXPECT_LE(std::abs(rows_hit / 5000.0 - 0.4), 3 * std::sqrt(0.24 / 5000));
}

TEST(Anomaly, ReplayAndUntouchedCellsBitwise) {
  SeededRng rng(5);
  const FrameTable t = random_table(2, 1, 80, 3, rng);
  const AnomalySpec spec{0.4, 0.65, 31};
  const FrameTable out = inject_anomaly(t, spec);
  SeededRng replay(31);
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t f = 0; f < 3; ++f) {
      const double x = t.rows[r].values[f];
      if (replay.uniform() < 0.4) {
        EXPECT_EQ(out.rows[r].values[f], x * 1.65);
      } else {
        EXPECT_TRUE(bitwise_equal(out.rows[r].values[f], x));
      }
    }
  EXPECT_EQ(inject_anomaly(t, spec).rows, out.rows);
}

TEST(Anomaly, ValidateRanges) {
  EXPECT_THROW((AnomalySpec{1.2, 0.1, 0}).validate(), DataError);
  EXPECT_THROW((AnomalySpec{0.4, 1.1, 0}).validate(), DataError);
  EXPECT_THROW((AnomalySpec{0.4, -0.1, 0}).validate(), DataError);
  EXPECT_NO_THROW((AnomalySpec{1.0, 1.0, 0}).validate());
}
