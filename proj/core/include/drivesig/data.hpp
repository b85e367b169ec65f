#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "drivesig/numerics.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

struct FrameRow {
  std::string driver_id;
  std::string trip_id;
  std::vector<double> values;

  friend bool operator==(const FrameRow&, const FrameRow&) = default;
};

// Driver-labelled sensor log. Row order within a trip is chronological.
struct FrameTable {
  std::vector<std::string> feature_names;
  std::vector<FrameRow> rows;

  std::size_t feature_count() const noexcept { return feature_names.size(); }
  std::size_t row_count() const noexcept { return rows.size(); }
  // Distinct driver ids sorted lexicographically.
  std::vector<std::string> driver_ids() const;
  // Throws ShapeError if any row's width differs from the header.
  void validate() const;
};

struct LoadOptions {
  std::string label_column = "driver_id";
  std::optional<std::string> trip_column;
  // Minimum distinct drivers required; training use needs 2.
  std::size_t min_drivers = 2;
};

struct LoadReport {
  std::vector<std::string> dropped_columns;
  std::size_t dropped_rows = 0;
};

// Reads a headered comma-separated log. A column is treated as text (and
// dropped) unless at least half of its non-empty cells parse as numbers;
// rows with any unparsable kept cell are then dropped. When no trip column
// is given each driver forms a single trip.
FrameTable load_csv(const std::string& path, const LoadOptions& options,
                    LoadReport* report = nullptr);

// Writes driver, trip and feature columns in the load_csv schema.
void write_csv(const FrameTable& table, const std::string& path,
               const std::string& label_column = "driver_id",
               const std::string& trip_column = "trip_id");

// Min-max scaler: x' = (x - min) / (max - min); constant features map to 0.
struct Scaler {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t feature_count() const noexcept { return min.size(); }
  double transform_value(std::size_t feature, double x) const noexcept;
  double inverse_value(std::size_t feature, double x) const noexcept;

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

Scaler fit_scaler(const FrameTable& subset);
// Out-of-range values are not clamped.
FrameTable transform(const Scaler& scaler, const FrameTable& table);
FrameTable inverse_transform(const Scaler& scaler, const FrameTable& table);

// Population standard deviation per feature.
std::vector<double> feature_stddev(const FrameTable& table);

struct SplitSpec {
  double train_fraction = 0.85;
  double val_fraction = 0.05;
  double test_fraction = 0.10;

  void validate() const;
};

struct SplitTables {
  FrameTable train;
  FrameTable validation;
  FrameTable test;
};

// Row counts a driver with n rows contributes to each part:
// train = floor(n * train_fraction), val = floor(n * val_fraction),
// test = the remainder.
struct PartSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};
PartSizes split_sizes(std::size_t n, const SplitSpec& spec);

// Per-driver positional split. Every part of every driver must hold at least
// one same-trip run of `min_window` rows, otherwise DataError naming the
// driver is thrown.
SplitTables split_chronological(const FrameTable& table, const SplitSpec& spec,
                                std::size_t min_window);

struct Window {
  Matrix values;  // window_length x feature_count
  std::size_t label = 0;
  // Provenance: index of the contiguous (driver, trip) segment and the
  // position of the first row inside the source table.
  std::size_t segment = 0;
  std::size_t first_row = 0;
};

struct WindowSet {
  std::vector<Window> windows;
  std::size_t window_length = 0;
  std::size_t stride = 0;
  std::vector<std::string> label_names;

  std::size_t size() const noexcept { return windows.size(); }
  bool empty() const noexcept { return windows.empty(); }
  std::size_t feature_count() const noexcept {
    return windows.empty() ? 0 : windows.front().values.cols();
  }
};

struct WindowSpec {
  std::size_t length = 16;
  double overlap = 0.5;

  std::size_t stride() const;
  void validate() const;
};

// Half-open [begin, end) row ranges of contiguous same-driver, same-trip runs.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
};
std::vector<Segment> trip_segments(const FrameTable& table);

// Windows per run of n rows: floor((n - length) / stride) + 1, or 0 if n < length.
std::size_t windows_in_segment(std::size_t n, std::size_t length, std::size_t stride);

// Cuts overlapping windows that never cross a trip boundary. Labels index
// into `label_names`; when empty the table's sorted driver ids are used.
WindowSet make_windows(const FrameTable& table, const WindowSpec& spec,
                       std::vector<std::string> label_names = {});

// Random window-level split (leaky with overlapping windows).
struct WindowSplit {
  WindowSet train;
  WindowSet validation;
  WindowSet test;
};
WindowSplit split_windows_random(const WindowSet& all, const SplitSpec& spec,
                                 SeededRng& rng);

// Index of `driver` in `label_names`; throws DataError if absent.
std::size_t label_index(const std::vector<std::string>& label_names,
                        const std::string& driver);

}  // namespace drivesig
