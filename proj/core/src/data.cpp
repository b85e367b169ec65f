#include "drivesig/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "drivesig/csv.hpp"
#include "drivesig/errors.hpp"

namespace drivesig {

std::vector<std::string> FrameTable::driver_ids() const {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.driver_id);
  return {ids.begin(), ids.end()};
}

void FrameTable::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].values.size() != feature_names.size()) {
      throw ShapeError("FrameTable: row " + std::to_string(i) + " has " +
                       std::to_string(rows[i].values.size()) + " values, expected " +
                       std::to_string(feature_names.size()));
    }
  }
}

FrameTable load_csv(const std::string& path, const LoadOptions& options,
                    LoadReport* report) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataErrorKind::kMissingFile, "cannot open data file: " + path);
  }
  auto header = csv::read_record(in);
  if (!header) {
    throw DataError(DataErrorKind::kNoUsableRows, path + ": empty file (no header row)");
  }

  const auto find_column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) {
      throw DataError(DataErrorKind::kMissingColumn,
                      path + ": missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header->begin());
  };
  const std::size_t label_col = find_column(options.label_column);
  std::optional<std::size_t> trip_col;
  if (options.trip_column) trip_col = find_column(*options.trip_column);

  std::vector<std::vector<std::string>> records;
  std::size_t malformed = 0;
  while (auto rec = csv::read_record(in)) {
    if (rec->size() != header->size()) {
      ++malformed;
      continue;
    }
    records.push_back(std::move(*rec));
  }

  std::vector<std::size_t> feature_cols;
  LoadReport local;
  for (std::size_t c = 0; c < header->size(); ++c) {
    if (c == label_col || (trip_col && c == *trip_col)) continue;
    std::size_t non_empty = 0;
    std::size_t numeric = 0;
    for (const auto& rec : records) {
      const auto& cell = rec[c];
      if (cell.find_first_not_of(" \t") == std::string::npos) continue;
      ++non_empty;
      if (csv::parse_number(cell)) ++numeric;
    }
    if (numeric > 0 && 2 * numeric >= non_empty) {
      feature_cols.push_back(c);
    } else {
      local.dropped_columns.push_back((*header)[c]);
    }
  }

  FrameTable table;
  for (std::size_t c : feature_cols) table.feature_names.push_back((*header)[c]);
  local.dropped_rows = malformed;
  for (auto& rec : records) {
    FrameRow row;
    row.values.reserve(feature_cols.size());
    bool ok = !rec[label_col].empty();
    for (std::size_t c : feature_cols) {
      auto v = csv::parse_number(rec[c]);
      if (!v) {
        ok = false;
        break;
      }
      row.values.push_back(*v);
    }
    if (!ok) {
      ++local.dropped_rows;
      continue;
    }
    row.driver_id = rec[label_col];
    row.trip_id = trip_col ? rec[*trip_col] : row.driver_id;
    table.rows.push_back(std::move(row));
  }

  if (report) *report = local;
  if (table.rows.empty() || table.feature_names.empty()) {
    throw DataError(DataErrorKind::kNoUsableRows, path + ": no usable numeric rows");
  }
  const auto drivers = table.driver_ids();
  if (drivers.size() < options.min_drivers) {
    throw DataError(DataErrorKind::kTooFewDrivers,
                    path + ": found " + std::to_string(drivers.size()) +
                        " distinct driver(s), need at least " +
                        std::to_string(options.min_drivers));
  }
  return table;
}

void write_csv(const FrameTable& table, const std::string& path,
               const std::string& label_column, const std::string& trip_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path);
  out << csv::quote(label_column) << ',' << csv::quote(trip_column);
  for (const auto& name : table.feature_names) out << ',' << csv::quote(name);
  out << '\n';
  for (const auto& row : table.rows) {
    out << csv::quote(row.driver_id) << ',' << csv::quote(row.trip_id);
    for (double v : row.values) out << ',' << csv::format_number(v);
    out << '\n';
  }
  if (!out) throw DataError(DataErrorKind::kIo, "failed writing " + path);
}

double Scaler::transform_value(std::size_t f, double x) const noexcept {
  const double range = max[f] - min[f];
  if (range == 0.0) return 0.0;
  return (x - min[f]) / range;
}

double Scaler::inverse_value(std::size_t f, double x) const noexcept {
  const double range = max[f] - min[f];
  if (range == 0.0) return min[f];
  return x * range + min[f];
}

Scaler fit_scaler(const FrameTable& subset) {
  if (subset.rows.empty()) {
    throw DataError(DataErrorKind::kEmptySubset, "fit_scaler: empty training subset");
  }
  subset.validate();
  const std::size_t d = subset.feature_count();
  Scaler s;
  s.min.assign(subset.rows.front().values.begin(), subset.rows.front().values.end());
  s.max = s.min;
  for (const auto& row : subset.rows) {
    for (std::size_t f = 0; f < d; ++f) {
      s.min[f] = std::min(s.min[f], row.values[f]);
      s.max[f] = std::max(s.max[f], row.values[f]);
    }
  }
  return s;
}

namespace {

template <typename Fn>
FrameTable map_values(const Scaler& scaler, const FrameTable& table, Fn fn) {
  if (scaler.feature_count() != table.feature_count()) {
    throw ShapeError("scaler has " + std::to_string(scaler.feature_count()) +
                     " features, table has " + std::to_string(table.feature_count()));
  }
  table.validate();
  FrameTable out = table;
  for (auto& row : out.rows) {
    for (std::size_t f = 0; f < row.values.size(); ++f) row.values[f] = fn(f, row.values[f]);
  }
  return out;
}

}  // namespace

FrameTable transform(const Scaler& scaler, const FrameTable& table) {
  return map_values(scaler, table,
                    [&](std::size_t f, double x) { return scaler.transform_value(f, x); });
}

FrameTable inverse_transform(const Scaler& scaler, const FrameTable& table) {
  return map_values(scaler, table,
                    [&](std::size_t f, double x) { return scaler.inverse_value(f, x); });
}

std::vector<double> feature_stddev(const FrameTable& table) {
  const std::size_t d = table.feature_count();
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  if (table.rows.empty()) return sq;
  for (const auto& row : table.rows)
    for (std::size_t f = 0; f < d; ++f) mean[f] += row.values[f];
  const double n = static_cast<double>(table.rows.size());
  for (double& m : mean) m /= n;
  for (const auto& row : table.rows)
    for (std::size_t f = 0; f < d; ++f) {
      const double dv = row.values[f] - mean[f];
      sq[f] += dv * dv;
    }
  for (double& s : sq) s = std::sqrt(s / n);
  return sq;
}

void SplitSpec::validate() const {
  for (double f : {train_fraction, val_fraction, test_fraction}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw DataError(DataErrorKind::kInvalidArgument,
                      "split fractions must each lie in (0,1)");
    }
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw DataError(DataErrorKind::kInvalidArgument, "split fractions must sum to 1");
  }
}

PartSizes split_sizes(std::size_t n, const SplitSpec& spec) {
  // The small slack keeps products such as 100 * 0.85 from rounding down.
  const auto part = [n](double f) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  PartSizes s;
  s.train = std::min(n, part(spec.train_fraction));
  s.validation = std::min(n - s.train, part(spec.val_fraction));
  s.test = n - s.train - s.validation;
  return s;
}

namespace {

std::size_t longest_trip_run(const std::vector<const FrameRow*>& rows, std::size_t begin,
                             std::size_t end) {
  std::size_t best = 0;
  std::size_t run = 0;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin && rows[i]->trip_id == rows[i - 1]->trip_id) {
      ++run;
    } else {
      run = 1;
    }
    best = std::max(best, run);
  }
  return best;
}

}  // namespace

SplitTables split_chronological(const FrameTable& table, const SplitSpec& spec,
                                std::size_t min_window) {
  spec.validate();
  table.validate();
  std::vector<std::string> order;
  std::map<std::string, std::vector<const FrameRow*>> by_driver;
  for (const auto& row : table.rows) {
    auto [it, inserted] = by_driver.try_emplace(row.driver_id);
    if (inserted) order.push_back(row.driver_id);
    it->second.push_back(&row);
  }

  SplitTables out;
  out.train.feature_names = out.validation.feature_names = out.test.feature_names =
      table.feature_names;
  for (const auto& driver : order) {
    const auto& rows = by_driver[driver];
    const PartSizes sizes = split_sizes(rows.size(), spec);
    const std::size_t cuts[4] = {0, sizes.train, sizes.train + sizes.validation,
                                 rows.size()};
    const char* names[3] = {"train", "validation", "test"};
    FrameTable* parts[3] = {&out.train, &out.validation, &out.test};
    for (int p = 0; p < 3; ++p) {
      if (longest_trip_run(rows, cuts[p], cuts[p + 1]) < std::max<std::size_t>(min_window, 1)) {
        throw DataError(DataErrorKind::kDriverTooShort,
                        "driver '" + driver + "' has too few rows (" +
                            std::to_string(rows.size()) + ") for a full " +
                            std::to_string(min_window) + "-row window in the " +
                            names[p] + " part");
      }
      for (std::size_t i = cuts[p]; i < cuts[p + 1]; ++i) parts[p]->rows.push_back(*rows[i]);
    }
  }
  return out;
}

std::size_t WindowSpec::stride() const {
  const double raw = std::round(static_cast<double>(length) * (1.0 - overlap));
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

void WindowSpec::validate() const {
  if (length < 2) {
    throw DataError(DataErrorKind::kInvalidArgument, "window length must be at least 2");
  }
  if (!(overlap >= 0.0 && overlap < 1.0)) {
    throw DataError(DataErrorKind::kInvalidArgument, "window overlap must lie in [0,1)");
  }
}

std::vector<Segment> trip_segments(const FrameTable& table) {
  std::vector<Segment> segments;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const bool continues = i > 0 && table.rows[i].driver_id == table.rows[i - 1].driver_id &&
                           table.rows[i].trip_id == table.rows[i - 1].trip_id;
    if (continues) {
      segments.back().end = i + 1;
    } else {
      segments.push_back({i, i + 1});
    }
  }
  return segments;
}

std::size_t windows_in_segment(std::size_t n, std::size_t length, std::size_t stride) {
  if (n < length || stride == 0) return 0;
  return (n - length) / stride + 1;
}

std::size_t label_index(const std::vector<std::string>& label_names,
                        const std::string& driver) {
  auto it = std::find(label_names.begin(), label_names.end(), driver);
  if (it == label_names.end()) {
    throw DataError(DataErrorKind::kInvalidArgument, "unknown driver label '" + driver + "'");
  }
  return static_cast<std::size_t>(it - label_names.begin());
}

WindowSet make_windows(const FrameTable& table, const WindowSpec& spec,
                       std::vector<std::string> label_names) {
  spec.validate();
  table.validate();
  WindowSet set;
  set.window_length = spec.length;
  set.stride = spec.stride();
  set.label_names = label_names.empty() ? table.driver_ids() : std::move(label_names);
  const std::size_t d = table.feature_count();
  const auto segments = trip_segments(table);
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const Segment& seg = segments[s];
    const std::size_t count = windows_in_segment(seg.end - seg.begin, spec.length, set.stride);
    if (count == 0) continue;
    const std::size_t label = label_index(set.label_names, table.rows[seg.begin].driver_id);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t start = seg.begin + w * set.stride;
      Window win;
      win.values = Matrix(spec.length, d);
      for (std::size_t t = 0; t < spec.length; ++t) {
        const auto& src = table.rows[start + t].values;
        std::copy(src.begin(), src.end(), win.values.row(t).begin());
      }
      win.label = label;
      win.segment = s;
      win.first_row = start;
      set.windows.push_back(std::move(win));
    }
  }
  return set;
}

WindowSplit split_windows_random(const WindowSet& all, const SplitSpec& spec,
                                 SeededRng& rng) {
  spec.validate();
  std::vector<std::size_t> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
  const PartSizes sizes = split_sizes(idx.size(), spec);
  WindowSplit out;
  for (WindowSet* w : {&out.train, &out.validation, &out.test}) {
    w->window_length = all.window_length;
    w->stride = all.stride;
    w->label_names = all.label_names;
  }
  for (std::size_t i = 0; i < idx.size(); ++i) {
    WindowSet& dst = i < sizes.train ? out.train
                     : i < sizes.train + sizes.validation ? out.validation
                                                          : out.test;
    dst.windows.push_back(all.windows[idx[i]]);
  }
  return out;
}

}  // namespace drivesig
