#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "drivesig/classifier.hpp"
#include "drivesig/corruption.hpp"
#include "drivesig/lstm.hpp"
#include "drivesig/metrics.hpp"
#include "drivesig/pipeline.hpp"

namespace drivesig {

struct Evaluation {
  MetricsReport metrics;
  std::vector<Prediction> predictions;
};

Evaluation evaluate(const TrainedModel& model, const WindowSet& test);

// ---- Robustness sweeps -------------------------------------------------------

enum class SweepAxis { kNoiseSeverity, kNoiseLevel, kAnomalyRate };
std::string_view to_string(SweepAxis axis);

struct SweepOptions {
  std::size_t repeats = 10;
  std::uint64_t base_seed = 0;
  // Corrupt raw test rows and scale afterwards instead of corrupting the
  // scaled rows.
  bool corrupt_raw = false;
  AnomalyMode anomaly_mode = AnomalyMode::kPerCell;
  std::size_t jobs = 1;
};

struct SweepSeries {
  std::string model;
  std::vector<double> mean_accuracy;  // one per grid point
  std::vector<double> std_accuracy;   // population std over repeats
};

struct SweepResult {
  SweepAxis axis = SweepAxis::kNoiseSeverity;
  std::vector<double> grid;
  std::vector<SweepSeries> series;
  std::size_t repeats = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;  // base_seed + r for r < repeats
  // The parameter held fixed: noise level, noise severity or affected fraction.
  double fixed_parameter = 0.0;
  std::size_t window_count = 0;
  bool corrupt_raw = false;
};

// Per-feature stddev of the clean training rows in the space the sweep
// corrupts (raw or scaled).
std::vector<double> clean_feature_stddev(const PreparedData& data, bool raw);

// Each (grid point, repeat r) corrupts a fresh copy of the test rows with seed
// base_seed + r, re-cuts the windows and scores every model.
SweepResult sweep_noise(std::span<const TrainedModel> models, const PreparedData& data,
                        std::span<const double> severities, double level,
                        const SweepOptions& options);
SweepResult sweep_noise_level(std::span<const TrainedModel> models, const PreparedData& data,
                              std::span<const double> levels, double severity,
                              const SweepOptions& options);
SweepResult sweep_anomaly(std::span<const TrainedModel> models, const PreparedData& data,
                          std::span<const double> rates, double affected_fraction,
                          const SweepOptions& options);

// ---- Training on corrupted data ---------------------------------------------

struct CorruptedTrainingRow {
  std::string model;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

struct CorruptedTrainingReport {
  NoiseSpec noise;
  std::vector<CorruptedTrainingRow> rows;
  std::vector<TrainedModel> models;
};

// Corrupts train and validation once (seeds noise.seed and noise.seed + 1),
// trains every kind, and scores each on the test rows corrupted with
// noise.seed + 2.
CorruptedTrainingReport train_on_corrupted(std::span<const ModelKind> kinds,
                                           const PreparedData& data, const NoiseSpec& noise,
                                           const ModelTrainingOptions& options,
                                           bool corrupt_raw = false);

// ---- Architecture / window search ---------------------------------------------

struct SearchCandidate {
  std::vector<std::size_t> hidden_sizes;
  std::size_t window_length = 0;
  double val_macro_f1 = 0.0;
  std::size_t epochs_run = 0;
  bool feasible = true;  // false when the window produced no train/val windows
  std::size_t rank = 0;  // 1-based
};

// Trains one LSTM per (hidden sizes, window) cell with `epochs` epochs and
// returns all cells sorted by validation macro-F1 (grid order breaks ties).
std::vector<SearchCandidate> grid_search(
    std::span<const std::vector<std::size_t>> hidden_grid, std::span<const std::size_t> windows,
    const PreparedData& data, const ModelConfig& base, std::size_t epochs, std::uint64_t seed,
    std::size_t jobs = 1);

// ---- Output files -------------------------------------------------------------

struct RunMetadata {
  std::string command;
  std::string dataset_digest;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> settings;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
// Hex FNV-1a digest of a file's bytes; throws DataError if unreadable.
std::string file_digest(const std::string& path);

// CSV header: model,axis,value,mean_acc,std_acc,repeats,seed
std::string sweep_csv(const SweepResult& result);
std::string sweep_svg(const SweepResult& result, std::string_view title);

struct ReportFiles {
  std::string csv;
  std::string metadata;
  std::string svg;
};

// Writes <stem>.csv, <stem>.json and <stem>.svg under out_dir (created if
// needed); stem defaults to "sweep_<axis>".
ReportFiles emit_report(const SweepResult& result, const std::string& out_dir,
                        const RunMetadata& metadata, std::string stem = {});

std::string metrics_csv(const MetricsReport& report, std::span<const std::string> label_names,
                        std::string_view model);
std::string search_csv(std::span<const SearchCandidate> table);
std::string corrupted_training_csv(const CorruptedTrainingReport& report);

// JSON text of metadata plus any extra key/value pairs.
std::string metadata_json(const RunMetadata& metadata);

void write_text_file(const std::string& path, std::string_view text);

}  // namespace drivesig
