#include "drivesig/pipeline.hpp"

#include "drivesig/errors.hpp"

namespace drivesig {

namespace {

FrameTable table_from_windows(const WindowSet& windows, const FrameTable& source) {
  FrameTable out;
  out.feature_names = source.feature_names;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const Window& win = windows.windows[w];
    for (std::size_t t = 0; t < windows.window_length; ++t) {
      FrameRow row = source.rows[win.first_row + t];
      row.trip_id += "#w" + std::to_string(w);
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

WindowSet windows_for(const FrameTable& scaled, const PipelineSettings& settings,
                      const std::vector<std::string>& label_names) {
  return make_windows(scaled, settings.window, label_names);
}

PreparedData prepare_data(const FrameTable& raw, const PipelineSettings& settings) {
  settings.window.validate();
  settings.split.validate();
  raw.validate();
  PreparedData out;
  out.settings = settings;
  out.label_names = raw.driver_ids();
  if (out.label_names.size() < 2) {
    throw DataError(DataErrorKind::kTooFewDrivers, "need at least 2 distinct drivers");
  }

  if (settings.chronological_split) {
    SplitTables parts = split_chronological(raw, settings.split, settings.window.length);
    out.raw_train = std::move(parts.train);
    out.raw_validation = std::move(parts.validation);
    out.raw_test = std::move(parts.test);
  } else {
    SeededRng rng(settings.seed);
    const WindowSet all = make_windows(raw, settings.window, out.label_names);
    const WindowSplit parts = split_windows_random(all, settings.split, rng);
    if (parts.train.empty() || parts.validation.empty() || parts.test.empty()) {
      throw DataError(DataErrorKind::kDriverTooShort,
                      "too few windows for a random train/validation/test split");
    }
    out.raw_train = table_from_windows(parts.train, raw);
    out.raw_validation = table_from_windows(parts.validation, raw);
    out.raw_test = table_from_windows(parts.test, raw);
  }

  out.scaler = fit_scaler(settings.scale_globally ? raw : out.raw_train);
  out.train = transform(out.scaler, out.raw_train);
  out.validation = transform(out.scaler, out.raw_validation);
  out.test = transform(out.scaler, out.raw_test);
  out.train_windows = windows_for(out.train, settings, out.label_names);
  out.validation_windows = windows_for(out.validation, settings, out.label_names);
  out.test_windows = windows_for(out.test, settings, out.label_names);
  return out;
}

PreparedData with_tables(const PreparedData& base, FrameTable train, FrameTable validation,
                         FrameTable test) {
  PreparedData out;
  out.settings = base.settings;
  out.label_names = base.label_names;
  out.scaler = base.scaler;
  out.raw_train = base.raw_train;
  out.raw_validation = base.raw_validation;
  out.raw_test = base.raw_test;
  out.train = std::move(train);
  out.validation = std::move(validation);
  out.test = std::move(test);
  out.train_windows = windows_for(out.train, out.settings, out.label_names);
  out.validation_windows = windows_for(out.validation, out.settings, out.label_names);
  out.test_windows = windows_for(out.test, out.settings, out.label_names);
  return out;
}

TrainOutcome train_model(ModelKind kind, const PreparedData& data,
                         const ModelTrainingOptions& options) {
  TrainOutcome out;
  TrainedModel& m = out.model;
  m.kind = kind;
  m.label_names = data.label_names;
  m.feature_names = data.feature_names();
  m.scaler = data.scaler;
  m.pipeline = data.settings;
  const std::size_t classes = data.label_names.size();

  switch (kind) {
    case ModelKind::kLstm: {
      ModelConfig cfg = options.lstm;
      cfg.num_classes = classes;
      cfg.window_length = data.settings.window.length;
      auto result = train_lstm(data.train_windows, data.validation_windows, cfg, options.seed,
                               options.on_epoch);
      m.model = std::move(result.model);
      out.history = std::move(result.history);
      break;
    }
    case ModelKind::kFcnn: {
      ModelConfig cfg = options.fcnn;
      cfg.num_classes = classes;
      cfg.window_length = data.settings.window.length;
      auto result = train_fcnn(rows_from_table(data.train, data.label_names),
                               rows_from_table(data.validation, data.label_names), cfg,
                               options.seed, options.on_epoch);
      m.model = std::move(result.model);
      out.history = std::move(result.history);
      break;
    }
    case ModelKind::kTree: {
      SeededRng rng(options.seed);
      m.model = train_tree(rows_from_table(data.train, data.label_names), options.tree, rng);
      break;
    }
    case ModelKind::kForest:
      m.model = train_forest(rows_from_table(data.train, data.label_names), options.forest,
                             options.seed);
      break;
  }
  return out;
}

}  // namespace drivesig
