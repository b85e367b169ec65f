#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "drivesig/csv.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"
#include "drivesig/model_file.hpp"
#include "drivesig/pipeline.hpp"
#include "drivesig/synth.hpp"

namespace drivesig::cli {

namespace {

struct Options {
  // shared
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::string out_dir = ".";

  // data pipeline
  std::string data;
  std::string label_col = "driver_id";
  std::string trip_col;
  std::size_t window = 16;
  double overlap = 0.5;
  std::vector<double> split = {0.85, 0.05, 0.10};
  bool scale_globally = false;
  bool random_split = false;

  // models
  std::string model_kind = "lstm";
  std::vector<std::size_t> hidden = {160, 200};
  std::size_t epochs = 200;
  std::size_t patience = 10;
  std::size_t batch = 64;
  double lr = 1e-3;
  double clip_norm = 0.0;
  std::size_t trees = 100;
  std::size_t max_depth = 0;

  // files
  std::string out;
  std::vector<std::string> model_files;
  std::string model_file;

  // synth
  std::size_t drivers = 5;
  std::size_t trips = 3;
  std::size_t rows = 2000;
  std::size_t features = 8;

  // corruption / sweeps
  std::vector<double> severities = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  std::vector<double> rates = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.65};
  double level = 1.0;
  double severity = 1.0;
  double fraction = 0.40;
  std::size_t repeats = 10;
  bool corrupt_raw = false;
  bool per_row = false;
  std::vector<std::string> kinds = {"lstm", "tree", "forest", "fcnn"};

  // search
  std::vector<std::string> hidden_grid = {"160,200"};
  std::vector<std::size_t> windows = {4, 8, 16, 32, 64, 120};
  std::size_t search_epochs = 25;
  bool retrain = false;

  // predict
  std::size_t row = 0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Base random seed")
      ->envname("DRIVESIG_SEED")
      ->capture_default_str();
  sub->add_option("--jobs", o.jobs, "Worker threads (1 = serial, 0 = all cores)")
      ->capture_default_str();
  sub->add_option("--out-dir", o.out_dir, "Directory for outputs and run metadata")
      ->capture_default_str();
}

void add_data(CLI::App* sub, Options& o, bool pipeline = true) {
  sub->add_option("--data", o.data, "Input CSV log")->required();
  sub->add_option("--label-col", o.label_col, "Driver label column")->capture_default_str();
  sub->add_option("--trip-col", o.trip_col, "Trip column (default: trip_id if present, else one trip per driver)");
  if (!pipeline) return;
  sub->add_option("--window", o.window, "Window length in rows")->capture_default_str();
  sub->add_option("--overlap", o.overlap, "Fractional overlap of consecutive windows")
      ->capture_default_str();
  sub->add_option("--split", o.split, "Train,validation,test fractions")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  sub->add_flag("--scale-globally", o.scale_globally,
                "Fit the scaler on all rows instead of the training rows");
  sub->add_flag("--random-split", o.random_split,
                "Split windows at random instead of chronologically per driver");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--hidden", o.hidden, "Hidden layer sizes (LSTM and FCNN)")
      ->delimiter(',')
      ->capture_default_str();
  sub->add_option("--epochs", o.epochs, "Maximum training epochs")->capture_default_str();
  sub->add_option("--patience", o.patience, "Early-stopping patience (0 disables)")
      ->capture_default_str();
  sub->add_option("--batch", o.batch, "Mini-batch size")->capture_default_str();
  sub->add_option("--lr", o.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--clip-norm", o.clip_norm, "Global gradient-norm clip (0 disables)")
      ->capture_default_str();
  sub->add_option("--trees", o.trees, "Random forest size")->capture_default_str();
  sub->add_option("--max-depth", o.max_depth, "Tree depth limit (0 = unlimited)")
      ->capture_default_str();
}

PipelineSettings pipeline_from(const Options& o) {
  PipelineSettings p;
  p.label_column = o.label_col;
  if (!o.trip_col.empty()) p.trip_column = o.trip_col;
  p.window.length = o.window;
  p.window.overlap = o.overlap;
  p.split.train_fraction = o.split.at(0);
  p.split.val_fraction = o.split.at(1);
  p.split.test_fraction = o.split.at(2);
  p.scale_globally = o.scale_globally;
  p.chronological_split = !o.random_split;
  p.seed = o.seed;
  return p;
}

ModelTrainingOptions training_from(const Options& o) {
  ModelTrainingOptions t;
  t.seed = o.seed;
  t.lstm.hidden_sizes = o.hidden;
  t.lstm.window_length = o.window;
  t.lstm.learning_rate = o.lr;
  t.lstm.batch_size = o.batch;
  t.lstm.max_epochs = o.epochs;
  t.lstm.early_stop_patience = o.patience;
  t.lstm.clip_norm = o.clip_norm;
  t.fcnn = t.lstm;
  if (o.max_depth > 0) {
    t.tree.max_depth = o.max_depth;
    t.forest.max_depth = o.max_depth;
  }
  t.forest.n_trees = o.trees;
  t.forest.jobs = o.jobs;
  return t;
}

FrameTable load(const Options& o, const std::string& label_col, const std::string& trip_col,
                std::ostream& out) {
  LoadOptions lo;
  lo.label_column = label_col;
  if (!trip_col.empty()) lo.trip_column = trip_col;
  LoadReport report;
  FrameTable t = load_csv(o.data, lo, &report);
  for (const auto& c : report.dropped_columns) out << "dropped non-numeric column " << c << '\n';
  if (report.dropped_rows > 0) out << "dropped " << report.dropped_rows << " malformed rows\n";
  return t;
}

std::filesystem::path ensure_out_dir(const Options& o) {
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec || !std::filesystem::is_directory(o.out_dir)) {
    throw DataError(DataErrorKind::kIo, "cannot create output directory " + o.out_dir);
  }
  return std::filesystem::path(o.out_dir);
}

std::string join(const std::vector<std::string>& v, char sep = ' ') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += sep;
    s += v[i];
  }
  return s;
}

// Every option of the subcommand with its effective value.
RunMetadata metadata_for(const CLI::App* sub, const Options& o, int argc,
                         const char* const* argv, const std::string& digest) {
  RunMetadata m;
  std::vector<std::string> args(argv, argv + argc);
  if (!args.empty()) args[0] = "drivesig";
  m.command = join(args);
  m.dataset_digest = digest;
  m.seed = o.seed;
  for (const CLI::Option* opt : sub->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help") continue;
    const std::string value =
        opt->count() > 0 ? join(opt->results(), ',') : opt->get_default_str();
    m.settings.emplace_back(names.front(), value);
  }
  if (const auto* parent = sub->get_parent()) {
    const CLI::Option* config = parent->get_option_no_throw("--config");
    if (config && config->count() > 0) {
      const std::string path = config->as<std::string>();
      m.settings.emplace_back("config", path);
      m.settings.emplace_back("config_digest", file_digest(path));
    }
  }
  return m;
}

void write_metadata(const std::filesystem::path& dir, const std::string& name,
                    const RunMetadata& m, std::ostream& out) {
  const auto path = (dir / (name + ".json")).string();
  write_text_file(path, metadata_json(m));
  out << "wrote " << path << '\n';
}

std::string history_csv(const TrainingHistory& h) {
  std::ostringstream os;
  os << "epoch,train_loss,val_macro_f1\n";
  for (const auto& e : h.epochs) {
    os << e.epoch << ',' << csv::format_number(e.train_loss) << ','
       << csv::format_number(e.val_macro_f1) << '\n';
  }
  return os.str();
}

std::vector<TrainedModel> load_models(const std::vector<std::string>& paths) {
  std::vector<TrainedModel> models;
  for (const auto& p : paths) models.push_back(load_model(p));
  for (std::size_t i = 1; i < models.size(); ++i) {
    const auto& a = models.front().pipeline;
    const auto& b = models[i].pipeline;
    if (models[i].label_names != models.front().label_names ||
        a.label_column != b.label_column || a.trip_column != b.trip_column ||
        a.window.length != b.window.length || a.window.overlap != b.window.overlap ||
        a.chronological_split != b.chronological_split ||
        a.scale_globally != b.scale_globally || a.seed != b.seed) {
      throw DataError(DataErrorKind::kInvalidArgument,
                      "models " + paths.front() + " and " + paths[i] +
                          " were trained with different data pipelines");
    }
  }
  return models;
}

PreparedData data_for_model(const Options& o, const TrainedModel& model, std::ostream& out) {
  const FrameTable raw =
      load(o, model.pipeline.label_column, model.pipeline.trip_column.value_or(""), out);
  return prepare_data(raw, model.pipeline);
}

void print_metrics(std::ostream& out, std::string_view name, const MetricsReport& m) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%s: macro precision %.4f  macro recall %.4f  macro F1 %.4f  accuracy %.4f "
                "(%zu windows)\n",
                std::string(name).c_str(), m.macro_precision, m.macro_recall, m.macro_f1,
                m.accuracy, m.window_count);
  out << buf;
  if (m.any_degenerate()) out << "note: some per-class metrics had a zero denominator\n";
}

// ---- subcommands ------------------------------------------------------------

int run_synth(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
              std::ostream& out) {
  SynthOptions so;
  so.trips_per_driver = o.trips;
  so.rows_per_trip = o.rows;
  so.feature_count = o.features;
  so.seed = o.seed;
  const FrameTable table = generate(default_profiles(o.features, o.drivers), so);
  const auto dir = ensure_out_dir(o);
  const std::string path = o.out.empty() ? (dir / "synth.csv").string() : o.out;
  write_csv(table, path);
  out << "wrote " << path << " (" << table.row_count() << " rows, " << table.feature_count()
      << " features, " << o.drivers << " drivers)\n";
  write_metadata(dir, "synth", metadata_for(sub, o, argc, argv, file_digest(path)), out);
  return 0;
}

int run_prepare(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
                std::ostream& out) {
  const FrameTable raw = load(o, o.label_col, o.trip_col, out);
  const PreparedData data = prepare_data(raw, pipeline_from(o));
  const auto dir = ensure_out_dir(o);
  const std::string label = o.label_col;
  const std::string trip = o.trip_col.empty() ? "trip_id" : o.trip_col;
  write_csv(data.train, (dir / "train.csv").string(), label, trip);
  write_csv(data.validation, (dir / "validation.csv").string(), label, trip);
  write_csv(data.test, (dir / "test.csv").string(), label, trip);
  std::ostringstream scaler;
  scaler << "feature,min,max\n";
  for (std::size_t f = 0; f < data.scaler.feature_count(); ++f) {
    scaler << csv::quote(data.feature_names()[f]) << ',' << csv::format_number(data.scaler.min[f])
           << ',' << csv::format_number(data.scaler.max[f]) << '\n';
  }
  write_text_file((dir / "scaler.csv").string(), scaler.str());
  out << "windows: train " << data.train_windows.size() << ", validation "
      << data.validation_windows.size() << ", test " << data.test_windows.size() << '\n';
  out << "wrote train.csv, validation.csv, test.csv, scaler.csv under " << o.out_dir << '\n';
  write_metadata(dir, "prepare", metadata_for(sub, o, argc, argv, file_digest(o.data)), out);
  return 0;
}

int run_train(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
              std::ostream& out) {
  const ModelKind kind = parse_model_kind(o.model_kind);
  const FrameTable raw = load(o, o.label_col, o.trip_col, out);
  const PreparedData data = prepare_data(raw, pipeline_from(o));
  ModelTrainingOptions t = training_from(o);
  t.on_epoch = [&out](const EpochRecord& r) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "epoch %zu  loss %.6f  val macro F1 %.4f\n", r.epoch,
                  r.train_loss, r.val_macro_f1);
    out << buf << std::flush;
  };
  const TrainOutcome outcome = train_model(kind, data, t);
  const auto dir = ensure_out_dir(o);
  const std::string name(to_string(kind));
  const std::string path = o.out.empty() ? (dir / ("model_" + name + ".dsm")).string() : o.out;
  save_model(outcome.model, path);
  out << "wrote " << path << '\n';
  if (!outcome.history.epochs.empty()) {
    const auto hist = (dir / ("history_" + name + ".csv")).string();
    write_text_file(hist, history_csv(outcome.history));
    out << "best epoch " << outcome.history.best_epoch << " (val macro F1 "
        << csv::format_number(outcome.history.best_val_macro_f1) << ")\n";
  }
  write_metadata(dir, "train_" + name, metadata_for(sub, o, argc, argv, file_digest(o.data)),
                 out);
  return 0;
}

int run_evaluate(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
                 std::ostream& out) {
  const TrainedModel model = load_model(o.model_file);
  const PreparedData data = data_for_model(o, model, out);
  const Evaluation ev = evaluate(model, data.test_windows);
  const std::string name(to_string(model.kind));
  print_metrics(out, name, ev.metrics);
  const auto dir = ensure_out_dir(o);
  const auto path = (dir / ("metrics_" + name + ".csv")).string();
  write_text_file(path, metrics_csv(ev.metrics, model.label_names, name));
  out << "wrote " << path << '\n';
  write_metadata(dir, "evaluate_" + name, metadata_for(sub, o, argc, argv, file_digest(o.data)),
                 out);
  return 0;
}

int run_sweep(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
              std::ostream& out, bool anomaly) {
  const std::vector<TrainedModel> models = load_models(o.model_files);
  const PreparedData data = data_for_model(o, models.front(), out);
  SweepOptions so;
  so.repeats = o.repeats;
  so.base_seed = o.seed;
  so.corrupt_raw = o.corrupt_raw;
  so.anomaly_mode = o.per_row ? AnomalyMode::kPerRow : AnomalyMode::kPerCell;
  so.jobs = o.jobs;
  const SweepResult result = anomaly ? sweep_anomaly(models, data, o.rates, o.fraction, so)
                                     : sweep_noise(models, data, o.severities, o.level, so);
  out << sweep_csv(result);
  const auto files =
      emit_report(result, o.out_dir, metadata_for(sub, o, argc, argv, file_digest(o.data)));
  out << "wrote " << files.csv << ", " << files.metadata << ", " << files.svg << '\n';
  return 0;
}

int run_train_corrupted(const Options& o, const CLI::App* sub, int argc,
                        const char* const* argv, std::ostream& out) {
  std::vector<ModelKind> kinds;
  for (const auto& k : o.kinds) kinds.push_back(parse_model_kind(k));
  const FrameTable raw = load(o, o.label_col, o.trip_col, out);
  const PreparedData data = prepare_data(raw, pipeline_from(o));
  NoiseSpec noise;
  noise.level = o.level;
  noise.severity = o.severity;
  noise.seed = o.seed;
  const CorruptedTrainingReport report =
      train_on_corrupted(kinds, data, noise, training_from(o), o.corrupt_raw);
  const std::string text = corrupted_training_csv(report);
  out << text;
  const auto dir = ensure_out_dir(o);
  const auto path = (dir / "corrupted_training.csv").string();
  write_text_file(path, text);
  out << "wrote " << path << '\n';
  write_metadata(dir, "train_corrupted", metadata_for(sub, o, argc, argv, file_digest(o.data)),
                 out);
  return 0;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = csv::parse_number(item);
    if (!v || *v < 1 || *v != static_cast<double>(static_cast<std::size_t>(*v))) {
      throw UsageError("--hidden-grid: bad layer size '" + item + "' in '" + text + "'");
    }
    out.push_back(static_cast<std::size_t>(*v));
  }
  if (out.empty()) throw UsageError("--hidden-grid: empty architecture");
  return out;
}

int run_search(const Options& o, const CLI::App* sub, int argc, const char* const* argv,
               std::ostream& out) {
  std::vector<std::vector<std::size_t>> grid;
  for (const auto& g : o.hidden_grid) grid.push_back(parse_sizes(g));
  const FrameTable raw = load(o, o.label_col, o.trip_col, out);
  const PreparedData data = prepare_data(raw, pipeline_from(o));
  const ModelConfig base = training_from(o).lstm;
  const auto table = grid_search(grid, o.windows, data, base, o.search_epochs, o.seed, o.jobs);
  const std::string text = search_csv(table);
  out << text;
  const auto dir = ensure_out_dir(o);
  const auto path = (dir / "search.csv").string();
  write_text_file(path, text);
  out << "wrote " << path << '\n';
  if (o.retrain && table.front().feasible) {
    Options best = o;
    best.hidden = table.front().hidden_sizes;
    best.window = table.front().window_length;
    const PreparedData best_data = prepare_data(raw, pipeline_from(best));
    const TrainOutcome outcome = train_model(ModelKind::kLstm, best_data, training_from(best));
    const std::string model_path = o.out.empty() ? (dir / "model_lstm.dsm").string() : o.out;
    save_model(outcome.model, model_path);
    out << "retrained best configuration, wrote " << model_path << '\n';
  }
  write_metadata(dir, "search", metadata_for(sub, o, argc, argv, file_digest(o.data)), out);
  return 0;
}

int run_predict(const Options& o, std::ostream& out) {
  const TrainedModel model = load_model(o.model_file);
  std::ifstream in(o.data, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open " + o.data);
  const auto header = csv::read_record(in);
  if (!header) throw DataError(DataErrorKind::kNoUsableRows, o.data + " is empty");
  std::vector<std::size_t> columns;
  for (const auto& feature : model.feature_names) {
    auto it = std::find(header->begin(), header->end(), feature);
    if (it == header->end()) {
      throw DataError(DataErrorKind::kMissingColumn,
                      o.data + " has no column '" + feature + "' required by the model");
    }
    columns.push_back(static_cast<std::size_t>(it - header->begin()));
  }
  const std::size_t length = model.kind == ModelKind::kLstm
                                 ? std::get<LstmModel>(model.model).config.window_length
                                 : model.pipeline.window.length;
  Matrix window(length, columns.size());
  std::size_t index = 0, taken = 0;
  while (taken < length) {
    const auto rec = csv::read_record(in);
    if (!rec) {
      throw DataError(DataErrorKind::kNoUsableRows,
                      o.data + ": need " + std::to_string(length) + " rows from row " +
                          std::to_string(o.row) + ", found " + std::to_string(taken));
    }
    if (index++ < o.row) continue;
    for (std::size_t f = 0; f < columns.size(); ++f) {
      const auto v = columns[f] < rec->size() ? csv::parse_number((*rec)[columns[f]])
                                              : std::optional<double>{};
      if (!v) {
        throw DataError(DataErrorKind::kNoUsableRows,
                        o.data + ": row " + std::to_string(index - 1) + " has a bad value for '" +
                            model.feature_names[f] + "'");
      }
      window(taken, f) = model.scaler.transform_value(f, *v);
    }
    ++taken;
  }
  const Prediction p = predict_window(model, window);
  out << "predicted " << model.label_names.at(p.label) << '\n';
  for (std::size_t k = 0; k < p.probabilities.size(); ++k) {
    out << "  " << model.label_names[k] << ' ' << csv::format_number(p.probabilities[k]) << '\n';
  }
  return 0;
}

std::string detect_trip_column(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  const auto header = csv::read_record(in);
  if (header && std::find(header->begin(), header->end(), "trip_id") != header->end()) {
    return "trip_id";
  }
  return {};
}

void build(CLI::App& app, Options& o, std::map<std::string, CLI::App*>& subs) {
  app.set_config("--config", "", "INI config file; [section] per subcommand, flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(DRIVESIG_VERSION));

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-driver log");
  add_common(synth, o);
  synth->add_option("--out", o.out, "Output CSV (default <out-dir>/synth.csv)");
  synth->add_option("--drivers", o.drivers, "Number of drivers")->capture_default_str();
  synth->add_option("--trips", o.trips, "Trips per driver")->capture_default_str();
  synth->add_option("--rows", o.rows, "Rows per trip")->capture_default_str();
  synth->add_option("--features", o.features, "Sensor features")->capture_default_str();
  subs["synth"] = synth;

  auto* prepare = app.add_subcommand("prepare", "Load, scale, split and window a log");
  add_common(prepare, o);
  add_data(prepare, o);
  subs["prepare"] = prepare;

  auto* train = app.add_subcommand("train", "Train one model and save it");
  add_common(train, o);
  add_data(train, o);
  train->add_option("--model", o.model_kind, "Model kind: lstm, tree, forest or fcnn")
      ->check(CLI::IsMember({"lstm", "tree", "forest", "fcnn"}))
      ->capture_default_str();
  add_model(train, o);
  train->add_option("--out", o.out, "Model file (default <out-dir>/model_<kind>.dsm)");
  subs["train"] = train;

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a saved model on its test split");
  add_common(evaluate_cmd, o);
  evaluate_cmd->add_option("--model", o.model_file, "Saved model file")->required();
  evaluate_cmd->add_option("--data", o.data, "Input CSV log")->required();
  subs["evaluate"] = evaluate_cmd;

  const auto add_sweep_common = [&](CLI::App* s) {
    add_common(s, o);
    s->add_option("--models", o.model_files, "Saved model files")
        ->delimiter(',')
        ->required();
    s->add_option("--data", o.data, "Input CSV log")->required();
    s->add_option("--repeats", o.repeats, "Corrupted copies per grid point")
        ->capture_default_str();
    s->add_flag("--corrupt-raw", o.corrupt_raw, "Corrupt raw values before scaling");
  };
  auto* sweep_noise_cmd = app.add_subcommand("sweep-noise", "Accuracy under Gaussian noise");
  add_sweep_common(sweep_noise_cmd);
  sweep_noise_cmd->add_option("--severities", o.severities, "Noise std grid, in feature stds")
      ->delimiter(',')
      ->capture_default_str();
  sweep_noise_cmd->add_option("--level", o.level, "Per-cell corruption probability")
      ->capture_default_str();
  subs["sweep-noise"] = sweep_noise_cmd;

  auto* sweep_anomaly_cmd =
      app.add_subcommand("sweep-anomaly", "Accuracy under multiplicative anomalies");
  add_sweep_common(sweep_anomaly_cmd);
  sweep_anomaly_cmd->add_option("--rates", o.rates, "Anomaly rate grid")
      ->delimiter(',')
      ->capture_default_str();
  sweep_anomaly_cmd->add_option("--fraction", o.fraction, "Affected fraction of cells")
      ->capture_default_str();
  sweep_anomaly_cmd->add_flag("--per-row", o.per_row, "Select whole rows instead of cells");
  subs["sweep-anomaly"] = sweep_anomaly_cmd;

  auto* corrupted = app.add_subcommand("train-corrupted", "Train and test on noisy data");
  add_common(corrupted, o);
  add_data(corrupted, o);
  add_model(corrupted, o);
  corrupted->add_option("--models", o.kinds, "Model kinds to train")
      ->delimiter(',')
      ->check(CLI::IsMember({"lstm", "tree", "forest", "fcnn"}))
      ->capture_default_str();
  corrupted->add_option("--severity", o.severity, "Noise std, in feature stds")
      ->capture_default_str();
  corrupted->add_option("--level", o.level, "Per-cell corruption probability")
      ->capture_default_str();
  corrupted->add_flag("--corrupt-raw", o.corrupt_raw, "Corrupt raw values before scaling");
  subs["train-corrupted"] = corrupted;

  auto* search = app.add_subcommand("search", "Grid search over LSTM sizes and windows");
  add_common(search, o);
  add_data(search, o);
  add_model(search, o);
  search->add_option("--hidden-grid", o.hidden_grid,
                     "Architectures, e.g. --hidden-grid 64,64 --hidden-grid 160,200")
      ->capture_default_str();
  search->add_option("--windows", o.windows, "Window lengths")
      ->delimiter(',')
      ->capture_default_str();
  search->add_option("--search-epochs", o.search_epochs, "Epochs per grid cell")
      ->capture_default_str();
  search->add_flag("--retrain", o.retrain, "Retrain the best cell with the full epoch budget");
  search->add_option("--out", o.out, "Model file for --retrain (default <out-dir>/model_lstm.dsm)");
  subs["search"] = search;

  auto* predict_cmd = app.add_subcommand("predict", "Classify one window from a CSV slice");
  add_common(predict_cmd, o);
  predict_cmd->add_option("--model", o.model_file, "Saved model file")->required();
  predict_cmd->add_option("--data", o.data, "CSV with the model's feature columns")->required();
  predict_cmd->add_option("--row", o.row, "First data row of the window")->capture_default_str();
  subs["predict"] = predict_cmd;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Driver identification from vehicle telematics logs", "drivesig"};
  Options o;
  std::map<std::string, CLI::App*> subs;
  build(app, o, subs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << DRIVESIG_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto& [name, sub] : subs) {
      if (sub->parsed()) failing = sub;
    }
    err << failing->help();
    return 1;
  }

  std::string name;
  const CLI::App* sub = nullptr;
  for (const auto& [n, s] : subs) {
    if (s->parsed()) {
      name = n;
      sub = s;
    }
  }

  try {
    if (o.trip_col.empty() && !o.data.empty()) o.trip_col = detect_trip_column(o.data);
    out << "seed " << o.seed << '\n';
    if (name == "synth") return run_synth(o, sub, argc, argv, out);
    if (name == "prepare") return run_prepare(o, sub, argc, argv, out);
    if (name == "train") return run_train(o, sub, argc, argv, out);
    if (name == "evaluate") return run_evaluate(o, sub, argc, argv, out);
    if (name == "sweep-noise") return run_sweep(o, sub, argc, argv, out, false);
    if (name == "sweep-anomaly") return run_sweep(o, sub, argc, argv, out, true);
    if (name == "train-corrupted") return run_train_corrupted(o, sub, argc, argv, out);
    if (name == "search") return run_search(o, sub, argc, argv, out);
    if (name == "predict") return run_predict(o, out);
    err << "error: no subcommand\n" << app.help();
    return 1;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const TrainingError& e) {
    err << "training error: " << e.what() << '\n';
    return 3;
  } catch (const ModelFileError& e) {
    err << "model file error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace drivesig::cli
