#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"

namespace drivesig {

Evaluation evaluate(const TrainedModel& model, const WindowSet& test) {
  if (test.empty()) throw ShapeError("evaluate: empty test window set");
  if (test.label_names != model.label_names) {
    throw ShapeError("evaluate: test windows use a different label list than the model");
  }
  Evaluation out;
  out.predictions = predict_windows(model, test);
  std::vector<std::size_t> truth, predicted;
  truth.reserve(test.size());
  predicted.reserve(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    truth.push_back(test.windows[i].label);
    predicted.push_back(out.predictions[i].label);
  }
  out.metrics = compute_metrics(truth, predicted, model.num_classes());
  return out;
}

CorruptedTrainingReport train_on_corrupted(std::span<const ModelKind> kinds,
                                           const PreparedData& data, const NoiseSpec& noise,
                                           const ModelTrainingOptions& options,
                                           bool corrupt_raw) {
  noise.validate();
  const std::vector<double> sigma = clean_feature_stddev(data, corrupt_raw);
  const auto corrupt = [&](const FrameTable& raw, const FrameTable& scaled, std::uint64_t seed) {
    NoiseSpec s = noise;
    s.seed = seed;
    if (corrupt_raw) return transform(data.scaler, inject_noise(raw, s, sigma));
    return inject_noise(scaled, s, sigma);
  };
  const PreparedData noisy =
      with_tables(data, corrupt(data.raw_train, data.train, noise.seed),
                  corrupt(data.raw_validation, data.validation, noise.seed + 1),
                  corrupt(data.raw_test, data.test, noise.seed + 2));

  CorruptedTrainingReport report;
  report.noise = noise;
  for (ModelKind kind : kinds) {
    TrainOutcome trained = train_model(kind, noisy, options);
    const Evaluation ev = evaluate(trained.model, noisy.test_windows);
    report.rows.push_back({std::string(to_string(kind)), ev.metrics.accuracy, ev.metrics.macro_f1});
    report.models.push_back(std::move(trained.model));
  }
  return report;
}

}  // namespace drivesig
