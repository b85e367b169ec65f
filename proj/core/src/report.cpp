#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "drivesig/csv.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"

namespace drivesig {

namespace {

using Json = nlohmann::ordered_json;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out.push_back(ch);
    }
  }
  return out;
}

Json metadata_object(const RunMetadata& metadata) {
  Json j;
  j["tool"] = "drivesig";
  j["tool_version"] = DRIVESIG_VERSION;
  j["command"] = metadata.command;
  j["dataset_digest"] = metadata.dataset_digest;
  j["seed"] = metadata.seed;
  Json settings = Json::object();
  for (const auto& [k, v] : metadata.settings) settings[k] = v;
  j["settings"] = settings;
  return j;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::kIo, "cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError(DataErrorKind::kIo, "failed writing " + path);
}

std::string metadata_json(const RunMetadata& metadata) {
  return metadata_object(metadata).dump(2) + "\n";
}

std::string sweep_csv(const SweepResult& result) {
  std::ostringstream os;
  os << "model,axis,value,mean_acc,std_acc,repeats,seed\n";
  for (const auto& s : result.series) {
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
      os << csv::quote(s.model) << ',' << to_string(result.axis) << ','
         << csv::format_number(result.grid[g]) << ',' << csv::format_number(s.mean_accuracy[g])
         << ',' << csv::format_number(s.std_accuracy[g]) << ',' << result.repeats << ','
         << result.base_seed << '\n';
    }
  }
  return os.str();
}

std::string sweep_svg(const SweepResult& result, std::string_view title) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  double x_min = result.grid.empty() ? 0.0 : result.grid.front();
  double x_max = x_min;
  for (double g : result.grid) {
    x_min = std::min(x_min, g);
    x_max = std::max(x_max, g);
  }
  const double x_span = x_max > x_min ? x_max - x_min : 1.0;
  const auto px = [&](double x) { return kLeft + (x - x_min) / x_span * plot_w; };
  const auto py = [&](double y) { return kTop + (1.0 - y) * plot_h; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"white\"/>\n"
     << "  <text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
  // Axes and ticks.
  os << "  <g stroke=\"black\" stroke-width=\"1\">\n"
     << "    <line x1=\"" << kLeft << "\" y1=\"" << fixed(py(0)) << "\" x2=\""
     << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(py(0)) << "\"/>\n"
     << "    <line x1=\"" << kLeft << "\" y1=\"" << fixed(py(0)) << "\" x2=\"" << kLeft
     << "\" y2=\"" << fixed(py(1)) << "\"/>\n"
     << "  </g>\n";
  os << "  <g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = i / 5.0;
    os << "    <line x1=\"" << kLeft << "\" y1=\"" << fixed(py(y)) << "\" x2=\""
       << fixed(kLeft + plot_w) << "\" y2=\"" << fixed(py(y))
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
       << "    <text x=\"" << fixed(kLeft - 6) << "\" y=\"" << fixed(py(y) + 4)
       << "\" text-anchor=\"end\">" << fixed(y, 1) << "</text>\n";
  }
  for (double g : result.grid) {
    os << "    <text x=\"" << fixed(px(g)) << "\" y=\"" << fixed(py(0) + 16)
       << "\" text-anchor=\"middle\">" << fixed(g) << "</text>\n";
  }
  os << "    <text x=\"" << fixed(kLeft + plot_w / 2) << "\" y=\"" << fixed(kHeight - 10)
     << "\" text-anchor=\"middle\">" << xml_escape(to_string(result.axis)) << "</text>\n"
     << "    <text x=\"16\" y=\"" << fixed(kTop + plot_h / 2)
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << fixed(kTop + plot_h / 2)
     << ")\">mean accuracy</text>\n"
     << "  </g>\n";
  for (std::size_t s = 0; s < result.series.size(); ++s) {
    const auto& series = result.series[s];
    const char* color = kColors[s % std::size(kColors)];
    os << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
      if (g > 0) os << ' ';
      os << fixed(px(result.grid[g])) << ',' << fixed(py(series.mean_accuracy[g]));
    }
    os << "\"/>\n";
    for (std::size_t g = 0; g < result.grid.size(); ++g) {
      os << "  <circle cx=\"" << fixed(px(result.grid[g])) << "\" cy=\""
         << fixed(py(series.mean_accuracy[g])) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 10 + 18.0 * static_cast<double>(s);
    os << "  <line x1=\"" << fixed(kLeft + plot_w + 15) << "\" y1=\"" << fixed(ly) << "\" x2=\""
       << fixed(kLeft + plot_w + 35) << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "  <text x=\"" << fixed(kLeft + plot_w + 40) << "\" y=\"" << fixed(ly + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(series.model)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

ReportFiles emit_report(const SweepResult& result, const std::string& out_dir,
                        const RunMetadata& metadata, std::string stem) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw DataError(DataErrorKind::kIo, "cannot create output directory " + out_dir);
  }
  if (stem.empty()) stem = "sweep_" + std::string(to_string(result.axis));
  const std::filesystem::path dir(out_dir);
  ReportFiles files{(dir / (stem + ".csv")).string(), (dir / (stem + ".json")).string(),
                    (dir / (stem + ".svg")).string()};

  write_text_file(files.csv, sweep_csv(result));

  Json j = metadata_object(metadata);
  Json sweep;
  sweep["axis"] = to_string(result.axis);
  sweep["grid"] = result.grid;
  sweep["fixed_parameter"] = result.fixed_parameter;
  sweep["fixed_parameter_name"] = result.axis == SweepAxis::kNoiseSeverity ? "noise_level"
                                  : result.axis == SweepAxis::kNoiseLevel  ? "noise_severity"
                                                                           : "affected_fraction";
  sweep["repeats"] = result.repeats;
  sweep["base_seed"] = result.base_seed;
  sweep["seeds"] = result.seeds;
  sweep["test_windows"] = result.window_count;
  sweep["corrupt_raw"] = result.corrupt_raw;
  Json models = Json::array();
  for (const auto& s : result.series) models.push_back(s.model);
  sweep["models"] = models;
  sweep["metric"] = "window accuracy; std is the population std over repeats";
  j["sweep"] = sweep;
  write_text_file(files.metadata, j.dump(2) + "\n");

  const std::string title = "Accuracy vs " + std::string(to_string(result.axis));
  write_text_file(files.svg, sweep_svg(result, title));
  return files;
}

std::string metrics_csv(const MetricsReport& report, std::span<const std::string> label_names,
                        std::string_view model) {
  std::ostringstream os;
  os << "# averaging=macro; zero-denominator metrics are reported as 0 and flagged\n";
  os << "model,class,precision,recall,f1,support,degenerate\n";
  for (std::size_t k = 0; k < report.per_class.size(); ++k) {
    const auto& m = report.per_class[k];
    os << csv::quote(model) << ','
       << csv::quote(k < label_names.size() ? label_names[k] : std::to_string(k)) << ','
       << csv::format_number(m.precision) << ',' << csv::format_number(m.recall) << ','
       << csv::format_number(m.f1) << ',' << m.support << ',' << (m.degenerate ? 1 : 0) << '\n';
  }
  os << csv::quote(model) << ",macro," << csv::format_number(report.macro_precision) << ','
     << csv::format_number(report.macro_recall) << ',' << csv::format_number(report.macro_f1)
     << ',' << report.window_count << ',' << (report.any_degenerate() ? 1 : 0) << '\n';
  os << csv::quote(model) << ",accuracy," << csv::format_number(report.accuracy) << ",,,"
     << report.window_count << ",0\n";
  return os.str();
}

std::string search_csv(std::span<const SearchCandidate> table) {
  std::ostringstream os;
  os << "rank,hidden_sizes,window_length,val_macro_f1,epochs_run,feasible\n";
  for (const auto& c : table) {
    std::string hidden;
    for (std::size_t i = 0; i < c.hidden_sizes.size(); ++i) {
      if (i > 0) hidden += '-';
      hidden += std::to_string(c.hidden_sizes[i]);
    }
    os << c.rank << ',' << hidden << ',' << c.window_length << ','
       << csv::format_number(c.val_macro_f1) << ',' << c.epochs_run << ','
       << (c.feasible ? 1 : 0) << '\n';
  }
  return os.str();
}

std::string corrupted_training_csv(const CorruptedTrainingReport& report) {
  std::ostringstream os;
  os << "model,noise_level,noise_severity,seed,accuracy,macro_f1\n";
  for (const auto& r : report.rows) {
    os << csv::quote(r.model) << ',' << csv::format_number(report.noise.level) << ','
       << csv::format_number(report.noise.severity) << ',' << report.noise.seed << ','
       << csv::format_number(r.accuracy) << ',' << csv::format_number(r.macro_f1) << '\n';
  }
  return os.str();
}

}  // namespace drivesig
