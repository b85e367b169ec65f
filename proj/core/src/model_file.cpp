#include "drivesig/model_file.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "drivesig/csv.hpp"
#include "drivesig/errors.hpp"
#include "drivesig/eval.hpp"

namespace drivesig {

namespace {

constexpr std::string_view kMagic = "DRIVESIG-MODEL";

std::string encode(std::string_view s) {
  if (s.empty()) return "%";
  std::string out;
  for (unsigned char ch : s) {
    if (ch <= 0x20 || ch == '%' || ch >= 0x7f) {
      char buf[4];
      std::snprintf(buf, sizeof(buf), "%%%02X", ch);
      out += buf;
    } else {
      out.push_back(static_cast<char>(ch));
    }
  }
  return out;
}

std::string decode(std::string_view s) {
  if (s == "%") return {};
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%') {
      if (i + 2 >= s.size()) {
        throw ModelCorruptError("model file: bad escape in '" + std::string(s) + "'");
      }
      const std::string hex(s.substr(i + 1, 2));
      out.push_back(static_cast<char>(std::stoi(hex, nullptr, 16)));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

class Writer {
 public:
  Writer() { os_ << kMagic << ' ' << kModelFormatVersion << '\n'; }
  void key(std::string_view k, std::string_view v) {
    os_ << k << ' ' << v << '\n';
  }
  void key(std::string_view k, std::size_t v) { key(k, std::to_string(v)); }
  void num(std::string_view k, double v) { key(k, csv::format_number(v)); }
  void array(std::string_view name, const Matrix& m) {
    os_ << "array " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
      for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c > 0) os_ << ' ';
        os_ << csv::format_number(m(r, c));
      }
      os_ << '\n';
    }
  }
  std::string finish() {
    std::string body = os_.str();
    char buf[40];
    std::snprintf(buf, sizeof(buf), "end %016llx\n",
                  static_cast<unsigned long long>(fnv1a64(body)));
    return body + buf;
  }

 private:
  std::ostringstream os_;
};

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

void write_config(Writer& w, std::string_view prefix, const ModelConfig& c,
                  std::size_t input_size) {
  const std::string p(prefix);
  w.key(p + "hidden_sizes", join_sizes(c.hidden_sizes));
  w.key(p + "window_length", c.window_length);
  w.key(p + "num_classes", c.num_classes);
  w.num(p + "learning_rate", c.learning_rate);
  w.key(p + "batch_size", c.batch_size);
  w.key(p + "max_epochs", c.max_epochs);
  w.key(p + "early_stop_patience", c.early_stop_patience);
  w.num(p + "clip_norm", c.clip_norm);
  w.key(p + "input_size", input_size);
}

void write_tree(Writer& w, const std::string& prefix, const DecisionTree& t) {
  const auto& nodes = t.nodes();
  Matrix feature(nodes.size(), 1), threshold(nodes.size(), 1), left(nodes.size(), 1),
      right(nodes.size(), 1), counts(nodes.size(), t.num_classes());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    feature[i] = nodes[i].feature;
    threshold[i] = nodes[i].threshold;
    left[i] = static_cast<double>(nodes[i].left);
    right[i] = static_cast<double>(nodes[i].right);
    for (std::size_t k = 0; k < t.num_classes(); ++k) counts(i, k) = nodes[i].class_counts[k];
  }
  w.key(prefix + "num_classes", t.num_classes());
  w.key(prefix + "feature_count", t.feature_count());
  w.array(prefix + "feature", feature);
  w.array(prefix + "threshold", threshold);
  w.array(prefix + "left", left);
  w.array(prefix + "right", right);
  w.array(prefix + "counts", counts);
}

// ---- reading ---------------------------------------------------------------

struct Document {
  std::map<std::string, std::string> keys;
  std::map<std::string, Matrix> arrays;

  const std::string& key(const std::string& k) const {
    auto it = keys.find(k);
    if (it == keys.end()) throw ModelCorruptError("model file: missing key '" + k + "'");
    return it->second;
  }
  std::size_t size_key(const std::string& k) const {
    try {
      return static_cast<std::size_t>(std::stoull(key(k)));
    } catch (const std::logic_error&) {
      throw ModelCorruptError("model file: bad integer for '" + k + "'");
    }
  }
  double num_key(const std::string& k) const {
    auto v = csv::parse_number(key(k));
    if (!v) throw ModelCorruptError("model file: bad number for '" + k + "'");
    return *v;
  }
  Matrix take(const std::string& name) {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw ModelCorruptError("model file: missing array '" + name + "'");
    return std::move(it->second);
  }
  Matrix take(const std::string& name, std::size_t rows, std::size_t cols) {
    Matrix m = take(name);
    if (m.rows() != rows || m.cols() != cols) {
      throw ModelCorruptError("model file: array '" + name + "' is " + m.shape_string() +
                              ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    return m;
  }
};

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Document parse_document(std::string_view text) {
  // Header line first, so a newer version is reported as such even though
  // its checksum would also differ.
  const auto first_nl = text.find('\n');
  if (first_nl == std::string_view::npos) throw ModelCorruptError("model file: truncated header");
  const auto header = split_ws(text.substr(0, first_nl));
  if (header.size() != 2 || header[0] != kMagic) {
    throw ModelCorruptError("model file: not a drivesig model (bad magic)");
  }
  if (header[1] != std::to_string(kModelFormatVersion)) {
    throw ModelVersionError("model file: format version " + header[1] +
                            " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
  }

  const auto end_pos = text.rfind("\nend ");
  if (end_pos == std::string_view::npos) {
    throw ModelCorruptError("model file: truncated (no end marker)");
  }
  const std::string_view body = text.substr(0, end_pos + 1);
  std::string_view trailer = text.substr(end_pos + 5);
  while (!trailer.empty() && (trailer.back() == '\n' || trailer.back() == '\r')) {
    trailer.remove_suffix(1);
  }
  char expected[20];
  std::snprintf(expected, sizeof(expected), "%016llx",
                static_cast<unsigned long long>(fnv1a64(body)));
  if (trailer != expected) throw ModelCorruptError("model file: checksum mismatch");

  Document doc;
  std::size_t pos = first_nl + 1;
  const auto next_line = [&]() -> std::string_view {
    if (pos >= body.size()) throw ModelCorruptError("model file: unexpected end of data");
    const auto nl = body.find('\n', pos);
    std::string_view line = body.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  while (pos < body.size()) {
    const auto tokens = split_ws(next_line());
    if (tokens.empty()) continue;
    if (tokens[0] == "array") {
      if (tokens.size() != 4) throw ModelCorruptError("model file: bad array header");
      std::size_t rows = 0, cols = 0;
      try {
        rows = std::stoull(tokens[2]);
        cols = std::stoull(tokens[3]);
      } catch (const std::logic_error&) {
        throw ModelCorruptError("model file: bad array shape for '" + tokens[1] + "'");
      }
      Matrix m(rows, cols);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto vals = split_ws(next_line());
        if (vals.size() != cols) {
          throw ModelCorruptError("model file: array '" + tokens[1] + "' row " +
                                  std::to_string(r) + " has wrong width");
        }
        for (std::size_t c = 0; c < cols; ++c) {
          auto v = csv::parse_number(vals[c]);
          if (!v) throw ModelCorruptError("model file: bad number in '" + tokens[1] + "'");
          m(r, c) = *v;
        }
      }
      doc.arrays[tokens[1]] = std::move(m);
    } else if (tokens.size() == 2) {
      doc.keys[tokens[0]] = tokens[1];
    } else {
      throw ModelCorruptError("model file: malformed line");
    }
  }
  return doc;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoull(item));
    } catch (const std::logic_error&) {
      throw ModelCorruptError("model file: bad size list '" + s + "'");
    }
  }
  return out;
}

ModelConfig read_config(const Document& d, const std::string& p, std::size_t* input_size) {
  ModelConfig c;
  c.hidden_sizes = parse_sizes(d.key(p + "hidden_sizes"));
  c.window_length = d.size_key(p + "window_length");
  c.num_classes = d.size_key(p + "num_classes");
  c.learning_rate = d.num_key(p + "learning_rate");
  c.batch_size = d.size_key(p + "batch_size");
  c.max_epochs = d.size_key(p + "max_epochs");
  c.early_stop_patience = d.size_key(p + "early_stop_patience");
  c.clip_norm = d.num_key(p + "clip_norm");
  *input_size = d.size_key(p + "input_size");
  try {
    c.validate();
  } catch (const ShapeError& e) {
    throw ModelCorruptError(std::string("model file: ") + e.what());
  }
  return c;
}

std::size_t as_index(double v, std::size_t limit, const char* what) {
  if (!(v >= 0.0) || v >= static_cast<double>(limit) || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ModelCorruptError(std::string("model file: bad ") + what);
  }
  return static_cast<std::size_t>(v);
}

DecisionTree read_tree(Document& d, const std::string& prefix) {
  const std::size_t classes = d.size_key(prefix + "num_classes");
  const std::size_t features = d.size_key(prefix + "feature_count");
  const Matrix feature = d.take(prefix + "feature");
  const std::size_t n = feature.rows();
  if (n == 0) throw ModelCorruptError("model file: empty tree");
  const Matrix threshold = d.take(prefix + "threshold", n, 1);
  const Matrix left = d.take(prefix + "left", n, 1);
  const Matrix right = d.take(prefix + "right", n, 1);
  const Matrix counts = d.take(prefix + "counts", n, classes);
  std::vector<TreeNode> nodes(n);
  for (std::size_t i = 0; i < n; ++i) {
    TreeNode& node = nodes[i];
    node.feature = static_cast<int>(feature[i]);
    if (feature[i] >= 0) {
      as_index(feature[i], features, "tree feature index");
      node.left = as_index(left[i], n, "tree child index");
      node.right = as_index(right[i], n, "tree child index");
      if (node.left <= i || node.right <= i) throw ModelCorruptError("model file: tree cycle");
    } else {
      node.feature = -1;
    }
    node.threshold = threshold[i];
    node.class_counts.assign(counts.row(i).begin(), counts.row(i).end());
  }
  return DecisionTree(std::move(nodes), classes, features);
}

}  // namespace

std::string serialize_model(const TrainedModel& model) {
  Writer w;
  w.key("kind", to_string(model.kind));
  w.key("labels", model.label_names.size());
  for (std::size_t i = 0; i < model.label_names.size(); ++i) {
    w.key("label." + std::to_string(i), encode(model.label_names[i]));
  }
  w.key("features", model.feature_names.size());
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
    w.key("feature." + std::to_string(i), encode(model.feature_names[i]));
  }
  const PipelineSettings& p = model.pipeline;
  w.key("pipeline.label_column", encode(p.label_column));
  w.key("pipeline.trip_column", p.trip_column ? encode(*p.trip_column) : "-");
  w.key("pipeline.window_length", p.window.length);
  w.num("pipeline.window_overlap", p.window.overlap);
  w.num("pipeline.train_fraction", p.split.train_fraction);
  w.num("pipeline.val_fraction", p.split.val_fraction);
  w.num("pipeline.test_fraction", p.split.test_fraction);
  w.key("pipeline.scale_globally", p.scale_globally ? "1" : "0");
  w.key("pipeline.chronological_split", p.chronological_split ? "1" : "0");
  w.key("pipeline.seed", std::to_string(p.seed));
  w.array("scaler.min", Matrix::column(model.scaler.min));
  w.array("scaler.max", Matrix::column(model.scaler.max));

  switch (model.kind) {
    case ModelKind::kLstm: {
      const auto& m = std::get<LstmModel>(model.model);
      write_config(w, "config.", m.config, m.input_size);
      const auto params = m.parameters();
      const auto names = m.parameter_names();
      for (std::size_t i = 0; i < params.size(); ++i) w.array(names[i], *params[i]);
      break;
    }
    case ModelKind::kFcnn: {
      const auto& m = std::get<FcnnModel>(model.model);
      write_config(w, "config.", m.config, m.input_size);
      for (std::size_t i = 0; i < m.layers.size(); ++i) {
        w.array("dense" + std::to_string(i) + ".weights", m.layers[i].weights);
        w.array("dense" + std::to_string(i) + ".bias", m.layers[i].bias);
      }
      break;
    }
    case ModelKind::kTree:
      write_tree(w, "tree.", std::get<DecisionTree>(model.model));
      break;
    case ModelKind::kForest: {
      const auto& f = std::get<RandomForest>(model.model);
      w.key("forest.num_classes", f.num_classes);
      w.key("forest.trees", f.trees.size());
      for (std::size_t i = 0; i < f.trees.size(); ++i) {
        write_tree(w, "tree" + std::to_string(i) + ".", f.trees[i]);
      }
      break;
    }
  }
  // The checksum covers the header line too.
  return w.finish();
}

TrainedModel parse_model(std::string_view text) {
  Document d = parse_document(text);
  TrainedModel m;
  try {
    m.kind = parse_model_kind(d.key("kind"));
  } catch (const DataError& e) {
    throw ModelCorruptError(std::string("model file: ") + e.what());
  }
  const std::size_t labels = d.size_key("labels");
  for (std::size_t i = 0; i < labels; ++i) {
    m.label_names.push_back(decode(d.key("label." + std::to_string(i))));
  }
  const std::size_t features = d.size_key("features");
  for (std::size_t i = 0; i < features; ++i) {
    m.feature_names.push_back(decode(d.key("feature." + std::to_string(i))));
  }
  PipelineSettings& p = m.pipeline;
  p.label_column = decode(d.key("pipeline.label_column"));
  if (d.key("pipeline.trip_column") != "-") p.trip_column = decode(d.key("pipeline.trip_column"));
  p.window.length = d.size_key("pipeline.window_length");
  p.window.overlap = d.num_key("pipeline.window_overlap");
  p.split.train_fraction = d.num_key("pipeline.train_fraction");
  p.split.val_fraction = d.num_key("pipeline.val_fraction");
  p.split.test_fraction = d.num_key("pipeline.test_fraction");
  p.scale_globally = d.key("pipeline.scale_globally") == "1";
  p.chronological_split = d.key("pipeline.chronological_split") == "1";
  try {
    p.seed = std::stoull(d.key("pipeline.seed"));
  } catch (const std::logic_error&) {
    throw ModelCorruptError("model file: bad pipeline seed");
  }
  const Matrix smin = d.take("scaler.min", features, 1);
  const Matrix smax = d.take("scaler.max", features, 1);
  m.scaler.min.assign(smin.values().begin(), smin.values().end());
  m.scaler.max.assign(smax.values().begin(), smax.values().end());

  switch (m.kind) {
    case ModelKind::kLstm: {
      std::size_t input = 0;
      LstmModel lstm;
      lstm.config = read_config(d, "config.", &input);
      lstm.input_size = input;
      std::size_t in = input;
      for (std::size_t h : lstm.config.hidden_sizes) {
        lstm.layers.push_back(LstmLayerParams::zeros(h, in));
        in = h;
      }
      lstm.head.weights = Matrix(lstm.config.num_classes, in);
      lstm.head.bias = Matrix(lstm.config.num_classes, 1);
      const auto params = lstm.parameters();
      const auto names = lstm.parameter_names();
      for (std::size_t i = 0; i < params.size(); ++i) {
        *params[i] = d.take(names[i], params[i]->rows(), params[i]->cols());
      }
      m.model = std::move(lstm);
      break;
    }
    case ModelKind::kFcnn: {
      std::size_t input = 0;
      FcnnModel net;
      net.config = read_config(d, "config.", &input);
      net.input_size = input;
      std::size_t in = input;
      std::vector<std::size_t> widths = net.config.hidden_sizes;
      widths.push_back(net.config.num_classes);
      for (std::size_t i = 0; i < widths.size(); ++i) {
        DenseLayer layer;
        layer.weights = d.take("dense" + std::to_string(i) + ".weights", widths[i], in);
        layer.bias = d.take("dense" + std::to_string(i) + ".bias", widths[i], 1);
        net.layers.push_back(std::move(layer));
        in = widths[i];
      }
      m.model = std::move(net);
      break;
    }
    case ModelKind::kTree:
      m.model = read_tree(d, "tree.");
      break;
    case ModelKind::kForest: {
      RandomForest f;
      f.num_classes = d.size_key("forest.num_classes");
      const std::size_t n = d.size_key("forest.trees");
      for (std::size_t i = 0; i < n; ++i) f.trees.push_back(read_tree(d, "tree" + std::to_string(i) + "."));
      m.model = std::move(f);
      break;
    }
  }
  return m;
}

void save_model(const TrainedModel& model, const std::string& path) {
  write_text_file(path, serialize_model(model));
}

TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::kMissingFile, "cannot open model file: " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model(text);
}

}  // namespace drivesig
