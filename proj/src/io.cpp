#include "thnn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace thnn {

namespace {

using nlohmann::json;

struct Line {
  std::size_t number = 0;
  std::vector<std::string_view> tokens;
};

// Yields the whitespace tokens of each non-blank, comment-stripped line.
class LineReader {
 public:
  LineReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  bool next(Line& out) {
    while (std::getline(is_, text_)) {
      ++number_;
      if (auto hash = text_.find('#'); hash != std::string::npos) text_.resize(hash);
      out.number = number_;
      out.tokens.clear();
      std::string_view rest = text_;
      while (!rest.empty()) {
        const auto start = rest.find_first_not_of(" \t\r");
        if (start == std::string_view::npos) break;
        rest.remove_prefix(start);
        const auto end = rest.find_first_of(" \t\r");
        out.tokens.push_back(rest.substr(0, end));
        rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
      }
      if (!out.tokens.empty()) return true;
    }
    return false;
  }

  Line expect(const std::string& what) {
    Line line;
    if (!next(line)) throw FormatError(source_, number_ + 1, "unexpected end of file, expected " + what);
    return line;
  }

  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw FormatError(source_, line, what);
  }

  const std::string& source() const { return source_; }

 private:
  std::istream& is_;
  std::string source_;
  std::string text_;
  std::size_t number_ = 0;
};

template <class T>
bool parse_number(std::string_view s, T& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <class T>
T parse_or_fail(const LineReader& r, const Line& line, std::string_view tok, const char* what) {
  T v{};
  if (!parse_number(tok, v)) {
    r.fail(line.number, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json file_entry(const std::filesystem::path& p) {
  const auto abs = std::filesystem::absolute(p).lexically_normal();
  return {{"path", abs.string()}, {"fnv1a64", file_hash(abs)}};
}

}  // namespace

FormatError::FormatError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

// ---- hypergraph files ----

void write_hypergraph(std::ostream& os, const Hypergraph& h) {
  os << "hypergraph v1\n";
  os << "vertices " << h.num_vertices() << '\n';
  for (const auto& e : h.edges()) {
    for (std::size_t i = 0; i < e.size(); ++i) os << (i ? " " : "") << e[i];
    os << '\n';
  }
}

Hypergraph read_hypergraph(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  Line line = r.expect("'hypergraph v1'");
  if (line.tokens.size() != 2 || line.tokens[0] != "hypergraph") {
    r.fail(line.number, "expected 'hypergraph v1'");
  }
  if (line.tokens[1] != "v1") {
    r.fail(line.number, "unsupported version '" + std::string(line.tokens[1]) + "'");
  }
  line = r.expect("'vertices N'");
  if (line.tokens.size() != 2 || line.tokens[0] != "vertices") {
    r.fail(line.number, "expected 'vertices N'");
  }
  const auto n = parse_or_fail<Index>(r, line, line.tokens[1], "vertex count");
  if (n < 0) r.fail(line.number, "negative vertex count");

  std::vector<Hyperedge> edges;
  std::map<Hyperedge, std::size_t> seen;
  while (r.next(line)) {
    Hyperedge e;
    e.reserve(line.tokens.size());
    for (auto tok : line.tokens) {
      const auto v = parse_or_fail<VertexId>(r, line, tok, "vertex id");
      if (v < 0 || v >= n) {
        r.fail(line.number, "vertex id " + std::to_string(v) + " outside [0, " +
                                std::to_string(n) + ")");
      }
      e.push_back(v);
    }
    if (e.size() < 2) r.fail(line.number, "hyperedge needs at least 2 vertices");
    std::sort(e.begin(), e.end());
    if (auto [it, fresh] = seen.emplace(e, line.number); !fresh) {
      r.fail(line.number, "duplicate of the hyperedge on line " + std::to_string(it->second));
    }
    edges.push_back(std::move(e));
  }
  return Hypergraph(n, std::move(edges));
}

void save_hypergraph(const std::filesystem::path& path, const Hypergraph& h) {
  auto os = open_out(path);
  write_hypergraph(os, h);
  finish(os, path);
}

Hypergraph load_hypergraph(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_hypergraph(is, path.string());
}

// ---- feature files ----

void write_features(std::ostream& os, const FeatureDataset& data) {
  data.validate();
  const Index n = data.num_vertices();
  const Index d = data.features.cols();
  os << "features v1 " << n << ' ' << d << ' ' << data.num_classes << '\n';
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) os << (j ? " " : "") << format_double(data.features(i, j));
    os << '\n';
  }
  for (int y : data.labels) os << y << '\n';
  for (Split s : data.splits) os << split_name(s) << '\n';
}

FeatureDataset read_features(std::istream& is, const std::string& source) {
  LineReader r(is, source);
  Line line = r.expect("'features v1 N D C'");
  if (line.tokens.size() != 5 || line.tokens[0] != "features") {
    r.fail(line.number, "expected 'features v1 N D C'");
  }
  if (line.tokens[1] != "v1") {
    r.fail(line.number, "unsupported version '" + std::string(line.tokens[1]) + "'");
  }
  const auto n = parse_or_fail<Index>(r, line, line.tokens[2], "vertex count");
  const auto d = parse_or_fail<Index>(r, line, line.tokens[3], "feature dimension");
  const auto c = parse_or_fail<int>(r, line, line.tokens[4], "class count");
  if (n < 1) r.fail(line.number, "vertex count must be positive");
  if (d < 1) r.fail(line.number, "feature dimension must be positive");
  if (c < 2) r.fail(line.number, "class count must be at least 2");

  FeatureDataset data;
  data.num_classes = c;
  data.features.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    line = r.expect("feature row " + std::to_string(i));
    if (static_cast<Index>(line.tokens.size()) != d) {
      r.fail(line.number, "expected " + std::to_string(d) + " features, got " +
                              std::to_string(line.tokens.size()));
    }
    for (Index j = 0; j < d; ++j) {
      const auto v = parse_or_fail<double>(r, line, line.tokens[j], "feature");
      if (!std::isfinite(v)) r.fail(line.number, "non-finite feature");
      data.features(i, j) = v;
    }
  }
  data.labels.reserve(n);
  for (Index i = 0; i < n; ++i) {
    line = r.expect("label " + std::to_string(i));
    if (line.tokens.size() != 1) r.fail(line.number, "expected one label");
    const auto y = parse_or_fail<int>(r, line, line.tokens[0], "label");
    if (y < 0 || y >= c) {
      r.fail(line.number, "label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
    }
    data.labels.push_back(y);
  }
  data.splits.reserve(n);
  for (Index i = 0; i < n; ++i) {
    line = r.expect("split " + std::to_string(i));
    if (line.tokens.size() != 1) r.fail(line.number, "expected one of train|val|test");
    try {
      data.splits.push_back(parse_split(line.tokens[0]));
    } catch (const std::invalid_argument&) {
      r.fail(line.number, "unknown split '" + std::string(line.tokens[0]) + "'");
    }
  }
  if (r.next(line)) r.fail(line.number, "trailing content");
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(source, 0, e.what());
  }
  return data;
}

void save_features(const std::filesystem::path& path, const FeatureDataset& data) {
  auto os = open_out(path);
  write_features(os, data);
  finish(os, path);
}

FeatureDataset load_features(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_features(is, path.string());
}

// ---- CSV ----

void write_metrics_csv(std::ostream& os, const std::vector<EpochMetrics>& history) {
  os << "epoch,loss,train_acc,val_acc,test_acc\n";
  for (const auto& m : history) {
    os << m.epoch << ',' << format_double(m.loss) << ',' << format_double(m.train_acc) << ','
       << format_double(m.val_acc) << ',' << format_double(m.test_acc) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "axis_value,seed,test_acc\n";
  for (const auto& r : result.rows) {
    os << r.axis_value << ',' << r.seed << ',' << format_double(r.test_acc) << '\n';
  }
}

// ---- config and model files ----

json config_to_json(const TrainConfig& c) {
  return {
      {"model", std::string(to_string(c.model))},
      {"nonuniform_mode", std::string(to_string(c.nonuniform_mode))},
      {"rank", c.rank},
      {"layers", c.layers},
      {"hidden_dim", c.hidden_dim},
      {"learning_rate", c.learning_rate},
      {"epochs", c.epochs},
      {"patience", c.patience},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"epsilon", c.epsilon},
      {"seed", c.seed},
      {"concat_one", c.use_concat_one},
      {"inner_tanh", c.use_inner_tanh},
  };
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "model") c.model = parse_model_kind(v.get<std::string>());
    else if (key == "nonuniform_mode") c.nonuniform_mode = parse_nonuniform_mode(v.get<std::string>());
    else if (key == "rank") c.rank = v.get<Index>();
    else if (key == "layers") c.layers = v.get<Index>();
    else if (key == "hidden_dim") c.hidden_dim = v.get<Index>();
    else if (key == "learning_rate") c.learning_rate = v.get<double>();
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "patience") c.patience = v.get<int>();
    else if (key == "beta1") c.beta1 = v.get<double>();
    else if (key == "beta2") c.beta2 = v.get<double>();
    else if (key == "epsilon") c.epsilon = v.get<double>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "concat_one") c.use_concat_one = v.get<bool>();
    else if (key == "inner_tanh") c.use_inner_tanh = v.get<bool>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

json model_to_json(const Model& model, const TrainConfig& config, Index input_dim,
                   int num_classes) {
  json params = json::array();
  for (const auto& p : model.parameters()) {
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows()},
                      {"cols", p.value.cols()},
                      {"data", std::move(data)}});
  }
  return {{"format", "thnn-model v1"},
          {"artifact_version", kArtifactVersion},
          {"kind", std::string(model.kind())},
          {"config", config_to_json(config)},
          {"input_dim", input_dim},
          {"num_classes", num_classes},
          {"parameters", std::move(params)}};
}

void save_model(const std::filesystem::path& path, const Model& model, const TrainConfig& config,
                Index input_dim, int num_classes) {
  auto os = open_out(path);
  os << model_to_json(model, config, input_dim, num_classes).dump(1) << '\n';
  finish(os, path);
}

std::unique_ptr<Model> load_model(const std::filesystem::path& path, const Hypergraph& h) {
  auto is = open_in(path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "thnn-model v1") {
    throw std::runtime_error(path.string() + ": not a thnn model file");
  }
  const TrainConfig config = config_from_json(j.at("config"));
  auto model = make_model(config, h, j.at("input_dim").get<Index>(), j.at("num_classes").get<int>());
  auto& params = model->parameters();
  const auto& stored = j.at("parameters");
  if (stored.size() != params.size()) {
    throw std::runtime_error(path.string() + ": parameter count does not match the hypergraph");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& s = stored[i];
    auto& p = params[i];
    const auto rows = s.at("rows").get<Index>();
    const auto cols = s.at("cols").get<Index>();
    if (s.at("name").get<std::string>() != p.name || rows != p.value.rows() ||
        cols != p.value.cols()) {
      throw std::runtime_error(path.string() + ": parameter '" + p.name + "' does not fit " +
                               shape_string(p.value));
    }
    const auto data = s.at("data").get<std::vector<double>>();
    if (static_cast<Index>(data.size()) != rows * cols) {
      throw std::runtime_error(path.string() + ": parameter '" + p.name + "' has wrong size");
    }
    std::copy(data.begin(), data.end(), p.value.data());
  }
  return model;
}

// ---- manifests ----

std::string file_hash(const std::filesystem::path& path) {
  auto is = open_in(path);
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return hex64(h);
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json inputs = json::array();
  for (const auto& p : m.inputs) inputs.push_back(file_entry(p));
  json outputs = json::array();
  for (const auto& p : m.outputs) outputs.push_back(file_entry(p));
  const json j = {{"artifact_version", kArtifactVersion},
                  {"command", m.command},
                  {"config", m.config},
                  {"seeds", m.seeds},
                  {"inputs", std::move(inputs)},
                  {"outputs", std::move(outputs)}};
  auto os = open_out(path);
  os << j.dump(1) << '\n';
  finish(os, path);
}

std::vector<std::string> check_manifest(const std::filesystem::path& path) {
  auto is = open_in(path);
  const json j = json::parse(is);
  std::vector<std::string> problems;
  for (const char* group : {"inputs", "outputs"}) {
    for (const auto& entry : j.at(group)) {
      const std::filesystem::path p = entry.at("path").get<std::string>();
      if (!std::filesystem::exists(p)) {
        problems.push_back(p.string() + ": missing");
        continue;
      }
      const auto recorded = entry.at("fnv1a64").get<std::string>();
      const auto actual = file_hash(p);
      if (recorded != actual) {
        problems.push_back(p.string() + ": hash " + actual + " != recorded " + recorded);
      }
    }
  }
  return problems;
}

}  // namespace thnn
