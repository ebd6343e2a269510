#include "pilid/persist.hpp"

#include <zlib.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pilid/error.hpp"

namespace pilid {

namespace {

constexpr std::string_view kMagic = "pilid-model";

class Writer {
 public:
  Writer& key(std::string_view k) {
    if (!line_start_) out_ += '\n';
    out_ += k;
    line_start_ = false;
    return *this;
  }
  Writer& real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %a", v);
    out_ += buf;
    return *this;
  }
  Writer& reals(std::span<const double> v) {
    count(v.size());
    for (double x : v) real(x);
    return *this;
  }
  Writer& count(std::size_t n) {
    out_ += ' ';
    out_ += std::to_string(n);
    return *this;
  }
  Writer& word(std::string_view w) {
    out_ += ' ';
    out_ += w;
    return *this;
  }
  // Length-prefixed so names may contain spaces.
  Writer& text(std::string_view s) {
    out_ += ' ';
    out_ += std::to_string(s.size());
    out_ += ':';
    out_ += s;
    return *this;
  }
  std::string finish() {
    out_ += '\n';
    return std::move(out_);
  }

 private:
  std::string out_;
  bool line_start_ = true;
};

class Reader {
 public:
  explicit Reader(std::string_view body) : s_(body) {}

  void expect(std::string_view k) {
    const std::string got = token();
    if (got != k) throw FormatError("model file: expected '" + std::string(k) + "', found '" + got + "'");
  }
  std::string token() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) throw FormatError("model file: unexpected end of data");
    return std::string(s_.substr(start, pos_ - start));
  }
  std::size_t count() {
    const std::string t = token();
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (errno != 0 || end != t.c_str() + t.size()) throw FormatError("model file: bad integer '" + t + "'");
    return static_cast<std::size_t>(v);
  }
  double real() {
    const std::string t = token();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) throw FormatError("model file: bad real '" + t + "'");
    return v;
  }
  std::vector<double> reals() {
    const std::size_t n = count();
    if (n > s_.size()) throw FormatError("model file: implausible vector length");
    std::vector<double> v(n);
    for (double& x : v) x = real();
    return v;
  }
  void reals_into(std::vector<double>& v, std::size_t expected) {
    v = reals();
    if (v.size() != expected) throw FormatError("model file: vector length does not match its shape");
  }
  std::string text() {
    skip();
    const std::size_t colon = s_.find(':', pos_);
    if (colon == std::string_view::npos) throw FormatError("model file: bad string field");
    std::size_t n = 0;
    try {
      n = std::stoull(std::string(s_.substr(pos_, colon - pos_)));
    } catch (const std::exception&) {
      throw FormatError("model file: bad string length");
    }
    if (colon + 1 + n > s_.size()) throw FormatError("model file: string runs past end");
    std::string out(s_.substr(colon + 1, n));
    pos_ = colon + 1 + n;
    return out;
  }
  bool done() {
    skip();
    return pos_ == s_.size();
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string_view s_;
  std::size_t pos_ = 0;
};

void write_common(Writer& w, Task task, const std::string& fingerprint, const std::vector<FeatureSpec>& specs,
                  const std::vector<double>& means, const CharacteristicPoints& points,
                  const PiecewiseLinearParams& pl) {
  w.key("task").word(task_name(task));
  w.key("fingerprint").text(fingerprint);
  w.key("features").count(specs.size());
  for (const auto& s : specs) {
    w.key("feature").text(s.name).word(s.kind == FeatureKind::kCategorical ? "categorical" : "numerical");
    w.real(s.alpha).real(s.beta).reals(s.levels);
  }
  w.key("means").reals(means);
  for (const auto& f : points.features()) w.key("knots").word(f.constant ? "constant" : "scale").reals(f.points);
  w.key("pl_w").reals(pl.w);
  w.key("pl_b").reals(pl.b);
  w.key("pl_omega").reals(pl.omega);
  w.key("pl_w0").real(pl.w0);
}

void write_mlp(Writer& w, const MlpParams& p) {
  w.key("mlp").word(activation_name(p.activation)).count(p.layers.size());
  for (const auto& layer : p.layers) {
    w.key("layer").count(layer.inputs).count(layer.outputs);
    w.key("weight").reals(layer.weight);
    w.key("bias").reals(layer.bias);
  }
  w.key("head").reals(p.head_weight).real(p.head_bias);
}

struct Common {
  Task task = Task::kRegression;
  std::string fingerprint;
  std::vector<FeatureSpec> specs;
  std::vector<double> means;
  CharacteristicPoints points;
  PiecewiseLinearParams pl;
};

Common read_common(Reader& r) {
  Common c;
  r.expect("task");
  c.task = parse_task(r.token());
  r.expect("fingerprint");
  c.fingerprint = r.text();
  r.expect("features");
  const std::size_t m = r.count();
  if (m == 0) throw FormatError("model file: no features");
  for (std::size_t j = 0; j < m; ++j) {
    r.expect("feature");
    FeatureSpec s;
    s.name = r.text();
    const std::string kind = r.token();
    if (kind == "categorical") {
      s.kind = FeatureKind::kCategorical;
    } else if (kind != "numerical") {
      throw FormatError("model file: unknown feature kind '" + kind + "'");
    }
    s.alpha = r.real();
    s.beta = r.real();
    s.levels = r.reals();
    c.specs.push_back(std::move(s));
  }
  r.expect("means");
  r.reals_into(c.means, m);
  std::vector<FeatureKnots> knots(m);
  for (auto& k : knots) {
    r.expect("knots");
    const std::string kind = r.token();
    if (kind != "constant" && kind != "scale") throw FormatError("model file: unknown knot kind '" + kind + "'");
    k.constant = kind == "constant";
    k.points = r.reals();
  }
  try {
    c.points = CharacteristicPoints(std::move(knots));
  } catch (const Error& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  r.expect("pl_w");
  r.reals_into(c.pl.w, c.points.width());
  r.expect("pl_b");
  r.reals_into(c.pl.b, c.points.width());
  r.expect("pl_omega");
  r.reals_into(c.pl.omega, m);
  r.expect("pl_w0");
  c.pl.w0 = r.real();
  return c;
}

MlpParams read_mlp(Reader& r) {
  MlpParams p;
  r.expect("mlp");
  p.activation = parse_activation(r.token());
  const std::size_t n_layers = r.count();
  for (std::size_t l = 0; l < n_layers; ++l) {
    DenseLayer layer;
    r.expect("layer");
    layer.inputs = r.count();
    layer.outputs = r.count();
    r.expect("weight");
    r.reals_into(layer.weight, layer.inputs * layer.outputs);
    r.expect("bias");
    r.reals_into(layer.bias, layer.outputs);
    if (!p.layers.empty() && p.layers.back().outputs != layer.inputs) {
      throw FormatError("model file: consecutive layer widths disagree");
    }
    p.layers.push_back(std::move(layer));
  }
  r.expect("head");
  if (p.layers.empty()) {
    // no hidden layer: the head reads the inputs directly
    p.head_weight = r.reals();
    if (p.head_weight.empty()) throw FormatError("model file: empty network head");
  } else {
    r.reals_into(p.head_weight, p.layers.back().outputs);
  }
  p.head_bias = r.real();
  return p;
}

std::string body_of(const AnyModel& model) {
  Writer w;
  w.key(kMagic);
  w.key("format_version").count(kFormatVersion);
  if (const auto* m = std::get_if<PilidModel>(&model)) {
    w.key("variant").word("pilid");
    write_common(w, m->task, m->fingerprint, m->specs, m->feature_means, m->points, m->pl);
    w.key("linear_component").count(m->linear_component ? 1 : 0);
    write_mlp(w, m->mlp);
  } else {
    const auto& p = std::get<PilibModel>(model);
    w.key("variant").word("pilib");
    write_common(w, p.task, p.fingerprint, p.specs, p.feature_means, p.points, p.pl);
    w.key("blocks").count(p.blocks.size());
    for (const auto& b : p.blocks) write_mlp(w, b);
    w.key("gates").count(p.gates.log_alpha.rows()).count(p.gates.log_alpha.cols());
    w.real(p.gates.temperature).count(p.gates.max_order).real(p.gates.lambda0).count(p.gates.frozen ? 1 : 0);
    w.key("log_alpha").reals(p.gates.log_alpha.storage());
  }
  return w.finish();
}

std::uint32_t crc_of(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

}  // namespace

std::string serialize(const AnyModel& model) {
  std::visit([](const auto& m) { m.check_consistent(); }, model);
  std::string body = body_of(model);
  char buf[32];
  std::snprintf(buf, sizeof buf, "checksum %08x\n", crc_of(body));
  return body + buf;
}

AnyModel deserialize(const std::string& text) {
  {
    // Header first, so a hand-edited version reads as a version error.
    Reader head(text);
    if (head.token() != kMagic) throw FormatError("not a model file (missing 'pilid-model' header)");
    head.expect("format_version");
    const std::string v = head.token();
    if (v != std::to_string(kFormatVersion)) {
      throw FormatError("unsupported model format_version " + v + " (this build reads version " +
                        std::to_string(kFormatVersion) + ")");
    }
  }
  const std::size_t at = text.rfind("checksum ");
  if (at == std::string::npos || (at > 0 && text[at - 1] != '\n')) {
    throw FormatError("model file checksum missing (file truncated?)");
  }
  const std::string body = text.substr(0, at);
  unsigned long stored = 0;
  char extra = 0;
  if (std::sscanf(text.c_str() + at, "checksum %8lx%c", &stored, &extra) < 1 ||
      static_cast<std::uint32_t>(stored) != crc_of(body)) {
    throw FormatError("model file checksum mismatch (file corrupted or truncated)");
  }

  Reader r(body);
  r.expect(kMagic);
  r.expect("format_version");
  r.count();
  r.expect("variant");
  const std::string variant = r.token();
  AnyModel out;
  if (variant == "pilid") {
    Common c = read_common(r);
    PilidModel m;
    m.task = c.task;
    m.fingerprint = std::move(c.fingerprint);
    m.specs = std::move(c.specs);
    m.feature_means = std::move(c.means);
    m.points = std::move(c.points);
    m.pl = std::move(c.pl);
    r.expect("linear_component");
    m.linear_component = r.count() != 0;
    m.mlp = read_mlp(r);
    out = std::move(m);
  } else if (variant == "pilib") {
    Common c = read_common(r);
    PilibModel m;
    m.task = c.task;
    m.fingerprint = std::move(c.fingerprint);
    m.specs = std::move(c.specs);
    m.feature_means = std::move(c.means);
    m.points = std::move(c.points);
    m.pl = std::move(c.pl);
    r.expect("blocks");
    const std::size_t n_blocks = r.count();
    for (std::size_t b = 0; b < n_blocks; ++b) m.blocks.push_back(read_mlp(r));
    r.expect("gates");
    const std::size_t rows = r.count();
    const std::size_t cols = r.count();
    m.gates.log_alpha = Matrix(rows, cols);
    m.gates.temperature = r.real();
    m.gates.max_order = r.count();
    m.gates.lambda0 = r.real();
    m.gates.frozen = r.count() != 0;
    r.expect("log_alpha");
    r.reals_into(m.gates.log_alpha.storage(), rows * cols);
    out = std::move(m);
  } else {
    throw FormatError("model file: unknown variant '" + variant + "'");
  }
  if (!r.done()) throw FormatError("model file: trailing data after model");
  try {
    std::visit([](const auto& m) { m.check_consistent(); }, out);
  } catch (const DimensionError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  return out;
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  const std::string text = serialize(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw Error("failed writing model file '" + path.string() + "'");
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

const std::vector<FeatureSpec>& model_specs(const AnyModel& model) {
  return std::visit([](const auto& m) -> const std::vector<FeatureSpec>& { return m.specs; }, model);
}

const PiecewiseLinearParams& model_linear(const AnyModel& model) {
  return std::visit([](const auto& m) -> const PiecewiseLinearParams& { return m.pl; }, model);
}

const CharacteristicPoints& model_points(const AnyModel& model) {
  return std::visit([](const auto& m) -> const CharacteristicPoints& { return m.points; }, model);
}

Task model_task(const AnyModel& model) {
  return std::visit([](const auto& m) { return m.task; }, model);
}

std::vector<double> predict(const AnyModel& model, const Matrix& rows) {
  if (rows.cols() != model_points(model).num_features()) throw DimensionError("row width does not match the model");
  return std::visit([&](const auto& m) { return predict(m, rows); }, model);
}

}  // namespace pilid
