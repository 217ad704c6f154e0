// Model file layout (one item per line, whitespace-separated):
//
//   mtrank-model <version>
//   <key> <value>            configuration, one per line, fixed order
//   skip_names <n>           followed by n lines
//   vocab <n>                followed by n lines
//   norm <name> <n>          followed by a line of n minima and a line of n maxima
//   mean <name> <n>|none     followed by a line of n values
//   params <n>
//   param <name> <rows> <cols> <decay> <trainable>, then <rows> lines of values
//   end
//
// Reals are written with 17 significant digits so they round-trip exactly.

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "mtrank/corpusio.hpp"
#include "mtrank/error.hpp"
#include "mtrank/text.hpp"

namespace mtrank {

namespace {

constexpr const char* kMagic = "mtrank-model";

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* encoder_name(EncoderConfig::Kind k) {
  switch (k) {
    case EncoderConfig::Kind::none: return "none";
    case EncoderConfig::Kind::bow: return "bow";
    case EncoderConfig::Kind::cnn: return "cnn";
    case EncoderConfig::Kind::lstm: return "lstm";
  }
  return "none";
}

const char* finetune_name(FineTuneMode::Kind k) {
  switch (k) {
    case FineTuneMode::Kind::frozen: return "frozen";
    case FineTuneMode::Kind::moderate: return "moderate";
    case FineTuneMode::Kind::full: return "full";
  }
  return "frozen";
}

const char* oov_name(OovPolicy p) {
  switch (p) {
    case OovPolicy::zero: return "zero";
    case OovPolicy::mean: return "mean";
    case OovPolicy::error: return "error";
  }
  return "zero";
}

class Writer {
 public:
  void kv(const std::string& key, const std::string& value) { out_ << key << ' ' << value << '\n'; }
  void kv(const std::string& key, std::size_t value) { kv(key, std::to_string(value)); }
  void line(const std::string& s) { out_ << s << '\n'; }

  template <typename It>
  void reals(It first, It last) {
    bool sep = false;
    for (; first != last; ++first) {
      if (sep) out_ << ' ';
      out_ << real(*first);
      sep = true;
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

class Reader {
 public:
  Reader(const std::string& text, std::string source) : in_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ":" + std::to_string(lineno_) + ": " + what);
  }

  std::string next_line() {
    std::string line;
    if (!std::getline(in_, line)) {
      ++lineno_;
      fail("unexpected end of file (truncated model?)");
    }
    ++lineno_;
    return trim_cr(line);
  }

  std::vector<std::string> fields() { return split_ws(next_line()); }

  std::string value(const std::string& key) {
    const auto f = fields();
    if (f.size() != 2 || f[0] != key) fail("expected '" + key + " <value>'");
    return f[1];
  }

  std::size_t count(const std::string& text) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(text, &pos);
    } catch (const std::exception&) {
      fail("expected a non-negative integer, got '" + text + "'");
    }
    if (pos != text.size() || text[0] == '-') fail("expected a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(v);
  }

  std::size_t size_value(const std::string& key) { return count(value(key)); }

  double real_value(const std::string& key) { return real(value(key)); }

  double real(const std::string& text) {
    try {
      return parse_real(text);
    } catch (const std::invalid_argument&) {
      fail("not a finite number: '" + text + "'");
    }
  }

  bool flag_value(const std::string& key) {
    const std::string v = value(key);
    if (v != "0" && v != "1") fail("expected 0 or 1 for '" + key + "'");
    return v == "1";
  }

  std::vector<double> reals(std::size_t n) {
    const auto f = fields();
    if (f.size() != n) fail("expected " + std::to_string(n) + " values, got " + std::to_string(f.size()));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = real(f[i]);
    return v;
  }

  std::vector<std::string> lines(const std::string& key) {
    const std::size_t n = size_value(key);
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next_line());
    return out;
  }

  bool at_end() {
    std::string rest;
    while (std::getline(in_, rest)) {
      ++lineno_;
      if (!trim_cr(rest).empty()) return false;
    }
    return true;
  }

 private:
  std::istringstream in_;
  std::string source_;
  std::size_t lineno_ = 0;
};

void write_norm(Writer& w, const std::string& name, const MinMaxParams& p) {
  w.line("norm " + name + " " + std::to_string(p.size()));
  w.reals(p.min.begin(), p.min.end());
  w.reals(p.max.begin(), p.max.end());
}

MinMaxParams read_norm(Reader& r, const std::string& name) {
  const auto f = r.fields();
  if (f.size() != 3 || f[0] != "norm" || f[1] != name) r.fail("expected 'norm " + name + " <n>'");
  const std::size_t n = r.count(f[2]);
  MinMaxParams p;
  p.min = r.reals(n);
  p.max = r.reals(n);
  return p;
}

void write_mean(Writer& w, const std::string& name, const std::optional<Vector<double>>& v) {
  if (!v) {
    w.line("mean " + name + " none");
    return;
  }
  w.line("mean " + name + " " + std::to_string(v->size()));
  w.reals(v->data(), v->data() + v->size());
}

std::optional<Vector<double>> read_mean(Reader& r, const std::string& name) {
  const auto f = r.fields();
  if (f.size() != 3 || f[0] != "mean" || f[1] != name) r.fail("expected 'mean " + name + " <n>|none'");
  if (f[2] == "none") return std::nullopt;
  const std::size_t n = r.count(f[2]);
  const auto vals = r.reals(n);
  Vector<double> v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

}  // namespace

std::string serialize_model(const ModelArtifact& art) {
  const ModelConfig& cfg = art.model.config();
  const OptimizerConfig& opt = art.optimizer;
  Writer w;
  w.line(std::string(kMagic) + " " + std::to_string(kModelFormatVersion));
  w.kv("static_dim", cfg.static_dim);
  w.kv("skip_dim", cfg.skip_dim);
  w.kv("hidden", cfg.hidden);
  w.kv("skip_only", cfg.skip_only ? "1" : "0");
  w.kv("encoder", encoder_name(cfg.encoder.kind));
  w.kv("filters", cfg.encoder.filters);
  w.kv("window", cfg.encoder.window);
  w.kv("pool", cfg.encoder.pool);
  w.kv("lstm_hidden", cfg.encoder.lstm_hidden);
  w.kv("bidirectional", cfg.encoder.bidirectional ? "1" : "0");
  w.kv("dropout", real(cfg.encoder.dropout));
  w.kv("finetune", finetune_name(cfg.finetune.kind));
  w.kv("finetune_mu", real(cfg.finetune.mu));
  w.kv("embedding_dim", cfg.embedding_dim);
  w.kv("vocab_size", cfg.vocab_size);
  w.kv("learning_rate", real(opt.learning_rate));
  w.kv("l2", real(opt.l2));
  w.kv("epsilon", real(opt.epsilon));
  w.kv("batch_size", opt.batch_size);
  w.kv("max_epochs", opt.max_epochs);
  w.kv("seed", std::to_string(opt.seed));
  w.kv("patience", opt.patience);
  w.kv("dev_tau_policy", to_string(art.dev_policy));
  w.kv("selected_epoch", art.selected_epoch);
  w.kv("best_dev_tau", real(art.best_dev_tau));
  w.kv("synvec_dim", art.layout.synvec_dim);
  w.kv("bow_dim", art.layout.bow_dim);
  w.kv("skip_names", art.layout.skip_names.size());
  for (const auto& n : art.layout.skip_names) w.line(n);
  w.kv("oov", oov_name(art.oov));
  w.kv("vocab", art.vocab.size());
  for (const auto& word : art.vocab) w.line(word);
  write_norm(w, "translation", art.translation_norm);
  write_norm(w, "reference", art.reference_norm);
  write_norm(w, "skip", art.skip_norm);
  write_mean(w, "translation", art.mean_translation);
  write_mean(w, "skip", art.mean_skip);
  const auto& store = art.model.params();
  w.kv("steps", store.step_count());
  w.kv("params", store.size());
  for (const auto& [name, p] : store) {
    w.line("param " + name + " " + std::to_string(p.value.rows()) + " " + std::to_string(p.value.cols()) + " " +
           (p.decay ? "1" : "0") + " " + (p.trainable ? "1" : "0"));
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      const double* row = p.value.data() + i * p.value.cols();
      w.reals(row, row + p.value.cols());
    }
  }
  w.line("end");
  return w.str();
}

ModelArtifact parse_model(const std::string& text, const std::string& source) {
  Reader r(text, source);
  {
    const auto f = r.fields();
    if (f.size() != 2 || f[0] != kMagic) r.fail("not a model file");
    if (f[1] != std::to_string(kModelFormatVersion)) {
      r.fail("unsupported model format version '" + f[1] + "' (this build reads version " +
             std::to_string(kModelFormatVersion) + ")");
    }
  }
  ModelConfig cfg;
  OptimizerConfig opt;
  ModelArtifact art;
  cfg.static_dim = r.size_value("static_dim");
  cfg.skip_dim = r.size_value("skip_dim");
  cfg.hidden = r.size_value("hidden");
  cfg.skip_only = r.flag_value("skip_only");
  {
    const std::string e = r.value("encoder");
    if (e == "none") cfg.encoder.kind = EncoderConfig::Kind::none;
    else if (e == "bow") cfg.encoder.kind = EncoderConfig::Kind::bow;
    else if (e == "cnn") cfg.encoder.kind = EncoderConfig::Kind::cnn;
    else if (e == "lstm") cfg.encoder.kind = EncoderConfig::Kind::lstm;
    else r.fail("unknown encoder '" + e + "'");
  }
  cfg.encoder.filters = r.size_value("filters");
  cfg.encoder.window = r.size_value("window");
  cfg.encoder.pool = r.size_value("pool");
  cfg.encoder.lstm_hidden = r.size_value("lstm_hidden");
  cfg.encoder.bidirectional = r.flag_value("bidirectional");
  cfg.encoder.dropout = r.real_value("dropout");
  {
    const std::string f = r.value("finetune");
    if (f == "frozen") cfg.finetune.kind = FineTuneMode::Kind::frozen;
    else if (f == "moderate") cfg.finetune.kind = FineTuneMode::Kind::moderate;
    else if (f == "full") cfg.finetune.kind = FineTuneMode::Kind::full;
    else r.fail("unknown fine-tuning mode '" + f + "'");
  }
  cfg.finetune.mu = r.real_value("finetune_mu");
  cfg.embedding_dim = r.size_value("embedding_dim");
  cfg.vocab_size = r.size_value("vocab_size");
  opt.learning_rate = r.real_value("learning_rate");
  opt.l2 = r.real_value("l2");
  opt.epsilon = r.real_value("epsilon");
  opt.batch_size = r.size_value("batch_size");
  opt.max_epochs = r.size_value("max_epochs");
  opt.seed = r.size_value("seed");
  opt.patience = r.size_value("patience");
  try {
    art.dev_policy = parse_tie_policy(r.value("dev_tau_policy"));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
  art.selected_epoch = r.size_value("selected_epoch");
  art.best_dev_tau = r.real_value("best_dev_tau");
  art.layout.synvec_dim = r.size_value("synvec_dim");
  art.layout.bow_dim = r.size_value("bow_dim");
  art.layout.skip_names = r.lines("skip_names");
  {
    const std::string o = r.value("oov");
    if (o == "zero") art.oov = OovPolicy::zero;
    else if (o == "mean") art.oov = OovPolicy::mean;
    else if (o == "error") art.oov = OovPolicy::error;
    else r.fail("unknown OOV policy '" + o + "'");
  }
  art.vocab = r.lines("vocab");
  art.translation_norm = read_norm(r, "translation");
  art.reference_norm = read_norm(r, "reference");
  art.skip_norm = read_norm(r, "skip");
  art.mean_translation = read_mean(r, "translation");
  art.mean_skip = read_mean(r, "skip");
  const std::size_t steps = r.size_value("steps");

  ParamStore<double> store;
  const std::size_t n = r.size_value("params");
  for (std::size_t k = 0; k < n; ++k) {
    const auto f = r.fields();
    if (f.size() != 6 || f[0] != "param") r.fail("expected 'param <name> <rows> <cols> <decay> <trainable>'");
    const std::size_t rows = r.count(f[2]);
    const std::size_t cols = r.count(f[3]);
    if ((f[4] != "0" && f[4] != "1") || (f[5] != "0" && f[5] != "1")) r.fail("bad parameter flags");
    Matrix<double> m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
      const auto vals = r.reals(cols);
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[j];
    }
    if (store.contains(f[1])) r.fail("duplicate parameter '" + f[1] + "'");
    store.add(f[1], std::move(m), f[4] == "1", f[5] == "1");
  }
  store.set_step_count(steps);
  if (r.next_line() != "end") r.fail("expected 'end'");
  if (!r.at_end()) r.fail("trailing content after 'end'");

  if (cfg.uses_tokens() && art.vocab.size() != cfg.vocab_size) {
    throw DataError(source + ": vocabulary has " + std::to_string(art.vocab.size()) + " words, configuration says " +
                    std::to_string(cfg.vocab_size));
  }
  if (art.layout.skip_names.size() != cfg.skip_dim && !art.layout.skip_names.empty()) {
    throw DataError(source + ": skip feature names do not match skip_dim");
  }
  try {
    art.model = PairModel<double>::from_params(cfg, std::move(store));
    opt.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(source + ": inconsistent model: " + e.what());
  }
  art.optimizer = opt;
  return art;
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  write_file_atomic(path, serialize_model(artifact));
}

ModelArtifact load_model(const std::string& path) { return parse_model(read_file(path), path); }

}  // namespace mtrank
