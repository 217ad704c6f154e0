#ifndef MTRANK_PAIRNET_HPP
#define MTRANK_PAIRNET_HPP

// Pairwise judge: given two hypotheses t1, t2 and a reference r, estimate the
// probability that t1 is the better translation.
//
//   h_1r = tanh(W_1r [x_t1, x_r]  + b_1r)
//   h_2r = tanh(W_2r [x_t2, x_r]  + b_2r)
//   h_12 = tanh(W_12 [x_t1, x_t2] + b_12)
//   p    = sigmoid(w_v . [h_12, h_1r, h_2r, psi_1r, psi_2r] + b_v)
//
// Sentence vectors are the concatenation of a pre-computed (normalized) part and,
// optionally, the output of an on-the-fly encoder over the sentence's tokens.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtrank/correlations.hpp"
#include "mtrank/encoders.hpp"
#include "mtrank/features.hpp"
#include "mtrank/numcore.hpp"

namespace mtrank {

template <typename Scalar>
struct BasicPairwiseInput {
  Vector<Scalar> x_t1, x_t2, x_r;  // pre-computed sentence vectors
  Vector<Scalar> psi_1r, psi_2r;   // skip-arc features
  std::optional<int> label;        // 1 if t1 is better than t2
  TokenIds tok_t1, tok_t2, tok_r;  // inputs of the on-the-fly encoder, if any
};
using PairwiseInput = BasicPairwiseInput<double>;

// Every instance appears twice: as given, and with t1/t2 (and psi) swapped and the
// label flipped.
template <typename Scalar>
std::vector<BasicPairwiseInput<Scalar>> symmetric_expand(std::span<const BasicPairwiseInput<Scalar>> instances) {
  std::vector<BasicPairwiseInput<Scalar>> out;
  out.reserve(2 * instances.size());
  for (const auto& in : instances) {
    if (!in.label) throw std::invalid_argument("symmetric_expand: unlabeled instance");
    out.push_back(in);
    BasicPairwiseInput<Scalar> sw = in;
    std::swap(sw.x_t1, sw.x_t2);
    std::swap(sw.psi_1r, sw.psi_2r);
    std::swap(sw.tok_t1, sw.tok_t2);
    sw.label = 1 - *in.label;
    out.push_back(std::move(sw));
  }
  return out;
}

template <typename Scalar>
std::vector<BasicPairwiseInput<Scalar>> symmetric_expand(const std::vector<BasicPairwiseInput<Scalar>>& instances) {
  return symmetric_expand(std::span<const BasicPairwiseInput<Scalar>>(instances));
}

struct ModelConfig {
  std::size_t static_dim = 0;  // pre-computed part of each sentence vector
  std::size_t skip_dim = 0;    // |psi|
  std::size_t hidden = 4;      // width H of each hidden group
  bool skip_only = false;      // no hidden groups: logistic regression on psi
  EncoderConfig encoder;
  FineTuneMode finetune;
  std::size_t embedding_dim = 0;
  std::size_t vocab_size = 0;

  std::size_t encoder_dim() const { return encoder.output_dim(embedding_dim); }
  std::size_t sentence_dim() const { return static_dim + encoder_dim(); }
  bool uses_tokens() const { return !skip_only && encoder.kind != EncoderConfig::Kind::none; }

  void validate() const {
    encoder.validate();
    finetune.validate();
    if (!skip_only && hidden < 1) throw std::invalid_argument("hidden group width must be >= 1");
    if (skip_only && skip_dim == 0) throw std::invalid_argument("skip-only model needs skip features");
    if (!skip_only && sentence_dim() == 0) throw std::invalid_argument("model has no sentence inputs");
    if (uses_tokens() && (embedding_dim == 0 || vocab_size == 0)) {
      throw std::invalid_argument("on-the-fly encoder needs an embedding table");
    }
  }
};

template <typename Scalar>
struct NetworkTape {
  Vector<Scalar> x1, x2, xr;  // full sentence vectors
  Vector<Scalar> h1r, h2r, h12;
  Vector<Scalar> phi;  // [h12, h1r, h2r, psi_1r, psi_2r]
  Scalar prob = Scalar(0.5);
};

template <typename Scalar>
class PairModel {
 public:
  PairModel() = default;

  // Fresh model: Glorot-uniform weights, zero biases. `embeddings` supplies the
  // initial E when the configuration uses an on-the-fly encoder.
  static PairModel initialize(const ModelConfig& cfg, Rng& rng, const Matrix<Scalar>* embeddings = nullptr) {
    cfg.validate();
    PairModel m;
    m.cfg_ = cfg;
    m.encoder_ = SentenceEncoder<Scalar>(cfg.encoder, cfg.embedding_dim);
    const auto n = static_cast<Eigen::Index>(cfg.sentence_dim());
    const auto k = static_cast<Eigen::Index>(cfg.skip_dim);
    const auto H = static_cast<Eigen::Index>(cfg.hidden);
    if (!cfg.skip_only) {
      for (const char* g : {"1r", "2r", "12"}) {
        m.params_.add(std::string("W_") + g, xavier_init<Scalar>(H, 2 * n, rng));
        m.params_.add(std::string("b_") + g, Matrix<Scalar>::Zero(H, 1), false);
      }
    }
    const Eigen::Index out_in = (cfg.skip_only ? 0 : 3 * H) + 2 * k;
    m.params_.add("w_v", xavier_init<Scalar>(out_in, 1, rng));
    m.params_.add("b_v", Matrix<Scalar>::Zero(1, 1), false);
    if (cfg.uses_tokens()) {
      if (embeddings == nullptr) throw std::invalid_argument("on-the-fly encoder needs initial embeddings");
      if (embeddings->rows() != static_cast<Eigen::Index>(cfg.vocab_size) ||
          embeddings->cols() != static_cast<Eigen::Index>(cfg.embedding_dim)) {
        throw std::invalid_argument("initial embeddings do not match the configured vocabulary/dimension");
      }
      const bool tune = cfg.finetune.kind != FineTuneMode::Kind::frozen;
      // E's penalty comes from finetune_regularizer, never from adagrad's decay.
      m.params_.add("emb.E", *embeddings, false, tune);
      if (cfg.finetune.kind == FineTuneMode::Kind::moderate) {
        m.params_.add("emb.E0", *embeddings, false, false);
      }
      m.encoder_.add_params(m.params_, rng);
    }
    m.validate_shapes();
    return m;
  }

  // Rebuilds a model from stored parameters; shapes are validated.
  static PairModel from_params(const ModelConfig& cfg, ParamStore<Scalar> params) {
    cfg.validate();
    PairModel m;
    m.cfg_ = cfg;
    m.encoder_ = SentenceEncoder<Scalar>(cfg.encoder, cfg.embedding_dim);
    m.params_ = std::move(params);
    m.validate_shapes();
    return m;
  }

  const ModelConfig& config() const { return cfg_; }
  const ParamStore<Scalar>& params() const { return params_; }
  ParamStore<Scalar>& params() { return params_; }
  const SentenceEncoder<Scalar>& encoder() const { return encoder_; }

  // Full sentence vector: [pre-computed part, encoder output].
  Vector<Scalar> sentence_vector(const Vector<Scalar>& fixed, const TokenIds& tokens, Mode mode = Mode::infer,
                                 Rng* rng = nullptr, EncoderTape<Scalar>* tape = nullptr) const {
    if (static_cast<std::size_t>(fixed.size()) != cfg_.static_dim) {
      throw std::invalid_argument("sentence vector: expected " + std::to_string(cfg_.static_dim) +
                                  " pre-computed values, got " + std::to_string(fixed.size()));
    }
    if (!cfg_.uses_tokens()) return fixed;
    const Vector<Scalar> enc = encoder_.encode(params_, tokens, mode, rng, tape);
    Vector<Scalar> x(fixed.size() + enc.size());
    x << fixed, enc;
    return x;
  }

  // Network on complete sentence vectors.
  Scalar forward_vectors(const Vector<Scalar>& x1, const Vector<Scalar>& x2, const Vector<Scalar>& xr,
                         const Vector<Scalar>& psi1, const Vector<Scalar>& psi2,
                         NetworkTape<Scalar>* tape = nullptr) const {
    const auto n = static_cast<Eigen::Index>(cfg_.sentence_dim());
    const auto k = static_cast<Eigen::Index>(cfg_.skip_dim);
    if (psi1.size() != k || psi2.size() != k) {
      throw std::invalid_argument("forward: skip feature length mismatch");
    }
    if (!cfg_.skip_only && (x1.size() != n || x2.size() != n || xr.size() != n)) {
      throw std::invalid_argument("forward: sentence vector length mismatch");
    }
    if (!psi1.allFinite() || !psi2.allFinite() ||
        (!cfg_.skip_only && (!x1.allFinite() || !x2.allFinite() || !xr.allFinite()))) {
      throw NumericError("forward: non-finite input");
    }
    const Eigen::Index H = cfg_.skip_only ? 0 : static_cast<Eigen::Index>(cfg_.hidden);
    Vector<Scalar> phi(3 * H + 2 * k);
    Vector<Scalar> h1r, h2r, h12;
    if (!cfg_.skip_only) {
      h1r = group(params_.value("W_1r"), params_.value("b_1r"), x1, xr);
      h2r = group(params_.value("W_2r"), params_.value("b_2r"), x2, xr);
      h12 = group(params_.value("W_12"), params_.value("b_12"), x1, x2);
      phi << h12, h1r, h2r, psi1, psi2;
    } else {
      phi << psi1, psi2;
    }
    const Scalar z = params_.value("w_v").col(0).dot(phi) + params_.value("b_v")(0, 0);
    const Scalar p = logistic(z);
    if (tape != nullptr) {
      tape->x1 = x1;
      tape->x2 = x2;
      tape->xr = xr;
      tape->h1r = std::move(h1r);
      tape->h2r = std::move(h2r);
      tape->h12 = std::move(h12);
      tape->phi = std::move(phi);
      tape->prob = p;
    }
    return p;
  }

  // Probability that t1 beats t2 (inference mode).
  Scalar forward(const BasicPairwiseInput<Scalar>& in) const {
    if (cfg_.skip_only) {
      return forward_vectors(in.x_t1, in.x_t2, in.x_r, in.psi_1r, in.psi_2r);
    }
    return forward_vectors(sentence_vector(in.x_t1, in.tok_t1), sentence_vector(in.x_t2, in.tok_t2),
                           sentence_vector(in.x_r, in.tok_r), in.psi_1r, in.psi_2r);
  }

  // Negative log-likelihood of the labeled batch plus the embedding fine-tuning
  // penalty. Predictions are clamped to [1e-12, 1 - 1e-12] inside the log; the
  // gradient is that of the unclamped cross-entropy (p - y).
  Scalar loss(std::span<const BasicPairwiseInput<Scalar>> batch, GradMap<Scalar>* grads = nullptr,
              Mode mode = Mode::infer, Rng* rng = nullptr, double l2 = 0.0) const {
    constexpr Scalar kClamp = Scalar(1e-12);
    Scalar total = Scalar(0);
    for (const auto& in : batch) {
      if (!in.label) throw std::invalid_argument("loss: unlabeled instance");
      const auto y = static_cast<Scalar>(*in.label);
      NetworkTape<Scalar> net;
      EncoderTape<Scalar> e1, e2, er;
      const bool tokens = cfg_.uses_tokens();
      const bool want_tape = grads != nullptr;
      Scalar p;
      if (cfg_.skip_only) {
        p = forward_vectors(in.x_t1, in.x_t2, in.x_r, in.psi_1r, in.psi_2r, want_tape ? &net : nullptr);
      } else {
        const Vector<Scalar> x1 = sentence_vector(in.x_t1, in.tok_t1, mode, rng, want_tape ? &e1 : nullptr);
        const Vector<Scalar> x2 = sentence_vector(in.x_t2, in.tok_t2, mode, rng, want_tape ? &e2 : nullptr);
        const Vector<Scalar> xr = sentence_vector(in.x_r, in.tok_r, mode, rng, want_tape ? &er : nullptr);
        p = forward_vectors(x1, x2, xr, in.psi_1r, in.psi_2r, want_tape ? &net : nullptr);
      }
      const Scalar pc = std::clamp(p, kClamp, Scalar(1) - kClamp);
      total -= y * std::log(pc) + (Scalar(1) - y) * std::log(Scalar(1) - pc);
      if (grads != nullptr) {
        Vector<Scalar> dx1, dx2, dxr;
        backward(net, p - y, *grads, &dx1, &dx2, &dxr);
        if (tokens) {
          const auto s = static_cast<Eigen::Index>(cfg_.static_dim);
          const auto e = static_cast<Eigen::Index>(cfg_.encoder_dim());
          encoder_.backward(params_, e1, Vector<Scalar>(dx1.segment(s, e)), *grads);
          encoder_.backward(params_, e2, Vector<Scalar>(dx2.segment(s, e)), *grads);
          encoder_.backward(params_, er, Vector<Scalar>(dxr.segment(s, e)), *grads);
        }
      }
    }
    if (!std::isfinite(total)) throw NumericError("loss: non-finite value");
    return total + regularizer(l2, grads);
  }

  Scalar loss(const std::vector<BasicPairwiseInput<Scalar>>& batch, GradMap<Scalar>* grads = nullptr,
              Mode mode = Mode::infer, Rng* rng = nullptr, double l2 = 0.0) const {
    return loss(std::span<const BasicPairwiseInput<Scalar>>(batch), grads, mode, rng, l2);
  }

  // Embedding fine-tuning penalty (0 unless E is being tuned).
  Scalar regularizer(double l2, GradMap<Scalar>* grads = nullptr) const {
    if (!cfg_.uses_tokens() || cfg_.finetune.kind == FineTuneMode::Kind::frozen) return Scalar(0);
    Matrix<Scalar>* gE = nullptr;
    if (grads != nullptr) {
      auto it = grads->find("emb.E");
      if (it != grads->end()) gE = &it->second;
    }
    const Matrix<Scalar>* E0 = params_.contains("emb.E0") ? &params_.value("emb.E0") : nullptr;
    return finetune_regularizer(params_.value("emb.E"), E0, cfg_.finetune, l2, gE);
  }

  // Backprop from dLoss/dz at the output pre-activation.
  void backward(const NetworkTape<Scalar>& tape, Scalar dz, GradMap<Scalar>& grads, Vector<Scalar>* dx1,
                Vector<Scalar>* dx2, Vector<Scalar>* dxr) const {
    const Matrix<Scalar>& w_v = params_.value("w_v");
    accumulate(grads, "w_v", (dz * tape.phi).eval());
    accumulate(grads, "b_v", Vector<Scalar>::Constant(1, dz));
    if (cfg_.skip_only) return;
    const auto n = static_cast<Eigen::Index>(cfg_.sentence_dim());
    const auto H = static_cast<Eigen::Index>(cfg_.hidden);
    const Vector<Scalar> d_phi = dz * w_v.col(0);
    const auto group_back = [&](const char* g, const Vector<Scalar>& h, Eigen::Index offset, const Vector<Scalar>& a,
                                const Vector<Scalar>& b) -> Vector<Scalar> {
      const Vector<Scalar> da =
          d_phi.segment(offset, H).cwiseProduct((Scalar(1) - h.array().square()).matrix());
      Vector<Scalar> in(2 * n);
      in << a, b;
      accumulate(grads, std::string("W_") + g, (da * in.transpose()).eval());
      accumulate(grads, std::string("b_") + g, da);
      return params_.value(std::string("W_") + g).transpose() * da;
    };
    const Vector<Scalar> d12 = group_back("12", tape.h12, 0, tape.x1, tape.x2);
    const Vector<Scalar> d1r = group_back("1r", tape.h1r, H, tape.x1, tape.xr);
    const Vector<Scalar> d2r = group_back("2r", tape.h2r, 2 * H, tape.x2, tape.xr);
    if (dx1 != nullptr) *dx1 = d1r.head(n) + d12.head(n);
    if (dx2 != nullptr) *dx2 = d2r.head(n) + d12.tail(n);
    if (dxr != nullptr) *dxr = d1r.tail(n) + d2r.tail(n);
  }

 private:
  static Vector<Scalar> group(const Matrix<Scalar>& W, const Matrix<Scalar>& b, const Vector<Scalar>& a,
                              const Vector<Scalar>& c) {
    const Eigen::Index n = a.size();
    Vector<Scalar> pre = W.leftCols(n) * a + W.rightCols(n) * c + b.col(0);
    return pre.array().tanh().matrix();
  }

  template <typename Derived>
  static void accumulate(GradMap<Scalar>& grads, const std::string& name, const Eigen::MatrixBase<Derived>& g) {
    auto it = grads.find(name);
    if (it == grads.end()) return;
    if (it->second.rows() != g.rows() || it->second.cols() != g.cols()) {
      throw std::invalid_argument("gradient shape mismatch for '" + name + "'");
    }
    it->second += g;
  }

  void expect_shape(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    if (!params_.contains(name)) throw std::invalid_argument("model is missing parameter '" + name + "'");
    const auto& v = params_.value(name);
    if (v.rows() != rows || v.cols() != cols) {
      throw std::invalid_argument("parameter '" + name + "' has shape " + std::to_string(v.rows()) + "x" +
                                  std::to_string(v.cols()) + ", expected " + std::to_string(rows) + "x" +
                                  std::to_string(cols));
    }
  }

  void validate_shapes() const {
    const auto n = static_cast<Eigen::Index>(cfg_.sentence_dim());
    const auto k = static_cast<Eigen::Index>(cfg_.skip_dim);
    const auto H = static_cast<Eigen::Index>(cfg_.hidden);
    if (!cfg_.skip_only) {
      for (const char* g : {"1r", "2r", "12"}) {
        expect_shape(std::string("W_") + g, H, 2 * n);
        expect_shape(std::string("b_") + g, H, 1);
      }
    }
    expect_shape("w_v", (cfg_.skip_only ? 0 : 3 * H) + 2 * k, 1);
    expect_shape("b_v", 1, 1);
    if (!cfg_.uses_tokens()) return;
    const auto V = static_cast<Eigen::Index>(cfg_.vocab_size);
    const auto D = static_cast<Eigen::Index>(cfg_.embedding_dim);
    expect_shape("emb.E", V, D);
    if (cfg_.finetune.kind == FineTuneMode::Kind::moderate) expect_shape("emb.E0", V, D);
    const auto& enc = cfg_.encoder;
    if (enc.kind == EncoderConfig::Kind::cnn) {
      expect_shape("cnn.U", static_cast<Eigen::Index>(enc.filters), static_cast<Eigen::Index>(enc.window) * D);
      expect_shape("cnn.b", static_cast<Eigen::Index>(enc.filters), 1);
    } else if (enc.kind == EncoderConfig::Kind::lstm) {
      const auto Hl = static_cast<Eigen::Index>(enc.lstm_hidden);
      std::vector<std::string> dirs{"fwd"};
      if (enc.bidirectional) dirs.emplace_back("bwd");
      for (const auto& dir : dirs) {
        const auto names = SentenceEncoder<Scalar>::lstm_names(dir);
        for (std::size_t i = 0; i < 4; ++i) expect_shape(names[i], Hl, Hl);
        for (std::size_t i = 4; i < 8; ++i) expect_shape(names[i], Hl, D);
        for (std::size_t i = 8; i < 11; ++i) expect_shape(names[i], Hl, 1);
      }
    }
  }

  ModelConfig cfg_;
  ParamStore<Scalar> params_;
  SentenceEncoder<Scalar> encoder_;
};

// ---------------------------------------------------------------------------
// Trained model artifact

// Describes how raw corpus data become pre-computed sentence vectors and skip
// features, so scoring can rebuild inputs exactly as in training.
struct InputLayout {
  std::size_t synvec_dim = 0;  // ingested per-sentence vectors
  std::size_t bow_dim = 0;     // averaged frozen embeddings
  std::vector<std::string> skip_names;
};

struct ModelArtifact {
  PairModel<double> model;
  OptimizerConfig optimizer;
  TiePolicy dev_policy = TiePolicy::wmt12_strict;
  InputLayout layout;
  std::vector<std::string> vocab;  // rows of emb.E, when an on-the-fly encoder is used
  OovPolicy oov = OovPolicy::zero;
  MinMaxParams translation_norm;  // pre-computed translation-vector coordinates
  MinMaxParams reference_norm;    // pre-computed reference-vector coordinates
  MinMaxParams skip_norm;         // skip features
  // Means over the normalized training inputs (t1/t2 slots pooled).
  std::optional<Vector<double>> mean_translation;
  std::optional<Vector<double>> mean_skip;
  std::size_t selected_epoch = 0;
  double best_dev_tau = 0.0;
};

// Applies the artifact's normalization to the pre-computed vectors and skip
// features of a raw instance.
PairwiseInput normalize_input(const PairwiseInput& raw, const MinMaxParams& translation, const MinMaxParams& reference,
                              const MinMaxParams& skip);
PairwiseInput normalize_input(const PairwiseInput& raw, const ModelArtifact& artifact);

// ---------------------------------------------------------------------------
// Training

// 1-based epoch with the highest dev tau; ties go to the latest such epoch.
std::size_t select_best_epoch(std::span<const double> dev_taus);

// Best-so-far bookkeeping for early stopping.
struct TrainState {
  std::size_t epoch = 0;
  std::size_t best_epoch = 0;
  double best_tau = -std::numeric_limits<double>::infinity();
  ParamStore<double> best_params;

  // Records the epoch's dev tau; returns true when it becomes the selected one.
  bool observe(double dev_tau, const ParamStore<double>& params);
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training loss per (expanded) instance
  double dev_tau = 0.0;
};

struct TrainOptions {
  ModelConfig model;
  OptimizerConfig optimizer;
  TiePolicy dev_policy = TiePolicy::wmt12_strict;
  InputLayout layout;
  const EmbeddingTable<double>* embeddings = nullptr;  // initial E for on-the-fly encoders
};

struct TrainResult {
  ModelArtifact artifact;
  std::vector<EpochRecord> history;
};

// Pairwise dev agreement: a judgment is concordant when the model's preference
// (p > 0.5 for t1) matches the label, discordant when opposite, tied at p == 0.5.
TauCounts pairwise_counts(const PairModel<double>& model, std::span<const PairwiseInput> labeled);

// Fits normalization on `train`, trains with symmetric expansion, shuffled
// mini-batches and adagrad, and returns the parameters of the epoch with the
// highest dev tau (latest on ties). Inputs are raw (unnormalized).
TrainResult train(const std::vector<PairwiseInput>& train, const std::vector<PairwiseInput>& dev,
                  const TrainOptions& options, const std::function<void(const EpochRecord&)>& on_epoch = {});

}  // namespace mtrank

#endif  // MTRANK_PAIRNET_HPP
