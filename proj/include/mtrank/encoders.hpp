#ifndef MTRANK_ENCODERS_HPP
#define MTRANK_ENCODERS_HPP

// Sentence encoders over a shared embedding matrix: averaged bag of embeddings,
// wide-convolution CNN with max pooling, and (bi)directional LSTM with
// hard-sigmoid gates. Every encoder has a matching backward pass that
// accumulates into a GradMap, including gradients into the embedding matrix.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtrank/numcore.hpp"

namespace mtrank {

using Tokens = std::vector<std::string>;

// Row indices into the embedding matrix; kZeroRow stands for an all-zero vector.
using TokenIds = std::vector<Eigen::Index>;
inline constexpr Eigen::Index kZeroRow = -1;

enum class OovPolicy { zero, mean, error };

struct FineTuneMode {
  enum class Kind { frozen, moderate, full };
  Kind kind = Kind::frozen;
  double mu = 1e-3;  // deviation weight for moderate fine-tuning

  static FineTuneMode frozen() { return {Kind::frozen, 1e-3}; }
  static FineTuneMode moderate(double mu = 1e-3) { return {Kind::moderate, mu}; }
  static FineTuneMode full() { return {Kind::full, 1e-3}; }

  void validate() const {
    if (kind == Kind::moderate && !(mu > 0.0)) {
      throw std::invalid_argument("moderate fine-tuning requires mu > 0");
    }
  }
};

struct EncoderConfig {
  enum class Kind { none, bow, cnn, lstm };
  Kind kind = Kind::none;
  std::size_t filters = 100;  // CNN feature maps N
  std::size_t window = 3;     // CNN filter width L
  std::size_t pool = 3;       // CNN pooling width p
  std::size_t lstm_hidden = 50;
  bool bidirectional = false;
  double dropout = 0.0;

  std::size_t output_dim(std::size_t embedding_dim) const {
    switch (kind) {
      case Kind::none:
        return 0;
      case Kind::bow:
        return embedding_dim;
      case Kind::cnn:
        return filters;
      case Kind::lstm:
        return bidirectional ? 2 * lstm_hidden : lstm_hidden;
    }
    return 0;
  }

  void validate() const {
    if (filters < 1 || window < 1 || pool < 1 || lstm_hidden < 1) {
      throw std::invalid_argument("encoder sizes must all be >= 1");
    }
    if (!(dropout >= 0.0) || dropout >= 1.0) {
      throw std::invalid_argument("dropout rate must be in [0, 1)");
    }
  }
};

// Vocabulary plus embedding matrix E (|V| x D). Under OovPolicy::mean an extra
// "<unk>" row holding the column means of E is appended at construction.
template <typename Scalar>
class EmbeddingTable {
 public:
  static constexpr const char* kUnknownWord = "<unk>";

  EmbeddingTable() = default;

  EmbeddingTable(std::vector<std::string> words, Matrix<Scalar> vectors, OovPolicy oov = OovPolicy::zero)
      : words_(std::move(words)), E_(std::move(vectors)), oov_(oov) {
    if (static_cast<Eigen::Index>(words_.size()) != E_.rows()) {
      throw std::invalid_argument("embedding table: word count does not match matrix rows");
    }
    if (E_.cols() < 1) {
      throw std::invalid_argument("embedding table: dimension must be >= 1");
    }
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (!index_.emplace(words_[i], static_cast<Eigen::Index>(i)).second) {
        throw std::invalid_argument("embedding table: duplicate word '" + words_[i] + "'");
      }
    }
    if (oov_ == OovPolicy::mean && index_.count(kUnknownWord) == 0) {
      Matrix<Scalar> grown(E_.rows() + 1, E_.cols());
      grown.topRows(E_.rows()) = E_;
      if (E_.rows() > 0) {
        grown.row(E_.rows()) = E_.colwise().mean();
      } else {
        grown.row(E_.rows()).setZero();
      }
      E_ = std::move(grown);
      index_.emplace(kUnknownWord, static_cast<Eigen::Index>(words_.size()));
      words_.emplace_back(kUnknownWord);
    }
  }

  std::size_t dim() const { return static_cast<std::size_t>(E_.cols()); }
  std::size_t vocab_size() const { return words_.size(); }
  OovPolicy oov_policy() const { return oov_; }
  const std::vector<std::string>& words() const { return words_; }
  const Matrix<Scalar>& matrix() const { return E_; }
  Matrix<Scalar>& matrix() { return E_; }

  // Frozen copy of the initialization, needed for moderate fine-tuning.
  const std::optional<Matrix<Scalar>>& initial() const { return E0_; }
  void snapshot_initial() { E0_ = E_; }

  std::optional<Eigen::Index> find(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Eigen::Index resolve(const std::string& word) const {
    if (auto idx = find(word)) return *idx;
    switch (oov_) {
      case OovPolicy::zero:
        return kZeroRow;
      case OovPolicy::mean:
        return index_.at(kUnknownWord);
      case OovPolicy::error:
        throw DataError("out-of-vocabulary token '" + word + "'");
    }
    return kZeroRow;
  }

  TokenIds resolve(const Tokens& tokens) const {
    TokenIds ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(resolve(t));
    return ids;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, Eigen::Index> index_;
  Matrix<Scalar> E_;
  std::optional<Matrix<Scalar>> E0_;
  OovPolicy oov_ = OovPolicy::zero;
};

// Stacks the embedding rows for `ids` into a T x D matrix.
template <typename Scalar, typename EDerived>
Matrix<Scalar> gather_rows(const Eigen::MatrixBase<EDerived>& E, const TokenIds& ids) {
  Matrix<Scalar> X = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(ids.size()), E.cols());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] == kZeroRow) continue;
    if (ids[t] < 0 || ids[t] >= E.rows()) {
      throw std::out_of_range("token id outside the embedding matrix");
    }
    X.row(static_cast<Eigen::Index>(t)) = E.row(ids[t]);
  }
  return X;
}

// ---------------------------------------------------------------------------
// Bag of embeddings

template <typename Scalar>
Vector<Scalar> bow_forward(const Matrix<Scalar>& X) {
  if (X.rows() == 0) {
    throw std::invalid_argument("encode_bow: empty sentence");
  }
  return X.colwise().mean().transpose();
}

template <typename Scalar>
Vector<Scalar> encode_bow(const Tokens& tokens, const EmbeddingTable<Scalar>& table) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_bow: empty sentence");
  }
  return bow_forward<Scalar>(gather_rows<Scalar>(table.matrix(), table.resolve(tokens)));
}

// ---------------------------------------------------------------------------
// Wide convolution + max pooling

template <typename Scalar>
struct CnnParams {
  Matrix<Scalar> U;  // N x (L*D); row n is filter n over a window of L stacked vectors
  Vector<Scalar> b;  // N
};

template <typename Scalar>
struct CnnTape {
  Matrix<Scalar> padded;             // (T + 2(L-1)) x D zero-padded input
  Matrix<Scalar> feature_map;        // N x (T + L - 1), after tanh
  std::vector<Eigen::Index> argmax;  // per filter, position selected by the final max
};

// Stride-1 max over windows of `pool` entries. Windows running past the end are
// truncated, so the pooled map has the same length as the input.
template <typename Derived>
Vector<typename Derived::Scalar> max_pool(const Eigen::MatrixBase<Derived>& map_row, std::size_t pool) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index M = map_row.size();
  Vector<Scalar> out(M);
  for (Eigen::Index t = 0; t < M; ++t) {
    const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(pool), M - t);
    out[t] = map_row.derived().segment(t, len).maxCoeff();
  }
  return out;
}

// Raw feature map (N x (T+L-1)) of a wide convolution over X (T x D).
template <typename Scalar>
Matrix<Scalar> wide_convolution(const Matrix<Scalar>& U, const Vector<Scalar>& b, const Matrix<Scalar>& X,
                                std::size_t window, Matrix<Scalar>* padded_out = nullptr) {
  const Eigen::Index T = X.rows();
  const Eigen::Index D = X.cols();
  const Eigen::Index L = static_cast<Eigen::Index>(window);
  if (U.cols() != L * D || b.size() != U.rows()) {
    throw std::invalid_argument("wide_convolution: filter shape does not match window * dim");
  }
  Matrix<Scalar> padded = Matrix<Scalar>::Zero(T + 2 * (L - 1), D);
  padded.middleRows(L - 1, T) = X;
  const Eigen::Index M = T + L - 1;
  // Window t is L consecutive rows of `padded`, i.e. L*D contiguous scalars.
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>, 0, Eigen::OuterStride<>>
      windows(padded.data(), L * D, M, Eigen::OuterStride<>(D));
  Matrix<Scalar> A = U * windows;
  A.colwise() += b;
  if (padded_out != nullptr) *padded_out = std::move(padded);
  return A;
}

template <typename Scalar>
Vector<Scalar> cnn_forward(const Matrix<Scalar>& U, const Vector<Scalar>& b, const Matrix<Scalar>& X,
                           std::size_t window, std::size_t pool, CnnTape<Scalar>* tape = nullptr) {
  if (X.rows() == 0) {
    throw std::invalid_argument("encode_cnn: empty sentence");
  }
  Matrix<Scalar> padded;
  Matrix<Scalar> H = wide_convolution<Scalar>(U, b, X, window, &padded);
  H = H.array().tanh().matrix();
  const Eigen::Index N = H.rows();
  Vector<Scalar> out(N);
  std::vector<Eigen::Index> arg(static_cast<std::size_t>(N));
  for (Eigen::Index n = 0; n < N; ++n) {
    // Max over the pooled map equals max over the feature map; the position of the
    // maximum is what backprop needs.
    const Vector<Scalar> pooled = max_pool(H.row(n).transpose(), pool);
    Eigen::Index pos = 0;
    out[n] = pooled.maxCoeff(&pos);
    Eigen::Index best = pos;
    const Eigen::Index len = std::min<Eigen::Index>(static_cast<Eigen::Index>(pool), H.cols() - pos);
    H.row(n).segment(pos, len).maxCoeff(&best);
    arg[static_cast<std::size_t>(n)] = pos + best;
  }
  if (tape != nullptr) {
    tape->padded = std::move(padded);
    tape->feature_map = std::move(H);
    tape->argmax = std::move(arg);
  }
  return out;
}

// Accumulates dU, db and returns dX (T x D) for an upstream gradient on the output.
template <typename Scalar>
Matrix<Scalar> cnn_backward(const Matrix<Scalar>& U, const CnnTape<Scalar>& tape, const Vector<Scalar>& d_out,
                            std::size_t window, Matrix<Scalar>* dU, Vector<Scalar>* db) {
  const Eigen::Index L = static_cast<Eigen::Index>(window);
  const Eigen::Index D = tape.padded.cols();
  const Eigen::Index T = tape.padded.rows() - 2 * (L - 1);
  Matrix<Scalar> d_padded = Matrix<Scalar>::Zero(tape.padded.rows(), D);
  for (Eigen::Index n = 0; n < U.rows(); ++n) {
    const Eigen::Index t = tape.argmax[static_cast<std::size_t>(n)];
    const Scalar h = tape.feature_map(n, t);
    const Scalar da = d_out[n] * (Scalar(1) - h * h);
    if (da == Scalar(0)) continue;
    Eigen::Map<const Vector<Scalar>> win(tape.padded.data() + t * D, L * D);
    if (dU != nullptr) dU->row(n) += da * win.transpose();
    if (db != nullptr) (*db)[n] += da;
    Eigen::Map<Vector<Scalar>> dwin(d_padded.data() + t * D, L * D);
    dwin += da * U.row(n).transpose();
  }
  return d_padded.middleRows(L - 1, T);
}

template <typename Scalar>
Vector<Scalar> encode_cnn(const Tokens& tokens, const EmbeddingTable<Scalar>& table, const CnnParams<Scalar>& params,
                          const EncoderConfig& cfg, Mode mode, Rng* rng = nullptr) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_cnn: empty sentence");
  }
  cfg.validate();
  Matrix<Scalar> X = gather_rows<Scalar>(table.matrix(), table.resolve(tokens));
  if (mode == Mode::train && cfg.dropout > 0.0) {
    if (rng == nullptr) throw std::invalid_argument("encode_cnn: train-mode dropout needs an rng");
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
      X.row(t).array() *= dropout_mask<Scalar>(X.cols(), cfg.dropout, *rng, mode).array().transpose();
    }
  }
  Vector<Scalar> out = cnn_forward<Scalar>(params.U, params.b, X, cfg.window, cfg.pool);
  if (mode == Mode::train && cfg.dropout > 0.0) {
    out.array() *= dropout_mask<Scalar>(out.size(), cfg.dropout, *rng, mode).array();
  }
  return out;
}

// ---------------------------------------------------------------------------
// LSTM

// Gate weights for one direction. The cell candidate has no bias term.
template <typename Scalar>
struct LstmCell {
  Matrix<Scalar> U_i, U_f, U_c, U_o;  // H x H
  Matrix<Scalar> V_i, V_f, V_c, V_o;  // H x D
  Vector<Scalar> b_i, b_f, b_o;       // H

  static LstmCell zeros(Eigen::Index hidden, Eigen::Index input) {
    LstmCell c;
    for (auto* U : {&c.U_i, &c.U_f, &c.U_c, &c.U_o}) *U = Matrix<Scalar>::Zero(hidden, hidden);
    for (auto* V : {&c.V_i, &c.V_f, &c.V_c, &c.V_o}) *V = Matrix<Scalar>::Zero(hidden, input);
    for (auto* b : {&c.b_i, &c.b_f, &c.b_o}) *b = Vector<Scalar>::Zero(hidden);
    return c;
  }

  Eigen::Index hidden() const { return U_i.rows(); }
  Eigen::Index input() const { return V_i.cols(); }
};

template <typename Scalar>
struct LstmState {
  Vector<Scalar> h;
  Vector<Scalar> c;
};

template <typename Scalar>
struct LstmStepCache {
  Vector<Scalar> x, h_prev, c_prev;
  Vector<Scalar> a_i, a_f, a_o;  // gate pre-activations
  Vector<Scalar> i, f, o, g;     // gate values; g = tanh(candidate)
  Vector<Scalar> c, tanh_c;
};

template <typename Cell, typename Scalar>
LstmState<Scalar> lstm_step(const Cell& cell, const Vector<Scalar>& x, const Vector<Scalar>& h_prev,
                            const Vector<Scalar>& c_prev, LstmStepCache<Scalar>* cache = nullptr) {
  const Eigen::Index H = cell.U_i.rows();
  if (x.size() != cell.V_i.cols() || h_prev.size() != H || c_prev.size() != H) {
    throw std::invalid_argument("lstm_step: dimension mismatch");
  }
  const auto hs = [](Scalar v) { return hard_sigmoid(v); };
  Vector<Scalar> a_i = cell.U_i * h_prev + cell.V_i * x + cell.b_i;
  Vector<Scalar> a_f = cell.U_f * h_prev + cell.V_f * x + cell.b_f;
  Vector<Scalar> a_o = cell.U_o * h_prev + cell.V_o * x + cell.b_o;
  Vector<Scalar> i = a_i.unaryExpr(hs);
  Vector<Scalar> f = a_f.unaryExpr(hs);
  Vector<Scalar> o = a_o.unaryExpr(hs);
  Vector<Scalar> g = (cell.U_c * h_prev + cell.V_c * x).array().tanh().matrix();
  LstmState<Scalar> next;
  next.c = i.cwiseProduct(g) + f.cwiseProduct(c_prev);
  Vector<Scalar> tanh_c = next.c.array().tanh().matrix();
  next.h = o.cwiseProduct(tanh_c);
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->a_i = std::move(a_i);
    cache->a_f = std::move(a_f);
    cache->a_o = std::move(a_o);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c = next.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

// Runs the cell over the rows of X from h_0 = c_0 = 0 (right-to-left when
// `reverse`) and returns the final hidden state.
template <typename Cell, typename Scalar>
Vector<Scalar> lstm_run(const Cell& cell, const Matrix<Scalar>& X, bool reverse,
                        std::vector<LstmStepCache<Scalar>>* caches = nullptr) {
  if (X.rows() == 0) {
    throw std::invalid_argument("encode_lstm: empty sentence");
  }
  const Eigen::Index H = cell.U_i.rows();
  LstmState<Scalar> state{Vector<Scalar>::Zero(H), Vector<Scalar>::Zero(H)};
  if (caches != nullptr) caches->assign(static_cast<std::size_t>(X.rows()), {});
  for (Eigen::Index step = 0; step < X.rows(); ++step) {
    const Eigen::Index t = reverse ? X.rows() - 1 - step : step;
    const Vector<Scalar> x = X.row(t).transpose();
    state = lstm_step(cell, x, state.h, state.c,
                      caches != nullptr ? &(*caches)[static_cast<std::size_t>(step)] : nullptr);
  }
  return state.h;
}

template <typename Scalar>
struct LstmGrads {
  Matrix<Scalar>* U_i = nullptr;
  Matrix<Scalar>* U_f = nullptr;
  Matrix<Scalar>* U_c = nullptr;
  Matrix<Scalar>* U_o = nullptr;
  Matrix<Scalar>* V_i = nullptr;
  Matrix<Scalar>* V_f = nullptr;
  Matrix<Scalar>* V_c = nullptr;
  Matrix<Scalar>* V_o = nullptr;
  Matrix<Scalar>* b_i = nullptr;  // H x 1
  Matrix<Scalar>* b_f = nullptr;
  Matrix<Scalar>* b_o = nullptr;
};

// Backprop through time from a gradient on the final hidden state. Returns dX in
// the original (unreversed) row order.
template <typename Cell, typename Scalar>
Matrix<Scalar> lstm_backward(const Cell& cell, const std::vector<LstmStepCache<Scalar>>& caches,
                             const Vector<Scalar>& d_h_final, bool reverse, const LstmGrads<Scalar>& grads) {
  const Eigen::Index T = static_cast<Eigen::Index>(caches.size());
  const Eigen::Index H = cell.U_i.rows();
  Matrix<Scalar> dX = Matrix<Scalar>::Zero(T, cell.V_i.cols());
  Vector<Scalar> dh = d_h_final;
  Vector<Scalar> dc = Vector<Scalar>::Zero(H);
  const auto slope = [](Scalar v) { return hard_sigmoid_slope(v); };
  for (Eigen::Index step = T - 1; step >= 0; --step) {
    const auto& k = caches[static_cast<std::size_t>(step)];
    const Vector<Scalar> d_o = dh.cwiseProduct(k.tanh_c);
    const Vector<Scalar> dc_total =
        dc + dh.cwiseProduct(k.o).cwiseProduct((Scalar(1) - k.tanh_c.array().square()).matrix());
    const Vector<Scalar> da_i = dc_total.cwiseProduct(k.g).cwiseProduct(k.a_i.unaryExpr(slope));
    const Vector<Scalar> da_f = dc_total.cwiseProduct(k.c_prev).cwiseProduct(k.a_f.unaryExpr(slope));
    const Vector<Scalar> da_o = d_o.cwiseProduct(k.a_o.unaryExpr(slope));
    const Vector<Scalar> da_c =
        dc_total.cwiseProduct(k.i).cwiseProduct((Scalar(1) - k.g.array().square()).matrix());

    if (grads.U_i != nullptr) {
      *grads.U_i += da_i * k.h_prev.transpose();
      *grads.U_f += da_f * k.h_prev.transpose();
      *grads.U_c += da_c * k.h_prev.transpose();
      *grads.U_o += da_o * k.h_prev.transpose();
      *grads.V_i += da_i * k.x.transpose();
      *grads.V_f += da_f * k.x.transpose();
      *grads.V_c += da_c * k.x.transpose();
      *grads.V_o += da_o * k.x.transpose();
      *grads.b_i += da_i;
      *grads.b_f += da_f;
      *grads.b_o += da_o;
    }
    const Eigen::Index t = reverse ? T - 1 - step : step;
    dX.row(t) = (cell.V_i.transpose() * da_i + cell.V_f.transpose() * da_f + cell.V_c.transpose() * da_c +
                 cell.V_o.transpose() * da_o)
                    .transpose();
    dh = cell.U_i.transpose() * da_i + cell.U_f.transpose() * da_f + cell.U_c.transpose() * da_c +
         cell.U_o.transpose() * da_o;
    dc = dc_total.cwiseProduct(k.f);
  }
  return dX;
}

// Unidirectional: final forward state. Bidirectional: [forward final, backward final],
// the backward cell reading the sentence right to left.
template <typename Scalar>
Vector<Scalar> encode_lstm(const Tokens& tokens, const EmbeddingTable<Scalar>& table, const LstmCell<Scalar>& forward,
                           const LstmCell<Scalar>* backward, const EncoderConfig& cfg, Mode mode,
                           Rng* rng = nullptr) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_lstm: empty sentence");
  }
  cfg.validate();
  if (cfg.bidirectional && backward == nullptr) {
    throw std::invalid_argument("encode_lstm: bidirectional encoding needs a backward cell");
  }
  Matrix<Scalar> X = gather_rows<Scalar>(table.matrix(), table.resolve(tokens));
  const bool drop = mode == Mode::train && cfg.dropout > 0.0;
  if (drop) {
    if (rng == nullptr) throw std::invalid_argument("encode_lstm: train-mode dropout needs an rng");
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
      X.row(t).array() *= dropout_mask<Scalar>(X.cols(), cfg.dropout, *rng, mode).array().transpose();
    }
  }
  Vector<Scalar> out;
  const Vector<Scalar> h_fwd = lstm_run(forward, X, false);
  if (cfg.bidirectional) {
    const Vector<Scalar> h_bwd = lstm_run(*backward, X, true);
    out.resize(h_fwd.size() + h_bwd.size());
    out << h_fwd, h_bwd;
  } else {
    out = h_fwd;
  }
  if (drop) out.array() *= dropout_mask<Scalar>(out.size(), cfg.dropout, *rng, mode).array();
  return out;
}

// ---------------------------------------------------------------------------
// Fine-tuning regularizer

// frozen: 0; moderate: mu * sum (E - E0)^2; full: l2 * sum E^2. When `grad_E` is
// non-null the penalty's gradient is added to it.
template <typename Scalar>
Scalar finetune_regularizer(const Matrix<Scalar>& E, const Matrix<Scalar>* E0, const FineTuneMode& mode, double l2,
                            Matrix<Scalar>* grad_E = nullptr) {
  mode.validate();
  switch (mode.kind) {
    case FineTuneMode::Kind::frozen:
      return Scalar(0);
    case FineTuneMode::Kind::moderate: {
      if (E0 == nullptr) {
        throw std::invalid_argument("moderate fine-tuning needs the initial embedding matrix");
      }
      if (E0->rows() != E.rows() || E0->cols() != E.cols()) {
        throw std::invalid_argument("initial embedding matrix shape differs from E");
      }
      const Scalar mu = static_cast<Scalar>(mode.mu);
      const Matrix<Scalar> diff = E - *E0;
      if (grad_E != nullptr) *grad_E += Scalar(2) * mu * diff;
      return mu * diff.squaredNorm();
    }
    case FineTuneMode::Kind::full: {
      const Scalar lambda = static_cast<Scalar>(l2);
      if (grad_E != nullptr) *grad_E += Scalar(2) * lambda * E;
      return lambda * E.squaredNorm();
    }
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar finetune_regularizer(const EmbeddingTable<Scalar>& table, const FineTuneMode& mode, double l2,
                            Matrix<Scalar>* grad_E = nullptr) {
  const Matrix<Scalar>* E0 = table.initial() ? &*table.initial() : nullptr;
  return finetune_regularizer(table.matrix(), E0, mode, l2, grad_E);
}

// ---------------------------------------------------------------------------
// Parameter-store backed encoder used by the pairwise model.
//
// Parameter names: "emb.E" (and "emb.E0" for moderate fine-tuning), "cnn.U",
// "cnn.b", "lstm.fwd.*", "lstm.bwd.*".

template <typename Scalar>
struct LstmCellRef {
  const Matrix<Scalar>& U_i;
  const Matrix<Scalar>& U_f;
  const Matrix<Scalar>& U_c;
  const Matrix<Scalar>& U_o;
  const Matrix<Scalar>& V_i;
  const Matrix<Scalar>& V_f;
  const Matrix<Scalar>& V_c;
  const Matrix<Scalar>& V_o;
  const Matrix<Scalar>& b_i;
  const Matrix<Scalar>& b_f;
  const Matrix<Scalar>& b_o;
};

template <typename Scalar>
struct EncoderTape {
  TokenIds ids;
  Matrix<Scalar> embed_mask;  // T x D dropout mask on token vectors (empty when unused)
  Vector<Scalar> out_mask;    // dropout mask on the output (empty when unused)
  CnnTape<Scalar> cnn;
  std::vector<LstmStepCache<Scalar>> fwd, bwd;
};

template <typename Scalar>
class SentenceEncoder {
 public:
  SentenceEncoder() = default;
  SentenceEncoder(EncoderConfig cfg, std::size_t embedding_dim) : cfg_(cfg), dim_(embedding_dim) {
    cfg_.validate();
    if (cfg_.kind != EncoderConfig::Kind::none && dim_ < 1) {
      throw std::invalid_argument("encoder needs an embedding dimension >= 1");
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  std::size_t embedding_dim() const { return dim_; }
  std::size_t output_dim() const { return cfg_.output_dim(dim_); }
  bool active() const { return cfg_.kind != EncoderConfig::Kind::none; }

  static std::vector<std::string> lstm_names(const std::string& dir) {
    std::vector<std::string> names;
    for (const char* n : {"U_i", "U_f", "U_c", "U_o", "V_i", "V_f", "V_c", "V_o", "b_i", "b_f", "b_o"}) {
      names.push_back("lstm." + dir + "." + n);
    }
    return names;
  }

  // Creates the encoder's weights (not the embedding matrix).
  void add_params(ParamStore<Scalar>& store, Rng& rng) const {
    const auto D = static_cast<Eigen::Index>(dim_);
    switch (cfg_.kind) {
      case EncoderConfig::Kind::none:
      case EncoderConfig::Kind::bow:
        return;
      case EncoderConfig::Kind::cnn: {
        const auto N = static_cast<Eigen::Index>(cfg_.filters);
        store.add("cnn.U", xavier_init<Scalar>(N, static_cast<Eigen::Index>(cfg_.window) * D, rng));
        store.add("cnn.b", Matrix<Scalar>::Zero(N, 1), false);
        return;
      }
      case EncoderConfig::Kind::lstm: {
        const auto H = static_cast<Eigen::Index>(cfg_.lstm_hidden);
        std::vector<std::string> dirs{"fwd"};
        if (cfg_.bidirectional) dirs.emplace_back("bwd");
        for (const auto& dir : dirs) {
          const auto names = lstm_names(dir);
          for (std::size_t k = 0; k < 4; ++k) store.add(names[k], xavier_init<Scalar>(H, H, rng));
          for (std::size_t k = 4; k < 8; ++k) store.add(names[k], xavier_init<Scalar>(H, D, rng));
          for (std::size_t k = 8; k < 11; ++k) store.add(names[k], Matrix<Scalar>::Zero(H, 1), false);
        }
        return;
      }
    }
  }

  // Encodes one sentence. An empty sentence encodes to the zero vector.
  Vector<Scalar> encode(const ParamStore<Scalar>& store, const TokenIds& ids, Mode mode, Rng* rng,
                        EncoderTape<Scalar>* tape) const {
    const auto out_dim = static_cast<Eigen::Index>(output_dim());
    if (!active()) return Vector<Scalar>();
    if (tape != nullptr) *tape = EncoderTape<Scalar>{};
    if (ids.empty()) return Vector<Scalar>::Zero(out_dim);
    const bool drop = mode == Mode::train && cfg_.dropout > 0.0;
    if (drop && rng == nullptr) {
      throw std::invalid_argument("train-mode dropout needs an rng");
    }
    const Matrix<Scalar>& E = store.value("emb.E");
    Matrix<Scalar> X = gather_rows<Scalar>(E, ids);
    Matrix<Scalar> embed_mask;
    if (drop) {
      embed_mask.resize(X.rows(), X.cols());
      for (Eigen::Index t = 0; t < X.rows(); ++t) {
        embed_mask.row(t) = dropout_mask<Scalar>(X.cols(), cfg_.dropout, *rng, mode).transpose();
      }
      X = X.cwiseProduct(embed_mask);
    }
    Vector<Scalar> out;
    switch (cfg_.kind) {
      case EncoderConfig::Kind::none:
        break;
      case EncoderConfig::Kind::bow:
        out = bow_forward<Scalar>(X);
        break;
      case EncoderConfig::Kind::cnn: {
        const Vector<Scalar> b = store.value("cnn.b").col(0);
        out = cnn_forward<Scalar>(store.value("cnn.U"), b, X, cfg_.window, cfg_.pool,
                                  tape != nullptr ? &tape->cnn : nullptr);
        break;
      }
      case EncoderConfig::Kind::lstm: {
        const auto fwd = cell(store, "fwd");
        const Vector<Scalar> h_fwd = lstm_run(fwd, X, false, tape != nullptr ? &tape->fwd : nullptr);
        if (cfg_.bidirectional) {
          const auto bwd = cell(store, "bwd");
          const Vector<Scalar> h_bwd = lstm_run(bwd, X, true, tape != nullptr ? &tape->bwd : nullptr);
          out.resize(h_fwd.size() + h_bwd.size());
          out << h_fwd, h_bwd;
        } else {
          out = h_fwd;
        }
        break;
      }
    }
    Vector<Scalar> out_mask;
    if (drop) {
      out_mask = dropout_mask<Scalar>(out.size(), cfg_.dropout, *rng, mode);
      out = out.cwiseProduct(out_mask);
    }
    if (tape != nullptr) {
      tape->ids = ids;
      tape->embed_mask = std::move(embed_mask);
      tape->out_mask = std::move(out_mask);
    }
    return out;
  }

  // Accumulates parameter gradients (and "emb.E" when present in `grads`).
  void backward(const ParamStore<Scalar>& store, const EncoderTape<Scalar>& tape, const Vector<Scalar>& d_out_in,
                GradMap<Scalar>& grads) const {
    if (!active() || tape.ids.empty()) return;
    Vector<Scalar> d_out = d_out_in;
    if (tape.out_mask.size() > 0) d_out = d_out.cwiseProduct(tape.out_mask);
    const auto T = static_cast<Eigen::Index>(tape.ids.size());
    Matrix<Scalar> dX;
    switch (cfg_.kind) {
      case EncoderConfig::Kind::none:
        return;
      case EncoderConfig::Kind::bow:
        dX = d_out.transpose().replicate(T, 1) / static_cast<Scalar>(T);
        break;
      case EncoderConfig::Kind::cnn: {
        Matrix<Scalar>* dU = grad_ptr(grads, "cnn.U");
        Matrix<Scalar>* db = grad_ptr(grads, "cnn.b");
        Vector<Scalar> db_vec = Vector<Scalar>::Zero(static_cast<Eigen::Index>(cfg_.filters));
        dX = cnn_backward<Scalar>(store.value("cnn.U"), tape.cnn, d_out, cfg_.window, dU, &db_vec);
        if (db != nullptr) *db += db_vec;
        break;
      }
      case EncoderConfig::Kind::lstm: {
        const auto H = static_cast<Eigen::Index>(cfg_.lstm_hidden);
        dX = lstm_backward(cell(store, "fwd"), tape.fwd, Vector<Scalar>(d_out.head(H)), false,
                           lstm_grads(grads, "fwd"));
        if (cfg_.bidirectional) {
          dX += lstm_backward(cell(store, "bwd"), tape.bwd, Vector<Scalar>(d_out.tail(H)), true,
                              lstm_grads(grads, "bwd"));
        }
        break;
      }
    }
    Matrix<Scalar>* dE = grad_ptr(grads, "emb.E");
    if (dE == nullptr) return;
    if (tape.embed_mask.size() > 0) dX = dX.cwiseProduct(tape.embed_mask);
    for (Eigen::Index t = 0; t < T; ++t) {
      const Eigen::Index row = tape.ids[static_cast<std::size_t>(t)];
      if (row == kZeroRow) continue;
      dE->row(row) += dX.row(t);
    }
  }

 private:
  static Matrix<Scalar>* grad_ptr(GradMap<Scalar>& grads, const std::string& name) {
    auto it = grads.find(name);
    return it == grads.end() ? nullptr : &it->second;
  }

  static LstmCellRef<Scalar> cell(const ParamStore<Scalar>& store, const std::string& dir) {
    const auto n = lstm_names(dir);
    return LstmCellRef<Scalar>{store.value(n[0]), store.value(n[1]), store.value(n[2]), store.value(n[3]),
                               store.value(n[4]), store.value(n[5]), store.value(n[6]), store.value(n[7]),
                               store.value(n[8]), store.value(n[9]), store.value(n[10])};
  }

  static LstmGrads<Scalar> lstm_grads(GradMap<Scalar>& grads, const std::string& dir) {
    const auto n = lstm_names(dir);
    LstmGrads<Scalar> g;
    if (grads.count(n[0]) == 0) return g;
    g.U_i = &grads.at(n[0]);
    g.U_f = &grads.at(n[1]);
    g.U_c = &grads.at(n[2]);
    g.U_o = &grads.at(n[3]);
    g.V_i = &grads.at(n[4]);
    g.V_f = &grads.at(n[5]);
    g.V_c = &grads.at(n[6]);
    g.V_o = &grads.at(n[7]);
    g.b_i = &grads.at(n[8]);
    g.b_f = &grads.at(n[9]);
    g.b_o = &grads.at(n[10]);
    return g;
  }

  EncoderConfig cfg_;
  std::size_t dim_ = 0;
};

}  // namespace mtrank

#endif  // MTRANK_ENCODERS_HPP
