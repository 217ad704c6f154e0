#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "mtrank/error.hpp"
#include "mtrank/pairnet.hpp"
#include "mtrank/scoring.hpp"

namespace mtrank {

PairwiseInput normalize_input(const PairwiseInput& raw, const MinMaxParams& translation, const MinMaxParams& reference,
                              const MinMaxParams& skip) {
  PairwiseInput out = raw;
  if (!translation.empty()) {
    out.x_t1 = apply_minmax(raw.x_t1, translation);
    out.x_t2 = apply_minmax(raw.x_t2, translation);
  }
  if (!reference.empty()) out.x_r = apply_minmax(raw.x_r, reference);
  if (!skip.empty()) {
    out.psi_1r = apply_minmax(raw.psi_1r, skip);
    out.psi_2r = apply_minmax(raw.psi_2r, skip);
  }
  return out;
}

PairwiseInput normalize_input(const PairwiseInput& raw, const ModelArtifact& artifact) {
  return normalize_input(raw, artifact.translation_norm, artifact.reference_norm, artifact.skip_norm);
}

std::size_t select_best_epoch(std::span<const double> dev_taus) {
  if (dev_taus.empty()) throw std::invalid_argument("select_best_epoch: empty trajectory");
  std::size_t best = 0;
  for (std::size_t i = 1; i < dev_taus.size(); ++i) {
    if (dev_taus[i] >= dev_taus[best]) best = i;
  }
  return best + 1;
}

bool TrainState::observe(double dev_tau, const ParamStore<double>& params) {
  ++epoch;
  if (dev_tau >= best_tau) {
    best_tau = dev_tau;
    best_epoch = epoch;
    best_params = params;
    return true;
  }
  return false;
}

TauCounts pairwise_counts(const PairModel<double>& model, std::span<const PairwiseInput> labeled) {
  TauCounts c;
  for (const auto& in : labeled) {
    if (!in.label) throw std::invalid_argument("pairwise_counts: unlabeled instance");
    const double p = model.forward(in);
    const bool says_first = p > 0.5;
    const bool says_second = p < 0.5;
    const bool first_better = *in.label == 1;
    if (!says_first && !says_second) {
      ++c.metric_ties;
    } else if (says_first == first_better) {
      ++c.concordant;
    } else {
      ++c.discordant;
    }
  }
  return c;
}

namespace {

struct Normalization {
  MinMaxParams translation, reference, skip;
};

Normalization fit_normalization(const std::vector<PairwiseInput>& train, const ModelConfig& cfg) {
  Normalization n;
  if (cfg.static_dim > 0 && !cfg.skip_only) {
    std::vector<Vector<double>> trans, ref;
    trans.reserve(2 * train.size());
    ref.reserve(train.size());
    for (const auto& in : train) {
      trans.push_back(in.x_t1);
      trans.push_back(in.x_t2);
      ref.push_back(in.x_r);
    }
    n.translation = fit_minmax(trans);
    n.reference = fit_minmax(ref);
  }
  if (cfg.skip_dim > 0) {
    std::vector<Vector<double>> skip;
    skip.reserve(2 * train.size());
    for (const auto& in : train) {
      skip.push_back(in.psi_1r);
      skip.push_back(in.psi_2r);
    }
    n.skip = fit_minmax(skip);
  }
  return n;
}

void check_shapes(const std::vector<PairwiseInput>& set, const ModelConfig& cfg, const char* which) {
  const auto s = static_cast<Eigen::Index>(cfg.static_dim);
  const auto k = static_cast<Eigen::Index>(cfg.skip_dim);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& in = set[i];
    const bool vec_ok = cfg.skip_only || (in.x_t1.size() == s && in.x_t2.size() == s && in.x_r.size() == s);
    if (!vec_ok || in.psi_1r.size() != k || in.psi_2r.size() != k) {
      throw DataError(std::string(which) + " instance " + std::to_string(i) + " does not match the model layout");
    }
    if (!in.label) throw DataError(std::string(which) + " instance " + std::to_string(i) + " is unlabeled");
  }
}

}  // namespace

TrainResult train(const std::vector<PairwiseInput>& train_raw, const std::vector<PairwiseInput>& dev_raw,
                  const TrainOptions& options, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train_raw.empty()) throw DataError("train: empty training set");
  if (dev_raw.empty()) throw DataError("train: empty development set");
  const ModelConfig& cfg = options.model;
  const OptimizerConfig& opt = options.optimizer;
  cfg.validate();
  opt.validate();
  check_shapes(train_raw, cfg, "training");
  check_shapes(dev_raw, cfg, "development");

  const Normalization norm = fit_normalization(train_raw, cfg);
  std::vector<PairwiseInput> train_norm, dev;
  train_norm.reserve(train_raw.size());
  for (const auto& in : train_raw) train_norm.push_back(normalize_input(in, norm.translation, norm.reference, norm.skip));
  dev.reserve(dev_raw.size());
  for (const auto& in : dev_raw) dev.push_back(normalize_input(in, norm.translation, norm.reference, norm.skip));
  std::vector<PairwiseInput> data = symmetric_expand(train_norm);

  Rng init_rng(opt.seed);
  const Matrix<double>* E = nullptr;
  if (cfg.uses_tokens()) {
    if (options.embeddings == nullptr) throw std::invalid_argument("train: on-the-fly encoder needs embeddings");
    E = &options.embeddings->matrix();
  }
  PairModel<double> model = PairModel<double>::initialize(cfg, init_rng, E);
  Rng dropout_rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);

  GradMap<double> grads = zero_grads(model.params());
  TrainState state;
  TrainResult result;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    Rng shuffle_rng(seq);
    std::shuffle(data.begin(), data.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < data.size(); start += opt.batch_size) {
      const std::size_t len = std::min(opt.batch_size, data.size() - start);
      for (auto& [name, g] : grads) g.setZero();
      epoch_loss += model.loss(std::span<const PairwiseInput>(data.data() + start, len), &grads, Mode::train,
                               &dropout_rng, opt.l2);
      adagrad_step(model.params(), grads, opt);
    }
    if (!std::isfinite(epoch_loss)) throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));

    double tau = 0.0;
    try {
      tau = tau_from_counts(pairwise_counts(model, dev), options.dev_policy);
    } catch (const DataError&) {
      tau = 0.0;  // every dev prediction tied under ties_ignored
    }
    // Ties move the selection forward but do not reset patience.
    const bool improved = tau > state.best_tau;
    state.observe(tau, model.params());
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(data.size()), tau};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    since_best = improved ? 0 : since_best + 1;
    if (opt.patience > 0 && since_best >= opt.patience) break;
  }

  ModelArtifact& art = result.artifact;
  art.model = PairModel<double>::from_params(cfg, state.best_params);
  art.optimizer = opt;
  art.dev_policy = options.dev_policy;
  art.layout = options.layout;
  if (options.embeddings != nullptr && cfg.uses_tokens()) {
    art.vocab = options.embeddings->words();
    art.oov = options.embeddings->oov_policy();
  }
  art.translation_norm = norm.translation;
  art.reference_norm = norm.reference;
  art.skip_norm = norm.skip;
  const EmptyVectorSpec means = build_mean_empty(data, art.model);
  art.mean_translation = means.translation;
  art.mean_skip = means.skip;
  art.selected_epoch = state.best_epoch;
  art.best_dev_tau = state.best_tau;
  return result;
}

}  // namespace mtrank
