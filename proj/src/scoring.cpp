#include "mtrank/scoring.hpp"

#include <stdexcept>

#include "mtrank/error.hpp"

namespace mtrank {

EmptyVectorSpec build_mean_empty(std::span<const PairwiseInput> inputs, const PairModel<double>& model) {
  if (inputs.empty()) throw std::invalid_argument("build_mean_empty: no training inputs");
  const auto& cfg = model.config();
  EmptyVectorSpec spec;
  spec.strategy = EmptyStrategy::mean;
  spec.translation = Vector<double>::Zero(static_cast<Eigen::Index>(cfg.sentence_dim()));
  spec.skip = Vector<double>::Zero(static_cast<Eigen::Index>(cfg.skip_dim));
  if (cfg.skip_only) spec.translation.resize(0);
  for (const auto& in : inputs) {
    if (!cfg.skip_only) {
      spec.translation += model.sentence_vector(in.x_t1, in.tok_t1);
      spec.translation += model.sentence_vector(in.x_t2, in.tok_t2);
    }
    spec.skip += in.psi_1r + in.psi_2r;
  }
  const double count = 2.0 * static_cast<double>(inputs.size());
  spec.translation /= count;
  spec.skip /= count;
  return spec;
}

EmptyVectorSpec build_mean_empty(std::span<const PairwiseInput> inputs) {
  if (inputs.empty()) throw std::invalid_argument("build_mean_empty: no training inputs");
  EmptyVectorSpec spec;
  spec.strategy = EmptyStrategy::mean;
  spec.translation = Vector<double>::Zero(inputs.front().x_t1.size());
  spec.skip = Vector<double>::Zero(inputs.front().psi_1r.size());
  for (const auto& in : inputs) {
    if (in.x_t1.size() != spec.translation.size() || in.x_t2.size() != spec.translation.size() ||
        in.psi_1r.size() != spec.skip.size() || in.psi_2r.size() != spec.skip.size()) {
      throw std::invalid_argument("build_mean_empty: inputs differ in length");
    }
    spec.translation += in.x_t1 + in.x_t2;
    spec.skip += in.psi_1r + in.psi_2r;
  }
  const double count = 2.0 * static_cast<double>(inputs.size());
  spec.translation /= count;
  spec.skip /= count;
  return spec;
}

EmptyVectorSpec zero_empty(std::size_t sentence_dim, std::size_t skip_dim) {
  return {EmptyStrategy::zero, Vector<double>::Zero(static_cast<Eigen::Index>(sentence_dim)),
          Vector<double>::Zero(static_cast<Eigen::Index>(skip_dim))};
}

EmptyVectorSpec empty_spec(const ModelArtifact& artifact, EmptyStrategy strategy) {
  const auto& cfg = artifact.model.config();
  if (strategy == EmptyStrategy::zero) return zero_empty(cfg.sentence_dim(), cfg.skip_dim);
  if (!artifact.mean_translation || !artifact.mean_skip) {
    throw DataError("model artifact carries no mean empty vectors; use the zero strategy");
  }
  return {EmptyStrategy::mean, *artifact.mean_translation, *artifact.mean_skip};
}

double absolute_score(const PairModel<double>& model, const Vector<double>& x_t, const Vector<double>& psi_t,
                      const Vector<double>& x_r, const EmptyVectorSpec& empty) {
  const auto& cfg = model.config();
  if (static_cast<std::size_t>(empty.skip.size()) != cfg.skip_dim ||
      (!cfg.skip_only && static_cast<std::size_t>(empty.translation.size()) != cfg.sentence_dim())) {
    throw std::invalid_argument("absolute_score: empty vector does not match the model");
  }
  const double win = model.forward_vectors(x_t, empty.translation, x_r, psi_t, empty.skip);
  const double lose = model.forward_vectors(empty.translation, x_t, x_r, empty.skip, psi_t);
  return win - lose;
}

double absolute_score(const ModelArtifact& artifact, const ScoringInput& input, const EmptyVectorSpec& empty) {
  const auto& model = artifact.model;
  PairwiseInput raw;
  raw.x_t1 = input.x_t;
  raw.x_t2 = input.x_t;
  raw.x_r = input.x_r;
  raw.psi_1r = input.psi_t;
  raw.psi_2r = input.psi_t;
  const PairwiseInput norm = normalize_input(raw, artifact);
  if (model.config().skip_only) {
    return absolute_score(model, norm.x_t1, norm.psi_1r, norm.x_r, empty);
  }
  return absolute_score(model, model.sentence_vector(norm.x_t1, input.tok_t), norm.psi_1r,
                        model.sentence_vector(norm.x_r, input.tok_r), empty);
}

double pairwise_probability(const ModelArtifact& artifact, const PairwiseInput& raw) {
  return artifact.model.forward(normalize_input(raw, artifact));
}

Preference pairwise_from_absolute(double score_a, double score_b) {
  if (score_a > score_b) return Preference::first;
  if (score_b > score_a) return Preference::second;
  return Preference::tie;
}

double system_score(std::span<const double> segment_scores, Aggregation mode) {
  if (segment_scores.empty()) throw std::invalid_argument("system_score: no segment scores");
  double acc = 0.0;
  for (double s : segment_scores) acc += mode == Aggregation::mean ? s : (s > 0.0 ? 1.0 : 0.0);
  return acc / static_cast<double>(segment_scores.size());
}

std::string to_string(EmptyStrategy s) { return s == EmptyStrategy::zero ? "zero" : "mean"; }

EmptyStrategy parse_empty_strategy(const std::string& name) {
  if (name == "zero") return EmptyStrategy::zero;
  if (name == "mean") return EmptyStrategy::mean;
  throw std::invalid_argument("unknown empty-vector strategy '" + name + "'");
}

std::string to_string(Aggregation a) { return a == Aggregation::mean ? "mean" : "sign"; }

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean") return Aggregation::mean;
  if (name == "sign") return Aggregation::sign;
  throw std::invalid_argument("unknown aggregation '" + name + "'");
}

}  // namespace mtrank
