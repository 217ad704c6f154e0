#ifndef MTRANK_SCORING_HPP
#define MTRANK_SCORING_HPP

// Absolute scores from the pairwise judge: a hypothesis is compared against an
// empty translation placeholder in both slots, and the score is
// p(t, empty, r) - p(empty, t, r). Segment scores aggregate to system scores.

#include <span>
#include <string>
#include <vector>

#include "mtrank/pairnet.hpp"

namespace mtrank {

enum class EmptyStrategy { zero, mean };

// Placeholder for the vacant translation slot: full sentence vector and skip features.
struct EmptyVectorSpec {
  EmptyStrategy strategy = EmptyStrategy::zero;
  Vector<double> translation;
  Vector<double> skip;
};

// Coordinate-wise means over the (normalized) translation-slot sentence vectors
// and skip features of `inputs`, t1 and t2 occurrences pooled. Sentence vectors
// include the model's encoder output when it has one.
EmptyVectorSpec build_mean_empty(std::span<const PairwiseInput> inputs, const PairModel<double>& model);

// Same, for inputs that carry only pre-computed vectors.
EmptyVectorSpec build_mean_empty(std::span<const PairwiseInput> inputs);

EmptyVectorSpec zero_empty(std::size_t sentence_dim, std::size_t skip_dim);

// The placeholder stored in (zero) or derived from (mean) a trained artifact. Throws
// DataError for the mean strategy when the artifact has no stored means.
EmptyVectorSpec empty_spec(const ModelArtifact& artifact, EmptyStrategy strategy);

// One hypothesis to score, raw (unnormalized) as produced by the corpus loaders.
struct ScoringInput {
  Vector<double> x_t;    // pre-computed hypothesis vector
  TokenIds tok_t;
  Vector<double> psi_t;  // skip features of the hypothesis vs the reference
  Vector<double> x_r;    // pre-computed reference vector
  TokenIds tok_r;
};

// Normalized-input form: p(t, empty, r) - p(empty, t, r), in (-1, 1).
double absolute_score(const PairModel<double>& model, const Vector<double>& x_t, const Vector<double>& psi_t,
                      const Vector<double>& x_r, const EmptyVectorSpec& empty);

// Normalizes with the artifact's parameters, encodes tokens, then scores.
double absolute_score(const ModelArtifact& artifact, const ScoringInput& input, const EmptyVectorSpec& empty);

// Probability that t1 beats t2 for a raw instance.
double pairwise_probability(const ModelArtifact& artifact, const PairwiseInput& raw);

enum class Preference { first, second, tie };

Preference pairwise_from_absolute(double score_a, double score_b);

enum class Aggregation { mean, sign };

struct SegmentScore {
  std::string segid;
  std::string sysid;
  double score = 0.0;
};

struct SystemScore {
  std::string sysid;
  double score = 0.0;
  Aggregation aggregation = Aggregation::mean;
};

// mean: arithmetic mean; sign: fraction of segments scoring > 0.
double system_score(std::span<const double> segment_scores, Aggregation mode);

std::string to_string(EmptyStrategy s);
EmptyStrategy parse_empty_strategy(const std::string& name);
std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

}  // namespace mtrank

#endif  // MTRANK_SCORING_HPP
