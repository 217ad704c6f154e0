#ifndef MTRANK_CORRELATIONS_HPP
#define MTRANK_CORRELATIONS_HPP

// Agreement between metric scores and human judgments: Kendall's tau over
// pairwise segment-level preferences, Spearman's rho and Pearson's r over
// system-level scores.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mtrank {

// How metric ties on a human-judged pair are counted.
//   wmt12_strict: (Con - Dis - TieM) / (Con + Dis + TieM)
//   ties_ignored: (Con - Dis) / (Con + Dis)
//   wmt14:        (Con - Dis) / (Con + Dis + TieM)
enum class TiePolicy { wmt12_strict, ties_ignored, wmt14 };

struct PairJudgment {
  std::string langpair;
  std::string segid;
  std::string winner;
  std::string loser;
};

struct TauCounts {
  std::size_t concordant = 0;
  std::size_t discordant = 0;
  std::size_t metric_ties = 0;

  std::size_t total() const { return concordant + discordant + metric_ties; }
  TauCounts& operator+=(const TauCounts& o) {
    concordant += o.concordant;
    discordant += o.discordant;
    metric_ties += o.metric_ties;
    return *this;
  }
};

// (segid, sysid) -> score
using ScoreKey = std::pair<std::string, std::string>;
using SegmentScoreMap = std::map<ScoreKey, double>;

TauCounts count_agreements(std::span<const PairJudgment> judgments, const SegmentScoreMap& scores);
double tau_from_counts(const TauCounts& counts, TiePolicy policy);
double kendall_tau(std::span<const PairJudgment> judgments, const SegmentScoreMap& scores, TiePolicy policy);

// 1 - 6 sum d^2 / (n (n^2 - 1)). Both inputs must be permutations of 1..n unless
// `allow_ties`, in which case (average) ranks are correlated with Pearson's r.
double spearman_rho(std::span<const double> human_ranks, std::span<const double> metric_ranks, bool allow_ties = false);

double pearson_r(std::span<const double> x, std::span<const double> y);

// Rank 1 = highest score. Tied scores are an error unless `allow_ties`, which
// assigns the average of the ranks the tied group occupies.
std::map<std::string, double> ranks_from_scores(const std::map<std::string, double>& scores, bool allow_ties = false);

std::string to_string(TiePolicy policy);
TiePolicy parse_tie_policy(const std::string& name);

}  // namespace mtrank

#endif  // MTRANK_CORRELATIONS_HPP
