#include "mtrank/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mtrank/error.hpp"

namespace mtrank {

namespace {

double lookup(const SegmentScoreMap& scores, const std::string& segid, const std::string& sysid) {
  auto it = scores.find({segid, sysid});
  if (it == scores.end()) {
    throw DataError("no metric score for segment '" + segid + "', system '" + sysid + "'");
  }
  return it->second;
}

}  // namespace

TauCounts count_agreements(std::span<const PairJudgment> judgments, const SegmentScoreMap& scores) {
  TauCounts c;
  for (const auto& j : judgments) {
    const double w = lookup(scores, j.segid, j.winner);
    const double l = lookup(scores, j.segid, j.loser);
    if (w > l) {
      ++c.concordant;
    } else if (w < l) {
      ++c.discordant;
    } else {
      ++c.metric_ties;
    }
  }
  return c;
}

double tau_from_counts(const TauCounts& c, TiePolicy policy) {
  const auto con = static_cast<double>(c.concordant);
  const auto dis = static_cast<double>(c.discordant);
  const auto ties = static_cast<double>(c.metric_ties);
  switch (policy) {
    case TiePolicy::wmt12_strict:
      if (c.total() == 0) throw DataError("kendall_tau: no usable judgments");
      return (con - dis - ties) / (con + dis + ties);
    case TiePolicy::ties_ignored:
      if (c.concordant + c.discordant == 0) throw DataError("kendall_tau: no usable judgments");
      return (con - dis) / (con + dis);
    case TiePolicy::wmt14:
      if (c.total() == 0) throw DataError("kendall_tau: no usable judgments");
      return (con - dis) / (con + dis + ties);
  }
  throw std::invalid_argument("unknown tie policy");
}

double kendall_tau(std::span<const PairJudgment> judgments, const SegmentScoreMap& scores, TiePolicy policy) {
  return tau_from_counts(count_agreements(judgments, scores), policy);
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r: arrays differ in length");
  if (x.size() < 2) throw std::invalid_argument("pearson_r: need at least two points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::invalid_argument("pearson_r: undefined for a constant array");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

void require_permutation(std::span<const double> ranks, const char* which) {
  std::vector<bool> seen(ranks.size() + 1, false);
  for (double r : ranks) {
    const double k = std::round(r);
    if (k != r || k < 1 || k > static_cast<double>(ranks.size()) || seen[static_cast<std::size_t>(k)]) {
      throw std::invalid_argument(std::string("spearman_rho: ") + which +
                                  " ranks are not a tie-free permutation of 1..n");
    }
    seen[static_cast<std::size_t>(k)] = true;
  }
}

}  // namespace

double spearman_rho(std::span<const double> human_ranks, std::span<const double> metric_ranks, bool allow_ties) {
  if (human_ranks.size() != metric_ranks.size()) {
    throw std::invalid_argument("spearman_rho: arrays differ in length");
  }
  if (human_ranks.size() < 2) throw std::invalid_argument("spearman_rho: need at least two systems");
  if (allow_ties) return pearson_r(human_ranks, metric_ranks);
  require_permutation(human_ranks, "human");
  require_permutation(metric_ranks, "metric");
  const auto n = static_cast<double>(human_ranks.size());
  double sum_d2 = 0.0;
  for (std::size_t i = 0; i < human_ranks.size(); ++i) {
    const double d = human_ranks[i] - metric_ranks[i];
    sum_d2 += d * d;
  }
  return 1.0 - 6.0 * sum_d2 / (n * (n * n - 1.0));
}

std::map<std::string, double> ranks_from_scores(const std::map<std::string, double>& scores, bool allow_ties) {
  if (scores.size() < 2) throw std::invalid_argument("ranks_from_scores: need at least two systems");
  std::vector<std::pair<std::string, double>> order(scores.begin(), scores.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<std::string, double> ranks;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && order[j + 1].second == order[i].second) ++j;
    if (j > i && !allow_ties) {
      throw std::invalid_argument("ranks_from_scores: systems '" + order[i].first + "' and '" + order[j].first +
                                  "' have tied scores");
    }
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k].first] = avg;
    i = j + 1;
  }
  return ranks;
}

std::string to_string(TiePolicy policy) {
  switch (policy) {
    case TiePolicy::wmt12_strict:
      return "wmt12";
    case TiePolicy::ties_ignored:
      return "ignored";
    case TiePolicy::wmt14:
      return "wmt14";
  }
  return "?";
}

TiePolicy parse_tie_policy(const std::string& name) {
  if (name == "wmt12" || name == "wmt12_strict") return TiePolicy::wmt12_strict;
  if (name == "ignored" || name == "ties_ignored") return TiePolicy::ties_ignored;
  if (name == "wmt14") return TiePolicy::wmt14;
  throw std::invalid_argument("unknown tie policy '" + name + "'");
}

}  // namespace mtrank
