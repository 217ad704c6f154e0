#ifndef MTRANK_FEATURES_HPP
#define MTRANK_FEATURES_HPP

// Skip-arc features: smoothed sentence BLEU, shift-free TER, ingestion of
// externally computed metric columns, and min-max normalization.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtrank/numcore.hpp"

namespace mtrank {

using Tokens = std::vector<std::string>;

// Geometric mean of add-one smoothed modified n-gram precisions (n = 1..max_n)
// times the brevity penalty exp(min(0, 1 - |ref|/|hyp|)). Empty hypothesis -> 0.
double sentence_bleu(const Tokens& hypothesis, const Tokens& reference, std::size_t max_n = 4);

// Word-level Levenshtein distance with unit costs.
std::size_t edit_distance(const Tokens& hypothesis, const Tokens& reference);

// TER without shifts: edit_distance / |reference|.
double ter_lite(const Tokens& hypothesis, const Tokens& reference);

// Per-coordinate extrema fitted on training data.
struct MinMaxParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const { return min.size(); }
  bool empty() const { return min.empty(); }
};

MinMaxParams fit_minmax(std::span<const Vector<double>> rows);

// x' = 2 (x - min) / (max - min) - 1, or 0 for a constant training column.
// No clamping: test values may leave [-1, 1].
Vector<double> apply_minmax(const Vector<double>& values, const MinMaxParams& params);

struct FeatureRow {
  std::string segid;
  std::string sysid;
  std::map<std::string, double> values;
};

// Reads a feature TSV (`segid<TAB>sysid<TAB>name...`). When `expected_names` is
// non-empty the header must carry exactly those names (any order).
std::vector<FeatureRow> load_feature_table(const std::string& path, const std::vector<std::string>& expected_names = {});

// Column names of a feature TSV header, excluding segid/sysid.
std::vector<std::string> feature_table_names(const std::string& path);

std::string format_feature_table(const std::vector<std::string>& names, const std::vector<FeatureRow>& rows);

}  // namespace mtrank

#endif  // MTRANK_FEATURES_HPP
