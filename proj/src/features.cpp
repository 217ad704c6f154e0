#include "mtrank/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mtrank/error.hpp"
#include "mtrank/text.hpp"

namespace mtrank {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

double sentence_bleu(const Tokens& hypothesis, const Tokens& reference, std::size_t max_n) {
  if (reference.empty()) throw std::invalid_argument("sentence_bleu: empty reference");
  if (max_n < 1) throw std::invalid_argument("sentence_bleu: max n must be >= 1");
  if (hypothesis.empty()) return 0.0;

  double log_precision = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    const NgramCounts hyp = count_ngrams(hypothesis, n);
    const NgramCounts ref = count_ngrams(reference, n);
    std::size_t matched = 0;
    for (const auto& [gram, c] : hyp) {
      auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    const std::size_t total = hypothesis.size() >= n ? hypothesis.size() - n + 1 : 0;
    log_precision += std::log((static_cast<double>(matched) + 1.0) / (static_cast<double>(total) + 1.0));
  }
  const double ratio = static_cast<double>(reference.size()) / static_cast<double>(hypothesis.size());
  const double log_bp = std::min(0.0, 1.0 - ratio);
  return std::exp(log_precision / static_cast<double>(max_n) + log_bp);
}

std::size_t edit_distance(const Tokens& hypothesis, const Tokens& reference) {
  std::vector<std::size_t> prev(reference.size() + 1), cur(reference.size() + 1);
  for (std::size_t j = 0; j <= reference.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hypothesis.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= reference.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (hypothesis[i - 1] == reference[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[reference.size()];
}

double ter_lite(const Tokens& hypothesis, const Tokens& reference) {
  if (reference.empty()) throw std::invalid_argument("ter_lite: empty reference");
  return static_cast<double>(edit_distance(hypothesis, reference)) / static_cast<double>(reference.size());
}

MinMaxParams fit_minmax(std::span<const Vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("fit_minmax: no training rows");
  const auto dim = rows.front().size();
  MinMaxParams p;
  p.min.assign(static_cast<std::size_t>(dim), 0.0);
  p.max.assign(static_cast<std::size_t>(dim), 0.0);
  for (Eigen::Index j = 0; j < dim; ++j) {
    p.min[static_cast<std::size_t>(j)] = rows.front()[j];
    p.max[static_cast<std::size_t>(j)] = rows.front()[j];
  }
  for (const auto& r : rows) {
    if (r.size() != dim) throw std::invalid_argument("fit_minmax: rows differ in length");
    for (Eigen::Index j = 0; j < dim; ++j) {
      auto& lo = p.min[static_cast<std::size_t>(j)];
      auto& hi = p.max[static_cast<std::size_t>(j)];
      lo = std::min(lo, r[j]);
      hi = std::max(hi, r[j]);
    }
  }
  return p;
}

Vector<double> apply_minmax(const Vector<double>& values, const MinMaxParams& params) {
  if (static_cast<std::size_t>(values.size()) != params.size()) {
    throw std::invalid_argument("apply_minmax: length differs from fitted parameters");
  }
  Vector<double> out(values.size());
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    const double lo = params.min[static_cast<std::size_t>(j)];
    const double hi = params.max[static_cast<std::size_t>(j)];
    out[j] = hi > lo ? 2.0 * (values[j] - lo) / (hi - lo) - 1.0 : 0.0;
  }
  return out;
}

namespace {

std::vector<std::string> read_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header line");
  auto header = split(trim_cr(line), '\t');
  if (header.size() < 2 || header[0] != "segid" || header[1] != "sysid") {
    throw DataError(path + ":1: header must start with 'segid<TAB>sysid'");
  }
  return header;
}

}  // namespace

std::vector<std::string> feature_table_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature table '" + path + "'");
  auto header = read_header(in, path);
  return {header.begin() + 2, header.end()};
}

std::vector<FeatureRow> load_feature_table(const std::string& path, const std::vector<std::string>& expected_names) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature table '" + path + "'");
  const auto header = read_header(in, path);
  const std::vector<std::string> names(header.begin() + 2, header.end());

  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw DataError(path + ":1: empty column name");
    if (!seen.insert(n).second) throw DataError(path + ":1: duplicate column '" + n + "'");
  }
  if (!expected_names.empty()) {
    const std::set<std::string> expected(expected_names.begin(), expected_names.end());
    std::string unexpected, missing;
    for (const auto& n : names) {
      if (expected.count(n) == 0) unexpected += (unexpected.empty() ? "" : ", ") + n;
    }
    for (const auto& n : expected) {
      if (seen.count(n) == 0) missing += (missing.empty() ? "" : ", ") + n;
    }
    if (!unexpected.empty()) throw DataError(path + ":1: unexpected column(s): " + unexpected);
    if (!missing.empty()) throw DataError(path + ":1: missing column(s): " + missing);
  }

  std::vector<FeatureRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> keys;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto fields = split(line, '\t');
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    FeatureRow row{fields[0], fields[1], {}};
    if (row.segid.empty() || row.sysid.empty()) throw DataError(where + ": empty segid or sysid");
    auto [it, fresh] = keys.emplace(std::make_pair(row.segid, row.sysid), lineno);
    if (!fresh) {
      throw DataError(where + ": duplicate key (" + row.segid + ", " + row.sysid + "), first seen on line " +
                      std::to_string(it->second));
    }
    for (std::size_t k = 0; k < names.size(); ++k) {
      try {
        row.values.emplace(names[k], parse_real(fields[k + 2]));
      } catch (const std::invalid_argument& e) {
        throw DataError(where + ": column '" + names[k] + "': " + e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_feature_table(const std::vector<std::string>& names, const std::vector<FeatureRow>& rows) {
  std::ostringstream out;
  out << "segid\tsysid";
  for (const auto& n : names) out << '\t' << n;
  out << '\n';
  char buf[64];
  for (const auto& r : rows) {
    out << r.segid << '\t' << r.sysid;
    for (const auto& n : names) {
      std::snprintf(buf, sizeof buf, "%.9f", r.values.at(n));
      out << '\t' << buf;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace mtrank
