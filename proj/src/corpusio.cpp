#include "mtrank/corpusio.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "mtrank/error.hpp"
#include "mtrank/features.hpp"
#include "mtrank/text.hpp"

namespace mtrank {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
  throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

double field_real(const std::string& field, const std::string& source, std::size_t line) {
  try {
    return parse_real(field);
  } catch (const std::invalid_argument&) {
    fail(source, line, "not a number: '" + field + "'");
  }
}

Vector<double> parse_reals(const std::vector<std::string>& fields, std::size_t first, const std::string& source,
                           std::size_t line) {
  Vector<double> v(static_cast<Eigen::Index>(fields.size() - first));
  for (std::size_t i = first; i < fields.size(); ++i) {
    v[static_cast<Eigen::Index>(i - first)] = field_real(fields[i], source, line);
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Rankings

std::vector<RankingRecord> parse_rankings(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(source, 1, "missing header");
  ++lineno;
  if (trim_cr(line) != "langpair,segid,sysid,rank") {
    fail(source, lineno, "expected header 'langpair,segid,sysid,rank'");
  }
  struct Group {
    RankingRecord record;
    std::size_t first_line = 0;
  };
  std::map<std::pair<std::string, std::string>, Group> groups;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 4) fail(source, lineno, "expected 4 fields, got " + std::to_string(f.size()));
    for (const auto& x : f) {
      if (x.empty()) fail(source, lineno, "empty field");
    }
    int rank = 0;
    const double r = field_real(f[3], source, lineno);
    if (r != static_cast<double>(static_cast<int>(r)) || r < 1 || r > 5) {
      fail(source, lineno, "rank must be an integer in 1..5, got '" + f[3] + "'");
    }
    rank = static_cast<int>(r);
    const std::string segid = nfc(f[1]);
    const std::string sysid = nfc(f[2]);
    Group& g = groups[{f[0], segid}];
    if (g.first_line == 0) {
      g.first_line = lineno;
      g.record.langpair = f[0];
      g.record.segid = segid;
    }
    for (const auto& [sys, rk] : g.record.entries) {
      if (sys == sysid) fail(source, lineno, "duplicate system '" + sysid + "' for segment '" + segid + "'");
    }
    g.record.entries.emplace_back(sysid, rank);
  }
  std::vector<RankingRecord> out;
  out.reserve(groups.size());
  std::map<std::string, std::string> segment_langpair;
  for (auto& [key, g] : groups) {
    if (g.record.entries.size() < 2) {
      fail(source, g.first_line, "segment '" + g.record.segid + "' has a single ranked system");
    }
    auto [it, fresh] = segment_langpair.emplace(g.record.segid, g.record.langpair);
    if (!fresh) {
      fail(source, g.first_line,
           "segment '" + g.record.segid + "' appears under language pairs '" + it->second + "' and '" +
               g.record.langpair + "'");
    }
    std::sort(g.record.entries.begin(), g.record.entries.end());
    out.push_back(std::move(g.record));
  }
  return out;
}

std::vector<RankingRecord> load_rankings(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_rankings(in, path);
}

RankingExpansion expand_rankings(std::span<const RankingRecord> records) {
  RankingExpansion out;
  for (const auto& rec : records) {
    const auto& e = rec.entries;
    for (std::size_t i = 0; i < e.size(); ++i) {
      for (std::size_t j = i + 1; j < e.size(); ++j) {
        if (e[i].second == e[j].second) {
          ++out.ties_dropped;
          continue;
        }
        const bool first_wins = e[i].second < e[j].second;
        out.judgments.push_back({rec.langpair, rec.segid, first_wins ? e[i].first : e[j].first,
                                 first_wins ? e[j].first : e[i].first});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segments

SegmentMap parse_segments(std::istream& in, const std::string& source) {
  SegmentMap out;
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> with_reference;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3) fail(source, lineno, "expected segid<TAB>sysid<TAB>text");
    if (f[0].empty() || f[1].empty()) fail(source, lineno, "empty segment or system id");
    const std::string segid = nfc(f[0]);
    const std::string sysid = nfc(f[1]);
    Tokens tokens;
    try {
      tokens = tokenize(f[2]);
    } catch (const DataError& e) {
      fail(source, lineno, e.what());
    }
    SegmentBundle& b = out[segid];
    b.segid = segid;
    if (sysid == kReferenceId) {
      if (!with_reference.insert(segid).second) fail(source, lineno, "second reference for segment '" + segid + "'");
      if (tokens.empty()) fail(source, lineno, "empty reference for segment '" + segid + "'");
      b.reference = std::move(tokens);
    } else if (!b.hypotheses.emplace(sysid, std::move(tokens)).second) {
      fail(source, lineno, "duplicate hypothesis '" + sysid + "' for segment '" + segid + "'");
    }
  }
  for (const auto& [segid, b] : out) {
    if (with_reference.count(segid) == 0) throw DataError(source + ": segment '" + segid + "' has no reference");
  }
  return out;
}

SegmentMap load_segments(const std::string& path) {
  std::ifstream in = open_input(path);
  return parse_segments(in, path);
}

// ---------------------------------------------------------------------------
// Embeddings and sentence vectors

EmbeddingTable<double> load_embeddings(const std::string& path, OovPolicy oov, const std::set<std::string>* keep) {
  std::ifstream in = open_input(path);
  std::vector<std::string> words;
  std::vector<Vector<double>> rows;
  std::set<std::string> seen;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() < 2) fail(path, lineno, "word without vector");
    const auto d = static_cast<Eigen::Index>(f.size() - 1);
    if (dim < 0) dim = d;
    if (d != dim) fail(path, lineno, "expected " + std::to_string(dim) + " values, got " + std::to_string(d));
    std::string word = nfc(f[0]);
    if (!seen.insert(word).second) fail(path, lineno, "duplicate word '" + word + "'");
    Vector<double> v = parse_reals(f, 1, path, lineno);
    if (keep != nullptr && keep->count(word) == 0) continue;
    words.push_back(std::move(word));
    rows.push_back(std::move(v));
  }
  if (dim < 0) throw DataError(path + ": no embeddings");
  Matrix<double> E(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) E.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return EmbeddingTable<double>(std::move(words), std::move(E), oov);
}

std::string sentence_key(const std::string& segid, const std::string& sysid) { return segid + "@" + sysid; }

std::map<std::string, Vector<double>> load_sentence_vectors(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, Vector<double>> out;
  Eigen::Index dim = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) fail(path, lineno, "expected sentence-id<TAB>values");
    const std::string id = nfc(line.substr(0, tab));
    const auto f = split_ws(line.substr(tab + 1));
    if (f.empty()) fail(path, lineno, "no values");
    Vector<double> v = parse_reals(f, 0, path, lineno);
    if (dim < 0) dim = v.size();
    if (v.size() != dim) fail(path, lineno, "expected " + std::to_string(dim) + " values, got " + std::to_string(v.size()));
    if (!out.emplace(id, std::move(v)).second) fail(path, lineno, "duplicate sentence id '" + id + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Instance assembly

std::vector<std::string> SkipFeatureSource::names() const {
  std::vector<std::string> n;
  if (builtin) {
    n.emplace_back("bleu");
    n.emplace_back("ter");
  }
  n.insert(n.end(), external_names.begin(), external_names.end());
  return n;
}

void SkipFeatureSource::add_table(const std::vector<FeatureRow>& rows, const std::vector<std::string>& names) {
  for (const auto& name : names) {
    if (std::find(external_names.begin(), external_names.end(), name) != external_names.end() ||
        name == "bleu" || name == "ter") {
      throw DataError("feature '" + name + "' is defined twice or shadows a built-in feature");
    }
    external_names.push_back(name);
  }
  for (const auto& row : rows) {
    auto& dst = external[{row.segid, row.sysid}];
    for (const auto& name : names) dst[name] = row.values.at(name);
  }
}

Vector<double> SkipFeatureSource::features(const std::string& segid, const std::string& sysid,
                                           const Tokens& hypothesis, const Tokens& reference) const {
  Vector<double> v(static_cast<Eigen::Index>(names().size()));
  Eigen::Index i = 0;
  if (builtin) {
    v[i++] = sentence_bleu(hypothesis, reference);
    v[i++] = ter_lite(hypothesis, reference);
  }
  if (!external_names.empty()) {
    auto it = external.find({segid, sysid});
    if (it == external.end()) throw DataError("no feature row for segment '" + segid + "', system '" + sysid + "'");
    for (const auto& name : external_names) v[i++] = it->second.at(name);
  }
  return v;
}

InputLayout InputSources::layout() const {
  InputLayout l;
  l.synvec_dim = synvecs != nullptr ? synvec_dim : 0;
  l.bow_dim = bow != nullptr ? bow->dim() : 0;
  if (skip != nullptr) l.skip_names = skip->names();
  return l;
}

std::optional<SentenceData> sentence_data(const InputSources& src, const std::string& segid, const std::string& sysid,
                                          std::string* why) {
  if (src.segments == nullptr) throw std::invalid_argument("sentence_data: no segments");
  auto seg = src.segments->find(segid);
  if (seg == src.segments->end()) throw DataError("unknown segment '" + segid + "'");
  const Tokens* tokens = &seg->second.reference;
  if (sysid != kReferenceId) {
    auto hyp = seg->second.hypotheses.find(sysid);
    if (hyp == seg->second.hypotheses.end()) {
      throw DataError("unknown system '" + sysid + "' for segment '" + segid + "'");
    }
    tokens = &hyp->second;
  }
  SentenceData out;
  const auto syn = static_cast<Eigen::Index>(src.synvecs != nullptr ? src.synvec_dim : 0);
  const auto bow = static_cast<Eigen::Index>(src.bow != nullptr ? src.bow->dim() : 0);
  out.fixed = Vector<double>::Zero(syn + bow);
  if (src.synvecs != nullptr) {
    auto it = src.synvecs->find(sentence_key(segid, sysid));
    if (it == src.synvecs->end()) {
      if (why != nullptr) *why = "no sentence vector for '" + sentence_key(segid, sysid) + "'";
      return std::nullopt;
    }
    if (it->second.size() != syn) {
      throw DataError("sentence vector '" + it->first + "' has " + std::to_string(it->second.size()) +
                      " values, expected " + std::to_string(syn));
    }
    out.fixed.head(syn) = it->second;
  }
  if (src.bow != nullptr && !tokens->empty()) {
    out.fixed.tail(bow) = encode_bow(*tokens, *src.bow);
  }
  if (src.tokens != nullptr) out.ids = src.tokens->resolve(*tokens);
  return out;
}

std::vector<PairwiseInput> assemble_instances(std::span<const PairJudgment> judgments, const InputSources& src,
                                              std::vector<std::string>* warnings) {
  if (src.segments == nullptr) throw std::invalid_argument("assemble_instances: no segments");
  std::vector<PairwiseInput> out;
  out.reserve(judgments.size());
  for (const auto& j : judgments) {
    std::string why;
    auto t1 = sentence_data(src, j.segid, j.winner, &why);
    auto t2 = t1 ? sentence_data(src, j.segid, j.loser, &why) : std::nullopt;
    auto r = t2 ? sentence_data(src, j.segid, kReferenceId, &why) : std::nullopt;
    if (!r) {
      if (warnings != nullptr) {
        warnings->push_back("dropping judgment " + j.segid + " " + j.winner + ">" + j.loser + ": " + why);
      }
      continue;
    }
    const SegmentBundle& seg = src.segments->at(j.segid);
    PairwiseInput in;
    in.x_t1 = std::move(t1->fixed);
    in.x_t2 = std::move(t2->fixed);
    in.x_r = std::move(r->fixed);
    in.tok_t1 = std::move(t1->ids);
    in.tok_t2 = std::move(t2->ids);
    in.tok_r = std::move(r->ids);
    if (src.skip != nullptr) {
      in.psi_1r = src.skip->features(j.segid, j.winner, seg.hypotheses.at(j.winner), seg.reference);
      in.psi_2r = src.skip->features(j.segid, j.loser, seg.hypotheses.at(j.loser), seg.reference);
    } else {
      in.psi_1r.resize(0);
      in.psi_2r.resize(0);
    }
    in.label = 1;
    out.push_back(std::move(in));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Score files

std::string format_segment_scores(std::span<const SegmentScore> scores) {
  std::string out;
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof buf, "%.9f", s.score);
    out += s.segid + "\t" + s.sysid + "\t" + buf + "\n";
  }
  return out;
}

std::vector<SegmentScore> load_segment_scores(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<SegmentScore> out;
  std::set<ScoreKey> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, '\t');
    if (f.size() != 3) fail(path, lineno, "expected segid<TAB>sysid<TAB>score");
    SegmentScore s{nfc(f[0]), nfc(f[1]), field_real(f[2], path, lineno)};
    if (!seen.insert({s.segid, s.sysid}).second) {
      fail(path, lineno, "duplicate score for segment '" + s.segid + "', system '" + s.sysid + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<GoldSystemScore> load_gold_systems(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<GoldSystemScore> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) fail(path, 1, "missing header");
  ++lineno;
  if (trim_cr(line) != "langpair,sysid,score") fail(path, lineno, "expected header 'langpair,sysid,score'");
  while (std::getline(in, line)) {
    ++lineno;
    line = trim_cr(line);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) fail(path, lineno, "expected 3 fields, got " + std::to_string(f.size()));
    GoldSystemScore g{f[0], nfc(f[1]), field_real(f[2], path, lineno)};
    if (!seen.insert({g.langpair, g.sysid}).second) fail(path, lineno, "duplicate system '" + g.sysid + "'");
    out.push_back(std::move(g));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw DataError("write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw DataError("cannot replace '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mtrank
