#ifndef MTRANK_CORPUSIO_HPP
#define MTRANK_CORPUSIO_HPP

// File formats and corpus assembly.
//
//   rankings CSV      langpair,segid,sysid,rank          (header required)
//   segments TSV      segid<TAB>sysid<TAB>text           (sysid REF = reference)
//   embeddings        word v1 ... vD                     (GloVe text, no header)
//   sentence vectors  segid@sysid<TAB>v1 ... vD
//   features TSV      segid<TAB>sysid<TAB>name...        (see features.hpp)
//   segment scores    segid<TAB>sysid<TAB>score          (9 decimals)
//   gold systems CSV  langpair,sysid,score               (header required)
//
// Every parser reports malformed input with the file name and line number.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtrank/correlations.hpp"
#include "mtrank/encoders.hpp"
#include "mtrank/pairnet.hpp"
#include "mtrank/scoring.hpp"

namespace mtrank {

inline constexpr const char* kReferenceId = "REF";

struct RankingRecord {
  std::string langpair;
  std::string segid;
  std::vector<std::pair<std::string, int>> entries;  // (sysid, rank 1..5), sorted by sysid
};

// Rows are grouped by (langpair, segid); records come back sorted by that key, so
// row order in the file does not matter.
std::vector<RankingRecord> parse_rankings(std::istream& in, const std::string& source);
std::vector<RankingRecord> load_rankings(const std::string& path);

struct RankingExpansion {
  std::vector<PairJudgment> judgments;
  std::size_t ties_dropped = 0;
};

// One judgment per pair of entries with different ranks (lower rank wins).
RankingExpansion expand_rankings(std::span<const RankingRecord> records);

struct SegmentBundle {
  std::string segid;
  Tokens reference;
  std::map<std::string, Tokens> hypotheses;
};
using SegmentMap = std::map<std::string, SegmentBundle>;

SegmentMap parse_segments(std::istream& in, const std::string& source);
SegmentMap load_segments(const std::string& path);

// GloVe-style text embeddings. When `keep` is given, only those words are kept.
EmbeddingTable<double> load_embeddings(const std::string& path, OovPolicy oov,
                                       const std::set<std::string>* keep = nullptr);

std::string sentence_key(const std::string& segid, const std::string& sysid);
std::map<std::string, Vector<double>> load_sentence_vectors(const std::string& path);

// Skip-arc features per hypothesis: built-in sentence BLEU and TER-lite, followed
// by external columns in `external_names` order.
struct SkipFeatureSource {
  bool builtin = true;
  std::vector<std::string> external_names;
  std::map<ScoreKey, std::map<std::string, double>> external;

  std::vector<std::string> names() const;
  void add_table(const std::vector<FeatureRow>& rows, const std::vector<std::string>& names);
  Vector<double> features(const std::string& segid, const std::string& sysid, const Tokens& hypothesis,
                          const Tokens& reference) const;
};

struct InputSources {
  const SegmentMap* segments = nullptr;
  const std::map<std::string, Vector<double>>* synvecs = nullptr;
  std::size_t synvec_dim = 0;
  const EmbeddingTable<double>* bow = nullptr;     // averaged into the pre-computed vector
  const EmbeddingTable<double>* tokens = nullptr;  // vocabulary of the on-the-fly encoder
  const SkipFeatureSource* skip = nullptr;

  InputLayout layout() const;
};

struct SentenceData {
  Vector<double> fixed;  // [synvec, averaged embeddings]
  TokenIds ids;
};

// Pre-computed vector and token ids for one sentence (sysid REF = reference).
// Returns nullopt, with a reason in `why`, when its sentence vector is missing.
// Unknown segments or systems are DataErrors.
std::optional<SentenceData> sentence_data(const InputSources& src, const std::string& segid, const std::string& sysid,
                                          std::string* why = nullptr);

// One labeled instance per judgment, winner in slot t1 (y = 1). Judgments whose
// sentence vectors are missing are dropped with a warning.
std::vector<PairwiseInput> assemble_instances(std::span<const PairJudgment> judgments, const InputSources& src,
                                              std::vector<std::string>* warnings = nullptr);

std::string format_segment_scores(std::span<const SegmentScore> scores);
std::vector<SegmentScore> load_segment_scores(const std::string& path);

struct GoldSystemScore {
  std::string langpair;
  std::string sysid;
  double score = 0.0;
};
std::vector<GoldSystemScore> load_gold_systems(const std::string& path);

// Writes to a temporary file in the same directory, then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// Versioned text serialization of a trained model.
inline constexpr int kModelFormatVersion = 1;
std::string serialize_model(const ModelArtifact& artifact);
ModelArtifact parse_model(const std::string& text, const std::string& source = "<model>");
void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace mtrank

#endif  // MTRANK_CORPUSIO_HPP
