#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtrank/corpusio.hpp"
#include "mtrank/correlations.hpp"
#include "mtrank/error.hpp"
#include "mtrank/features.hpp"
#include "mtrank/pairnet.hpp"
#include "mtrank/scoring.hpp"

namespace mtrank::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file_atomic(path, content);
  }
}

// ---------------------------------------------------------------------------
// Flags

struct DataFlags {
  std::string rankings;
  std::string segments;
  std::string embeddings;
  std::string synvecs;
  std::vector<std::string> features;
  bool no_builtin = false;
};

struct TrainFlags {
  DataFlags data;
  std::string dev_rankings;
  std::string encoder = "bow";
  std::string finetune = "frozen";
  double mu = 1e-3;
  double dropout = 0.0;
  std::uint64_t seed = 1;
  std::size_t epochs = 10000;
  double lr = 0.01;
  std::size_t batch = 30;
  double l2 = 1e-4;
  std::size_t hidden = 4;
  std::size_t patience = 0;
  std::size_t filters = 100;
  std::size_t window = 3;
  std::size_t pool = 3;
  std::size_t lstm_hidden = 50;
  std::string oov = "zero";
  std::string tau = "wmt12";
  bool skip_only = false;
  std::string out;
  std::string log;
};

struct ScoreFlags {
  DataFlags data;
  std::string model;
  std::string mode = "absolute";
  std::string empty = "zero";
  std::string out = "-";
};

struct EvalFlags {
  std::string scores;
  std::string rankings;
  std::string gold_systems;
  std::string tau = "wmt12";
  std::string agg = "mean";
  std::string out = "-";
};

struct FeatureFlags {
  DataFlags data;
  std::string out = "-";
};

struct InspectFlags {
  std::string model;
};

// ---------------------------------------------------------------------------
// Corpus loading

struct Corpus {
  SegmentMap segments;
  std::optional<std::map<std::string, Vector<double>>> synvecs;
  std::size_t synvec_dim = 0;
  std::optional<EmbeddingTable<double>> bow;     // frozen, averaged into the pre-computed vector
  std::optional<EmbeddingTable<double>> tokens;  // vocabulary of the on-the-fly encoder
  SkipFeatureSource skip;

  InputSources sources() const {
    InputSources s;
    s.segments = &segments;
    if (synvecs) {
      s.synvecs = &*synvecs;
      s.synvec_dim = synvec_dim;
    }
    if (bow) s.bow = &*bow;
    if (tokens) s.tokens = &*tokens;
    s.skip = &skip;
    return s;
  }
};

std::set<std::string> vocabulary(const SegmentMap& segments) {
  std::set<std::string> words;
  for (const auto& [id, seg] : segments) {
    words.insert(seg.reference.begin(), seg.reference.end());
    for (const auto& [sys, hyp] : seg.hypotheses) words.insert(hyp.begin(), hyp.end());
  }
  return words;
}

void load_synvecs(Corpus& c, const std::string& path) {
  c.synvecs = load_sentence_vectors(path);
  if (c.synvecs->empty()) throw DataError(path + ": no sentence vectors");
  c.synvec_dim = static_cast<std::size_t>(c.synvecs->begin()->second.size());
}

void load_skip(Corpus& c, const DataFlags& f) {
  c.skip.builtin = !f.no_builtin;
  for (const auto& path : f.features) {
    const auto names = feature_table_names(path);
    c.skip.add_table(load_feature_table(path, names), names);
  }
}

OovPolicy parse_oov(const std::string& s) {
  if (s == "zero") return OovPolicy::zero;
  if (s == "mean") return OovPolicy::mean;
  return OovPolicy::error;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
  ModelConfig cfg;
  cfg.hidden = f.hidden;
  cfg.skip_only = f.skip_only;
  cfg.encoder.filters = f.filters;
  cfg.encoder.window = f.window;
  cfg.encoder.pool = f.pool;
  cfg.encoder.lstm_hidden = f.lstm_hidden;
  cfg.encoder.dropout = f.dropout;
  if (f.finetune == "frozen") cfg.finetune = FineTuneMode::frozen();
  else if (f.finetune == "moderate") cfg.finetune = FineTuneMode::moderate(f.mu);
  else cfg.finetune = FineTuneMode::full();
  OptimizerConfig opt;
  opt.learning_rate = f.lr;
  opt.l2 = f.l2;
  opt.batch_size = f.batch;
  opt.max_epochs = f.epochs;
  opt.seed = f.seed;
  opt.patience = f.patience;
  try {
    opt.validate();
    cfg.encoder.validate();
    cfg.finetune.validate();
    if (!(f.dropout >= 0.0 && f.dropout < 1.0)) throw std::invalid_argument("dropout must be in [0, 1)");
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const bool tuned = cfg.finetune.kind != FineTuneMode::Kind::frozen;
  const bool wants_embeddings = f.encoder != "none" && !f.skip_only;
  if (wants_embeddings && f.data.embeddings.empty()) {
    throw UsageError("--encoder " + f.encoder + " needs --embeddings (or use --encoder none)");
  }
  if (!wants_embeddings && tuned) throw UsageError("--finetune " + f.finetune + " needs an embedding encoder");
  const TiePolicy dev_policy = parse_tie_policy(f.tau);

  Corpus corpus;
  corpus.segments = load_segments(f.data.segments);
  const auto train_records = load_rankings(f.data.rankings);
  std::vector<RankingRecord> dev_records;
  if (!f.dev_rankings.empty()) {
    dev_records = load_rankings(f.dev_rankings);
  } else {
    err << "warning: no --dev-rankings; epochs are selected on the training judgments\n";
    dev_records = train_records;
  }
  if (!f.data.synvecs.empty()) load_synvecs(corpus, f.data.synvecs);
  if (wants_embeddings) {
    const auto words = vocabulary(corpus.segments);
    EmbeddingTable<double> table = load_embeddings(f.data.embeddings, parse_oov(f.oov), &words);
    if (f.encoder == "bow" && !tuned) {
      corpus.bow = std::move(table);
    } else {
      if (f.encoder == "bow") cfg.encoder.kind = EncoderConfig::Kind::bow;
      if (f.encoder == "cnn") cfg.encoder.kind = EncoderConfig::Kind::cnn;
      if (f.encoder == "lstm" || f.encoder == "bilstm") cfg.encoder.kind = EncoderConfig::Kind::lstm;
      cfg.encoder.bidirectional = f.encoder == "bilstm";
      cfg.embedding_dim = table.dim();
      cfg.vocab_size = table.vocab_size();
      corpus.tokens = std::move(table);
    }
  }
  load_skip(corpus, f.data);

  const InputSources src = corpus.sources();
  const InputLayout layout = src.layout();
  cfg.static_dim = layout.synvec_dim + layout.bow_dim;
  cfg.skip_dim = layout.skip_names.size();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::vector<std::string> warnings;
  const auto train_j = expand_rankings(train_records);
  const auto dev_j = expand_rankings(dev_records);
  const auto train_set = assemble_instances(train_j.judgments, src, &warnings);
  const auto dev_set = assemble_instances(dev_j.judgments, src, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";

  std::ostringstream log;
  const auto conf = [&](const std::string& k, const std::string& v) { log << "# " << k << "\t" << v << "\n"; };
  conf("rankings", f.data.rankings);
  conf("dev_rankings", f.dev_rankings.empty() ? "(training judgments)" : f.dev_rankings);
  conf("segments", f.data.segments);
  conf("embeddings", f.data.embeddings);
  conf("synvecs", f.data.synvecs);
  {
    std::string joined;
    for (const auto& p : f.data.features) joined += (joined.empty() ? "" : ",") + p;
    conf("features", joined);
  }
  conf("skip_features", [&] {
    std::string joined;
    for (const auto& n : layout.skip_names) joined += (joined.empty() ? "" : ",") + n;
    return joined;
  }());
  conf("encoder", f.encoder);
  conf("finetune", f.finetune);
  conf("mu", fmt("%g", f.mu));
  conf("dropout", fmt("%g", f.dropout));
  conf("seed", std::to_string(f.seed));
  conf("epochs", std::to_string(f.epochs));
  conf("lr", fmt("%g", f.lr));
  conf("batch", std::to_string(f.batch));
  conf("l2", fmt("%g", f.l2));
  conf("hidden", std::to_string(f.hidden));
  conf("patience", std::to_string(f.patience));
  conf("filters", std::to_string(f.filters));
  conf("window", std::to_string(f.window));
  conf("pool", std::to_string(f.pool));
  conf("lstm_hidden", std::to_string(f.lstm_hidden));
  conf("oov", f.oov);
  conf("tau", f.tau);
  conf("skip_only", f.skip_only ? "1" : "0");
  conf("train_judgments", std::to_string(train_set.size()));
  conf("train_ties_dropped", std::to_string(train_j.ties_dropped));
  conf("dev_judgments", std::to_string(dev_set.size()));
  log << "epoch\tloss\tdev_tau\n";

  TrainOptions options;
  options.model = cfg;
  options.optimizer = opt;
  options.dev_policy = dev_policy;
  options.layout = layout;
  options.embeddings = corpus.tokens ? &*corpus.tokens : nullptr;
  const TrainResult result = train(train_set, dev_set, options, [&](const EpochRecord& r) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu\t%.9f\t%.6f\n", r.epoch, r.loss, r.dev_tau);
    log << buf;
  });
  conf("selected_epoch", std::to_string(result.artifact.selected_epoch));
  conf("best_dev_tau", fmt("%.6f", result.artifact.best_dev_tau));

  save_model(result.artifact, f.out);
  write_file_atomic(f.log.empty() ? f.out + ".log" : f.log, log.str());
  out << "selected epoch " << result.artifact.selected_epoch << " of " << result.history.size() << ", dev tau "
      << fmt("%.4f", result.artifact.best_dev_tau) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// score

struct ScoringCorpus {
  Corpus corpus;
  bool needs_tokens = false;
};

ScoringCorpus load_for_model(const ModelArtifact& art, const DataFlags& f) {
  ScoringCorpus sc;
  Corpus& c = sc.corpus;
  c.segments = load_segments(f.segments);
  const InputLayout& layout = art.layout;
  if (layout.synvec_dim > 0) {
    if (f.synvecs.empty()) throw UsageError("model was trained with sentence vectors; pass --synvecs");
    load_synvecs(c, f.synvecs);
    if (c.synvec_dim != layout.synvec_dim) {
      throw DataError(f.synvecs + ": vectors have " + std::to_string(c.synvec_dim) + " values, model expects " +
                      std::to_string(layout.synvec_dim));
    }
  }
  if (layout.bow_dim > 0) {
    if (f.embeddings.empty()) throw UsageError("model averages frozen embeddings; pass --embeddings");
    const auto words = vocabulary(c.segments);
    c.bow = load_embeddings(f.embeddings, art.oov, &words);
    if (c.bow->dim() != layout.bow_dim) {
      throw DataError(f.embeddings + ": dimension " + std::to_string(c.bow->dim()) + ", model expects " +
                      std::to_string(layout.bow_dim));
    }
  }
  const auto& names = layout.skip_names;
  c.skip.builtin = names.size() >= 2 && names[0] == "bleu" && names[1] == "ter";
  for (const auto& path : f.features) {
    const auto file_names = feature_table_names(path);
    c.skip.add_table(load_feature_table(path, file_names), file_names);
  }
  if (c.skip.names() != names) {
    std::string want;
    for (const auto& n : names) want += (want.empty() ? "" : ",") + n;
    throw DataError("skip features do not match the model (expected " + want + ")");
  }
  if (art.model.config().uses_tokens()) {
    c.tokens = EmbeddingTable<double>(art.vocab, art.model.params().value("emb.E"), art.oov);
  }
  return sc;
}

int cmd_score(const ScoreFlags& f, std::ostream& out) {
  const ModelArtifact art = load_model(f.model);
  const EmptyStrategy strategy = parse_empty_strategy(f.empty);
  ScoringCorpus sc = load_for_model(art, f.data);
  const InputSources src = sc.corpus.sources();
  const auto need = [&](const std::string& segid, const std::string& sysid) {
    std::string why;
    auto d = sentence_data(src, segid, sysid, &why);
    if (!d) throw DataError(why);
    return *d;
  };
  const auto psi = [&](const SegmentBundle& seg, const std::string& sysid) {
    return sc.corpus.skip.features(seg.segid, sysid, seg.hypotheses.at(sysid), seg.reference);
  };

  std::string text;
  if (f.mode == "absolute") {
    const EmptyVectorSpec empty = empty_spec(art, strategy);
    std::vector<SegmentScore> scores;
    for (const auto& [segid, seg] : sc.corpus.segments) {
      const SentenceData ref = need(segid, kReferenceId);
      for (const auto& [sysid, hyp] : seg.hypotheses) {
        SentenceData t = need(segid, sysid);
        ScoringInput in{std::move(t.fixed), std::move(t.ids), psi(seg, sysid), ref.fixed, ref.ids};
        scores.push_back({segid, sysid, absolute_score(art, in, empty)});
      }
    }
    text = format_segment_scores(scores);
  } else {
    for (const auto& [segid, seg] : sc.corpus.segments) {
      const SentenceData ref = need(segid, kReferenceId);
      std::map<std::string, SentenceData> hyps;
      for (const auto& [sysid, hyp] : seg.hypotheses) hyps.emplace(sysid, need(segid, sysid));
      for (const auto& [a, da] : hyps) {
        for (const auto& [b, db] : hyps) {
          if (a == b) continue;
          PairwiseInput raw;
          raw.x_t1 = da.fixed;
          raw.x_t2 = db.fixed;
          raw.x_r = ref.fixed;
          raw.tok_t1 = da.ids;
          raw.tok_t2 = db.ids;
          raw.tok_r = ref.ids;
          raw.psi_1r = psi(seg, a);
          raw.psi_2r = psi(seg, b);
          text += segid + "\t" + a + "\t" + b + "\t" + fmt("%.9f", pairwise_probability(art, raw)) + "\n";
        }
      }
    }
  }
  emit(f.out, text, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

std::string cell(double v) { return fmt("%.4f", v); }

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string padr(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

int cmd_eval(const EvalFlags& f, std::ostream& out) {
  const TiePolicy policy = parse_tie_policy(f.tau);
  const Aggregation agg = parse_aggregation(f.agg);
  SegmentScoreMap scores;
  for (const auto& s : load_segment_scores(f.scores)) scores[{s.segid, s.sysid}] = s.score;
  const auto records = load_rankings(f.rankings);
  const auto expansion = expand_rankings(records);

  std::map<std::string, std::vector<PairJudgment>> by_lang;
  for (const auto& j : expansion.judgments) by_lang[j.langpair].push_back(j);
  if (by_lang.empty()) throw DataError(f.rankings + ": no non-tied judgments");

  std::ostringstream rep;
  rep << "Segment-level Kendall tau (" << to_string(policy) << ")\n";
  rep << padr("langpair", 12) << pad("tau", 9) << pad("Con", 9) << pad("Dis", 9) << pad("TieM", 9) << "\n";
  std::vector<double> taus;
  for (const auto& [lang, js] : by_lang) {
    const TauCounts c = count_agreements(js, scores);
    std::string tau_cell = "n/a";
    try {
      const double t = tau_from_counts(c, policy);
      taus.push_back(t);
      tau_cell = cell(t);
    } catch (const DataError&) {
    }
    rep << padr(lang, 12) << pad(tau_cell, 9) << pad(std::to_string(c.concordant), 9)
        << pad(std::to_string(c.discordant), 9) << pad(std::to_string(c.metric_ties), 9) << "\n";
  }
  const double macro =
      taus.empty() ? 0.0 : std::accumulate(taus.begin(), taus.end(), 0.0) / static_cast<double>(taus.size());
  rep << padr("macro", 12) << pad(taus.empty() ? "n/a" : cell(macro), 9) << "\n";

  if (!f.gold_systems.empty()) {
    std::map<std::string, std::map<std::string, double>> gold;
    for (const auto& g : load_gold_systems(f.gold_systems)) gold[g.langpair][g.sysid] = g.score;
    std::map<std::string, std::set<std::string>> lang_segments;
    for (const auto& r : records) lang_segments[r.langpair].insert(r.segid);

    rep << "\nSystem-level correlation (" << to_string(agg) << " of segment scores)\n";
    rep << padr("langpair", 12) << pad("systems", 9) << pad("rho", 9) << pad("r", 9) << "\n";
    std::vector<double> rhos, rs;
    for (const auto& [lang, human] : gold) {
      auto segs = lang_segments.find(lang);
      if (segs == lang_segments.end()) throw DataError("no rankings for language pair '" + lang + "'");
      std::map<std::string, double> metric;
      for (const auto& [sys, h] : human) {
        std::vector<double> seg_scores;
        for (const auto& segid : segs->second) {
          auto it = scores.find({segid, sys});
          if (it != scores.end()) seg_scores.push_back(it->second);
        }
        if (seg_scores.empty()) throw DataError("no segment scores for system '" + sys + "' (" + lang + ")");
        metric[sys] = system_score(seg_scores, agg);
      }
      std::string rho_cell = "n/a", r_cell = "n/a";
      if (human.size() >= 2) {
        const auto hr = ranks_from_scores(human, true);
        const auto mr = ranks_from_scores(metric, true);
        std::vector<double> hv, mv, hs, ms;
        bool ties = false;
        for (const auto& [sys, rank] : hr) {
          hv.push_back(rank);
          mv.push_back(mr.at(sys));
          hs.push_back(human.at(sys));
          ms.push_back(metric.at(sys));
          ties = ties || rank != static_cast<double>(static_cast<long>(rank)) ||
                 mr.at(sys) != static_cast<double>(static_cast<long>(mr.at(sys)));
        }
        try {
          const double rho = spearman_rho(hv, mv, ties);
          rhos.push_back(rho);
          rho_cell = cell(rho);
        } catch (const std::invalid_argument&) {
        }
        try {
          const double r = pearson_r(hs, ms);
          rs.push_back(r);
          r_cell = cell(r);
        } catch (const std::invalid_argument&) {
        }
      }
      rep << padr(lang, 12) << pad(std::to_string(human.size()), 9) << pad(rho_cell, 9) << pad(r_cell, 9) << "\n";
    }
    const auto mean_cell = [](const std::vector<double>& v) {
      return v.empty() ? std::string("n/a")
                       : cell(std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()));
    };
    rep << padr("macro", 12) << pad("", 9) << pad(mean_cell(rhos), 9) << pad(mean_cell(rs), 9) << "\n";
  }
  emit(f.out, rep.str(), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// features

int cmd_features(const FeatureFlags& f, std::ostream& out) {
  Corpus c;
  c.segments = load_segments(f.data.segments);
  load_skip(c, f.data);
  const auto names = c.skip.names();
  if (names.empty()) throw UsageError("no features to write (built-in features disabled, no --features)");
  std::vector<FeatureRow> rows;
  for (const auto& [segid, seg] : c.segments) {
    for (const auto& [sysid, hyp] : seg.hypotheses) {
      const Vector<double> v = c.skip.features(segid, sysid, hyp, seg.reference);
      FeatureRow row{segid, sysid, {}};
      for (std::size_t i = 0; i < names.size(); ++i) row.values[names[i]] = v[static_cast<Eigen::Index>(i)];
      rows.push_back(std::move(row));
    }
  }
  emit(f.out, format_feature_table(names, rows), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// inspect

int cmd_inspect(const InspectFlags& f, std::ostream& out) {
  const ModelArtifact art = load_model(f.model);
  const ModelConfig& cfg = art.model.config();
  const char* enc = "none";
  switch (cfg.encoder.kind) {
    case EncoderConfig::Kind::none: enc = "none"; break;
    case EncoderConfig::Kind::bow: enc = "bow"; break;
    case EncoderConfig::Kind::cnn: enc = "cnn"; break;
    case EncoderConfig::Kind::lstm: enc = cfg.encoder.bidirectional ? "bilstm" : "lstm"; break;
  }
  out << "format version  " << kModelFormatVersion << "\n";
  out << "hidden          " << (cfg.skip_only ? std::string("(skip features only)") : std::to_string(cfg.hidden))
      << "\n";
  out << "sentence vector " << cfg.sentence_dim() << " (synvec " << art.layout.synvec_dim << ", averaged embeddings "
      << art.layout.bow_dim << ", encoder " << enc << " " << cfg.encoder_dim() << ")\n";
  out << "skip features   " << cfg.skip_dim;
  for (const auto& n : art.layout.skip_names) out << " " << n;
  out << "\n";
  out << "vocabulary      " << art.vocab.size() << "\n";
  out << "mean empty      " << (art.mean_translation && art.mean_skip ? "stored" : "absent") << "\n";
  out << "selected epoch  " << art.selected_epoch << "\n";
  out << "best dev tau    " << fmt("%.4f", art.best_dev_tau) << " (" << to_string(art.dev_policy) << ")\n";
  out << "parameters      " << art.model.params().entry_count() << "\n";
  for (const auto& [name, p] : art.model.params()) {
    out << "  " << padr(name, 16) << p.value.rows() << "x" << p.value.cols() << (p.trainable ? "" : " (frozen)")
        << "\n";
  }
  return kOk;
}

void add_data_flags(CLI::App* app, DataFlags& f, bool rankings) {
  if (rankings) app->add_option("--rankings", f.rankings, "Human rankings CSV (langpair,segid,sysid,rank)")->required();
  app->add_option("--segments", f.segments, "Segments TSV (segid, sysid, text; sysid REF = reference)")->required();
  app->add_option("--embeddings", f.embeddings, "Word embeddings, GloVe text format");
  app->add_option("--synvecs", f.synvecs, "Per-sentence vectors (segid@sysid<TAB>values)");
  app->add_option("--features", f.features, "Extra skip-feature TSV files (repeatable)");
  app->add_flag("--no-builtin", f.no_builtin, "Disable the built-in BLEU and TER skip features (default: off)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pairwise neural MT evaluation: train, score, evaluate.", "mtrank"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "Train a pairwise model on human rankings");
  add_data_flags(train_cmd, tf.data, true);
  train_cmd->add_option("--dev-rankings", tf.dev_rankings, "Rankings used for epoch selection");
  train_cmd->add_option("--encoder", tf.encoder, "Sentence encoder")
      ->check(CLI::IsMember({"none", "bow", "cnn", "lstm", "bilstm"}));
  train_cmd->add_option("--finetune", tf.finetune, "Embedding fine-tuning regime")
      ->check(CLI::IsMember({"frozen", "moderate", "full"}));
  train_cmd->add_option("--mu", tf.mu, "Penalty weight of moderate fine-tuning");
  train_cmd->add_option("--dropout", tf.dropout, "Encoder dropout rate");
  train_cmd->add_option("--seed", tf.seed, "Random seed");
  train_cmd->add_option("--epochs", tf.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", tf.lr, "Adagrad learning rate");
  train_cmd->add_option("--batch", tf.batch, "Mini-batch size");
  train_cmd->add_option("--l2", tf.l2, "L2 decay");
  train_cmd->add_option("--hidden", tf.hidden, "Units per hidden group");
  train_cmd->add_option("--patience", tf.patience, "Stop after this many epochs without dev improvement (0 = off)");
  train_cmd->add_option("--filters", tf.filters, "CNN feature maps");
  train_cmd->add_option("--window", tf.window, "CNN filter width");
  train_cmd->add_option("--pool", tf.pool, "CNN max-pool width");
  train_cmd->add_option("--lstm-hidden", tf.lstm_hidden, "LSTM state size per direction");
  train_cmd->add_option("--oov", tf.oov, "Out-of-vocabulary words")->check(CLI::IsMember({"zero", "mean", "error"}));
  train_cmd->add_option("--tau", tf.tau, "Dev tau tie policy")->check(CLI::IsMember({"wmt12", "ignored", "wmt14"}));
  train_cmd->add_flag("--skip-only", tf.skip_only, "Logistic regression on the skip features only (default: off)");
  train_cmd->add_option("--out", tf.out, "Model file to write")->required();
  train_cmd->add_option("--log", tf.log, "Training log (default: <out>.log)");

  ScoreFlags sf;
  auto* score_cmd = app.add_subcommand("score", "Score hypotheses with a trained model");
  add_data_flags(score_cmd, sf.data, false);
  score_cmd->add_option("--model", sf.model, "Model file")->required();
  score_cmd->add_option("--mode", sf.mode, "absolute: one score per hypothesis; pairwise: every ordered pair")
      ->check(CLI::IsMember({"absolute", "pairwise"}));
  score_cmd->add_option("--empty", sf.empty, "Empty translation placeholder")->check(CLI::IsMember({"zero", "mean"}));
  score_cmd->add_option("--out", sf.out, "Output TSV ('-' = stdout)");

  EvalFlags ef;
  auto* eval_cmd = app.add_subcommand("eval", "Correlate segment scores with human judgments");
  eval_cmd->add_option("--scores", ef.scores, "Segment scores TSV")->required();
  eval_cmd->add_option("--rankings", ef.rankings, "Gold rankings CSV")->required();
  eval_cmd->add_option("--gold-systems", ef.gold_systems, "Gold system scores CSV (langpair,sysid,score)");
  eval_cmd->add_option("--tau", ef.tau, "Kendall tau tie policy")->check(CLI::IsMember({"wmt12", "ignored", "wmt14"}));
  eval_cmd->add_option("--agg", ef.agg, "System score aggregation")->check(CLI::IsMember({"mean", "sign"}));
  eval_cmd->add_option("--out", ef.out, "Report file ('-' = stdout)");

  FeatureFlags ff;
  auto* feat_cmd = app.add_subcommand("features", "Compute skip features for every hypothesis");
  feat_cmd->add_option("--segments", ff.data.segments, "Segments TSV")->required();
  feat_cmd->add_option("--features", ff.data.features, "Extra feature TSV files to merge (repeatable)");
  feat_cmd->add_flag("--no-builtin", ff.data.no_builtin, "Disable the built-in BLEU and TER features (default: off)");
  feat_cmd->add_option("--out", ff.out, "Feature TSV ('-' = stdout)");

  InspectFlags inf;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a model file");
  inspect_cmd->add_option("--model", inf.model, "Model file")->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    if (*train_cmd) return cmd_train(tf, out, err);
    if (*score_cmd) return cmd_score(sf, out);
    if (*eval_cmd) return cmd_eval(ef, out);
    if (*feat_cmd) return cmd_features(ff, out);
    if (*inspect_cmd) return cmd_inspect(inf, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace mtrank::cli
