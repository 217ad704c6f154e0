#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mtrank/error.hpp"
#include "mtrank/features.hpp"
#include "mtrank/text.hpp"
#include "oracles.hpp"

using namespace mtrank;
using namespace mtrank::testing;

namespace {

Tokens words(const std::string& s) { return split_ws(s); }

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// BLEU

TEST(SentenceBleu, IdentityIsOne) {
  for (const char* s : {"the cat sat on the mat", "a b c d", "one two three four five six seven"}) {
    EXPECT_DOUBLE_EQ(sentence_bleu(words(s), words(s)), 1.0) << s;
  }
}

TEST(SentenceBleu, ZeroOverlapHandValue) {
  // Precisions (0+1)/(5+1), (0+1)/(4+1), (0+1)/(3+1), (0+1)/(2+1); BP = 1.
  const double expected = std::pow((1.0 / 6) * (1.0 / 5) * (1.0 / 4) * (1.0 / 3), 0.25);
  EXPECT_NEAR(sentence_bleu(words("a b c d e"), words("f g h i j")), expected, 1e-15);
}

TEST(SentenceBleu, Asymmetric) {
  // Short hypothesis: every precision is 1, BP = exp(1 - 6/3).
  EXPECT_NEAR(sentence_bleu(words("a b c"), words("a b c d e f")), std::exp(-1.0), 1e-15);
  // Long hypothesis: 4/7, 3/6, 2/5, 1/4 and no brevity penalty.
  EXPECT_NEAR(sentence_bleu(words("a b c d e f"), words("a b c")),
              std::pow((4.0 / 7) * (3.0 / 6) * (2.0 / 5) * (1.0 / 4), 0.25), 1e-15);
}

TEST(SentenceBleu, ClippedCounts) {
  // "the" appears once in the reference, so only one of four unigram matches counts.
  const double p1 = (1.0 + 1) / (4 + 1);
  const double p2 = 1.0 / 4, p3 = 1.0 / 3, p4 = 1.0 / 2;
  EXPECT_NEAR(sentence_bleu(words("the the the the"), words("the cat is here")),
              std::pow(p1 * p2 * p3 * p4, 0.25), 1e-15);
}

TEST(SentenceBleu, EdgeCases) {
  EXPECT_EQ(sentence_bleu({}, words("a b")), 0.0);
  EXPECT_THROW(sentence_bleu(words("a"), {}), std::invalid_argument);
  EXPECT_THROW(sentence_bleu(words("a"), words("a"), 0), std::invalid_argument);
}

TEST(SentenceBleu, StaysInUnitInterval) {
  Rng rng(9);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  std::uniform_int_distribution<std::size_t> len(0, 9), pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    Tokens h(len(rng)), r(len(rng) + 1);
    for (auto& w : h) w = alphabet[pick(rng)];
    for (auto& w : r) w = alphabet[pick(rng)];
    const double b = sentence_bleu(h, r);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
}

// ---------------------------------------------------------------------------
// TER-lite

TEST(TerLite, Examples) {
  EXPECT_EQ(ter_lite(words("a b c"), words("a b c")), 0.0);
  EXPECT_EQ(ter_lite({}, words("a b c d")), 1.0);
  EXPECT_DOUBLE_EQ(ter_lite(words("a b c"), words("a x c")), 1.0 / 3.0);
  EXPECT_EQ(brute_edit_distance(words("a b c"), words("a x c")), 1u);
  EXPECT_THROW(ter_lite(words("a"), {}), std::invalid_argument);
}

TEST(TerLite, NoShifts) {
  // A block move costs edits here; full TER would count one shift.
  EXPECT_DOUBLE_EQ(ter_lite(words("c d a b"), words("a b c d")), 1.0);
}

TEST(TerLite, MatchesRecursiveOracleOnSmallSweep) {
  const auto all = all_sentences({"x", "y", "z"}, 4);
  for (const auto& h : all) {
    for (const auto& r : all) {
      ASSERT_EQ(edit_distance(h, r), brute_edit_distance(h, r));
      if (!r.empty()) {
        ASSERT_EQ(ter_lite(h, r), static_cast<double>(brute_edit_distance(h, r)) / static_cast<double>(r.size()));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Min-max normalization

TEST(MinMax, WorkedColumn) {
  const std::vector<Vector<double>> train{vec({2.0}), vec({6.0})};
  const auto p = fit_minmax(train);
  EXPECT_EQ(apply_minmax(vec({4.0}), p)[0], 0.0);
  EXPECT_EQ(apply_minmax(vec({2.0}), p)[0], -1.0);
  EXPECT_EQ(apply_minmax(vec({6.0}), p)[0], 1.0);
  EXPECT_EQ(apply_minmax(vec({8.0}), p)[0], 2.0);
}

TEST(MinMax, ConstantColumnMapsToZero) {
  const std::vector<Vector<double>> train{vec({3.0, 1.0}), vec({3.0, 2.0})};
  const auto p = fit_minmax(train);
  EXPECT_EQ(apply_minmax(vec({3.0, 1.5}), p), vec({0.0, 0.0}));
  EXPECT_EQ(apply_minmax(vec({-7.0, 1.5}), p)[0], 0.0);
}

TEST(MinMax, TrainingValuesStayInRange) {
  Rng rng(10);
  std::uniform_real_distribution<double> u(-50.0, 80.0);
  std::vector<Vector<double>> train;
  for (int i = 0; i < 200; ++i) train.push_back(vec({u(rng), u(rng) * 1e-6, u(rng) * 1e6}));
  const auto p = fit_minmax(train);
  for (std::size_t j = 0; j < p.size(); ++j) EXPECT_LE(p.min[j], p.max[j]);
  for (const auto& row : train) {
    const auto n = apply_minmax(row, p);
    EXPECT_GE(n.minCoeff(), -1.0);
    EXPECT_LE(n.maxCoeff(), 1.0);
  }
}

TEST(MinMax, Errors) {
  EXPECT_THROW(fit_minmax(std::vector<Vector<double>>{}), std::invalid_argument);
  EXPECT_THROW(fit_minmax(std::vector<Vector<double>>{vec({1.0}), vec({1.0, 2.0})}), std::invalid_argument);
  const auto p = fit_minmax(std::vector<Vector<double>>{vec({1.0})});
  EXPECT_THROW(apply_minmax(vec({1.0, 2.0}), p), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Feature tables

TEST(FeatureTable, WellFormed) {
  TempDir dir("features");
  const auto path = dir.write("f.tsv",
                              "segid\tsysid\tnist\tmeteor\n"
                              "1\tA\t3.5\t0.25\n"
                              "1\tB\t-1e-3\t0\r\n"
                              "2\tA\t7\t1\n");
  const auto rows = load_feature_table(path, {"meteor", "nist"});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].sysid, "B");
  EXPECT_EQ(rows[1].values.at("nist"), -1e-3);
  EXPECT_EQ(rows[2].values.at("meteor"), 1.0);
  EXPECT_EQ(feature_table_names(path), (std::vector<std::string>{"nist", "meteor"}));
  EXPECT_EQ(format_feature_table({"nist"}, {rows[0]}), "segid\tsysid\tnist\n1\tA\t3.500000000\n");
}

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(FeatureTable, DuplicateKeyNamesTheLine) {
  TempDir dir("features");
  const auto path = dir.write("f.tsv", "segid\tsysid\tm\n1\tA\t1\n1\tB\t2\n1\tA\t3\n");
  const std::string msg = error_of([&] { load_feature_table(path); });
  EXPECT_NE(msg.find(":4:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(FeatureTable, UnexpectedColumnListed) {
  TempDir dir("features");
  const auto path = dir.write("f.tsv", "segid\tsysid\tm\tbogus\n1\tA\t1\t2\n");
  const std::string msg = error_of([&] { load_feature_table(path, {"m"}); });
  EXPECT_NE(msg.find("bogus"), std::string::npos) << msg;
  const std::string missing = error_of([&] { load_feature_table(path, {"m", "bogus", "other"}); });
  EXPECT_NE(missing.find("other"), std::string::npos) << missing;
}

TEST(FeatureTable, BadCellsRejectedWithRowNumber) {
  TempDir dir("features");
  for (const char* cell : {"abc", "", "1.5x", "nan", "inf"}) {
    const auto path = dir.write("f.tsv", std::string("segid\tsysid\tm\n1\tA\t1\n2\tA\t") + cell + "\n");
    const std::string msg = error_of([&] { load_feature_table(path); });
    EXPECT_NE(msg.find(":3:"), std::string::npos) << "cell '" << cell << "': " << msg;
  }
  const auto ragged = dir.write("g.tsv", "segid\tsysid\tm\n1\tA\n");
  EXPECT_THROW(load_feature_table(ragged), DataError);
  EXPECT_THROW(load_feature_table(dir.file("missing.tsv")), DataError);
  const auto bad_header = dir.write("h.tsv", "seg\tsys\tm\n");
  EXPECT_THROW(load_feature_table(bad_header), DataError);
}

// ---------------------------------------------------------------------------
// Text

TEST(Text, TokenizeNormalizesAndLowercases) {
  // "É" as E + combining acute composes to U+00C9, then lowercases to U+00E9.
  EXPECT_EQ(tokenize("Caf\x45\xcc\x81  Ünd\tDIE"), (Tokens{"caf\xc3\xa9", "\xc3\xbcnd", "die"}));
  EXPECT_EQ(tokenize("   "), Tokens{});
  EXPECT_EQ(nfc("e\xcc\x81"), "\xc3\xa9");
  EXPECT_THROW(nfc("\xff\xfe"), DataError);
}

TEST(Text, ParseRealIsStrict) {
  EXPECT_EQ(parse_real("-2.5e-3"), -2.5e-3);
  EXPECT_EQ(parse_real("7"), 7.0);
  for (const char* bad : {"", " 1", "1 ", "1,5", "0x10", "nan", "inf", "--1"}) {
    EXPECT_THROW(parse_real(bad), std::invalid_argument) << bad;
  }
}

TEST(Text, SplitKeepsEmptyFields) {
  EXPECT_EQ(split("a\t\tb\t", '\t'), (std::vector<std::string>{"a", "", "b", ""}));
  EXPECT_EQ(split_ws("  a  b\t"), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(trim_cr("x\r"), "x");
}
