#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mtrank/encoders.hpp"

using namespace mtrank;

namespace {

EmbeddingTable<double> table_ab() {
  Matrix<double> E(3, 2);
  E << 1, 0,  //
      0, 1,   //
      0.3, -0.7;
  return EmbeddingTable<double>({"a", "b", "c"}, E);
}

EmbeddingTable<double> random_table(std::size_t V, std::size_t D, Rng& rng, OovPolicy oov = OovPolicy::zero) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < V; ++i) words.push_back("w" + std::to_string(i));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix<double> E(static_cast<Eigen::Index>(V), static_cast<Eigen::Index>(D));
  for (Eigen::Index i = 0; i < E.size(); ++i) E.data()[i] = u(rng);
  return EmbeddingTable<double>(words, E, oov);
}

Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

LstmCell<double> random_cell(Eigen::Index H, Eigen::Index D, Rng& rng, double scale = 0.5) {
  LstmCell<double> c;
  for (auto* U : {&c.U_i, &c.U_f, &c.U_c, &c.U_o}) *U = random_matrix(H, H, rng, scale);
  for (auto* V : {&c.V_i, &c.V_f, &c.V_c, &c.V_o}) *V = random_matrix(H, D, rng, scale);
  for (auto* b : {&c.b_i, &c.b_f, &c.b_o}) *b = random_matrix(H, 1, rng, 0.1).col(0);
  return c;
}

// Direct wide convolution: position p covers padded rows p..p+L-1, i.e. sentence
// rows p-(L-1) .. p, with zeros outside the sentence.
Matrix<double> direct_convolution(const Matrix<double>& U, const Vector<double>& b, const Matrix<double>& X,
                                  Eigen::Index L) {
  const Eigen::Index T = X.rows(), D = X.cols(), N = U.rows();
  Matrix<double> out(N, T + L - 1);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index p = 0; p < T + L - 1; ++p) {
      double s = b[n];
      for (Eigen::Index l = 0; l < L; ++l) {
        const Eigen::Index row = p - (L - 1) + l;
        if (row < 0 || row >= T) continue;
        for (Eigen::Index d = 0; d < D; ++d) s += U(n, l * D + d) * X(row, d);
      }
      out(n, p) = s;
    }
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Embedding table and bag of words

TEST(EmbeddingTable, OovPolicies) {
  Matrix<double> E(2, 2);
  E << 1, 2, 3, 4;
  EmbeddingTable<double> zero({"x", "y"}, E, OovPolicy::zero);
  EXPECT_EQ(zero.resolve("z"), kZeroRow);
  EXPECT_EQ(zero.vocab_size(), 2u);

  EmbeddingTable<double> mean({"x", "y"}, E, OovPolicy::mean);
  EXPECT_EQ(mean.vocab_size(), 3u);
  const Eigen::Index unk = mean.resolve("z");
  EXPECT_DOUBLE_EQ(mean.matrix()(unk, 0), 2.0);
  EXPECT_DOUBLE_EQ(mean.matrix()(unk, 1), 3.0);

  EmbeddingTable<double> strict({"x", "y"}, E, OovPolicy::error);
  EXPECT_THROW(strict.resolve("z"), DataError);
  EXPECT_EQ(strict.resolve("y"), 1);
}

TEST(EmbeddingTable, RejectsInconsistentInput) {
  Matrix<double> E(2, 2);
  E.setZero();
  EXPECT_THROW(EmbeddingTable<double>({"x"}, E), std::invalid_argument);
  EXPECT_THROW(EmbeddingTable<double>({"x", "x"}, E), std::invalid_argument);
}

TEST(Bow, SingleTokenIsItsRow) {
  const auto t = table_ab();
  const Vector<double> v = encode_bow<double>({"c"}, t);
  EXPECT_DOUBLE_EQ(v[0], 0.3);
  EXPECT_DOUBLE_EQ(v[1], -0.7);
  EXPECT_EQ(encode_bow<double>({"c", "c", "c", "c"}, t), v);
}

TEST(Bow, HandMean) {
  const Vector<double> v = encode_bow<double>({"a", "b"}, table_ab());
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.5);
}

TEST(Bow, PermutationInvariant) {
  const auto t = table_ab();
  const Vector<double> a = encode_bow<double>({"a", "b", "c", "a"}, t);
  const Vector<double> b = encode_bow<double>({"c", "a", "a", "b"}, t);
  EXPECT_NEAR((a - b).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Bow, OovZeroRowCountsInMean) {
  const Vector<double> v = encode_bow<double>({"a", "unknown"}, table_ab());
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(Bow, EmptySentenceRejected) { EXPECT_THROW(encode_bow<double>({}, table_ab()), std::invalid_argument); }

// ---------------------------------------------------------------------------
// CNN

TEST(Cnn, WideFeatureMapLength) {
  Rng rng(1);
  const Matrix<double> X = random_matrix(5, 4, rng);
  const Matrix<double> U = random_matrix(2, 3 * 4, rng);
  const Vector<double> b = Vector<double>::Zero(2);
  const Matrix<double> map = wide_convolution(U, b, X, 3);
  EXPECT_EQ(map.rows(), 2);
  EXPECT_EQ(map.cols(), 7);
}

TEST(Cnn, MaxPoolKeepsLengthAndTruncates) {
  Vector<double> row(5);
  row << 1, 5, 2, 0, 3;
  const Vector<double> p = max_pool(row, 3);
  ASSERT_EQ(p.size(), 5);
  EXPECT_EQ(p, (Vector<double>(5) << 5, 5, 3, 3, 3).finished());
  EXPECT_EQ(max_pool(row, 1), row);
}

TEST(Cnn, ZeroEmbeddingsGiveZeroOutput) {
  Rng rng(2);
  const Matrix<double> X = Matrix<double>::Zero(4, 3);
  const Matrix<double> U = random_matrix(5, 9, rng);
  const Vector<double> out = cnn_forward<double>(U, Vector<double>::Zero(5), X, 3, 3);
  EXPECT_EQ(out, Vector<double>::Zero(5));
}

TEST(Cnn, HandSetFiltersMatchDirectConvolution) {
  // N = 2 filters, L = 2, D = 2, three tokens.
  Matrix<double> X(3, 2);
  X << 1.0, -1.0,  //
      0.5, 2.0,    //
      -0.3, 0.25;
  Matrix<double> U(2, 4);
  U << 0.2, -0.1, 0.4, 0.3,  //
      -0.5, 0.6, 0.1, -0.2;
  Vector<double> b(2);
  b << 0.05, -0.1;
  const Matrix<double> direct = direct_convolution(U, b, X, 2);
  EXPECT_NEAR((wide_convolution(U, b, X, 2) - direct).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  const Vector<double> out = cnn_forward<double>(U, b, X, 2, 2);
  for (Eigen::Index n = 0; n < 2; ++n) {
    EXPECT_NEAR(out[n], direct.row(n).array().tanh().maxCoeff(), 1e-15);
  }
  // Position 0 only sees token 1 through the second half of each filter.
  EXPECT_NEAR(direct(0, 0), 0.05 + 0.4 * 1.0 + 0.3 * -1.0, 1e-15);
}

TEST(Cnn, RandomShapesMatchDirectConvolution) {
  Rng rng(17);
  for (Eigen::Index L : {1, 2, 3, 4, 5}) {
    for (Eigen::Index T : {1, 2, 6}) {
      const Matrix<double> X = random_matrix(T, 3, rng);
      const Matrix<double> U = random_matrix(4, L * 3, rng);
      const Vector<double> b = random_matrix(4, 1, rng).col(0);
      const Matrix<double> direct = direct_convolution(U, b, X, L);
      EXPECT_NEAR((wide_convolution(U, b, X, static_cast<std::size_t>(L)) - direct).cwiseAbs().maxCoeff(), 0.0,
                  1e-13);
    }
  }
}

TEST(Cnn, LocationInvariance) {
  Rng rng(3);
  const Matrix<double> U = random_matrix(6, 3 * 4, rng);
  const Vector<double> b = Vector<double>::Zero(6);
  const Matrix<double> pattern = random_matrix(2, 4, rng);
  Vector<double> first;
  for (Eigen::Index at : {0, 1, 3, 6}) {
    Matrix<double> X = Matrix<double>::Zero(8, 4);
    X.middleRows(at, 2) = pattern;
    const Vector<double> out = cnn_forward<double>(U, b, X, 3, 3);
    if (first.size() == 0) first = out;
    EXPECT_NEAR((out - first).cwiseAbs().maxCoeff(), 0.0, 1e-15) << "pattern at " << at;
  }
}

TEST(Cnn, BackwardMatchesFiniteDifferences) {
  Rng rng(5);
  const Eigen::Index T = 4, D = 3, N = 3, L = 3;
  Matrix<double> X = random_matrix(T, D, rng);
  Matrix<double> U = random_matrix(N, L * D, rng, 0.5);
  Vector<double> b = random_matrix(N, 1, rng, 0.1).col(0);
  const Vector<double> w = random_matrix(N, 1, rng).col(0);
  const auto loss = [&]() { return w.dot(cnn_forward<double>(U, b, X, L, 2)); };
  CnnTape<double> tape;
  cnn_forward<double>(U, b, X, L, 2, &tape);
  Matrix<double> dU = Matrix<double>::Zero(N, L * D);
  Vector<double> db = Vector<double>::Zero(N);
  const Matrix<double> dX = cnn_backward<double>(U, tape, w, L, &dU, &db);
  const double h = 1e-6;
  const auto check = [&](double& theta, double analytic) {
    const double saved = theta;
    theta = saved + h;
    const double p = loss();
    theta = saved - h;
    const double m = loss();
    theta = saved;
    EXPECT_NEAR(analytic, (p - m) / (2 * h), 1e-7);
  };
  for (Eigen::Index i = 0; i < U.size(); ++i) check(U.data()[i], dU.data()[i]);
  for (Eigen::Index i = 0; i < b.size(); ++i) check(b.data()[i], db.data()[i]);
  for (Eigen::Index i = 0; i < X.size(); ++i) check(X.data()[i], dX.data()[i]);
}

TEST(Cnn, EmptySentenceRejected) {
  Rng rng(1);
  CnnParams<double> p{random_matrix(2, 6, rng), Vector<double>::Zero(2)};
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::cnn;
  cfg.filters = 2;
  EXPECT_THROW(encode_cnn<double>({}, table_ab(), p, cfg, Mode::infer), std::invalid_argument);
  EXPECT_EQ(encode_cnn<double>({"a", "b"}, table_ab(), p, cfg, Mode::infer).size(), 2);
}

// ---------------------------------------------------------------------------
// LSTM

TEST(Lstm, ZeroCellFromZeroState) {
  const auto cell = LstmCell<double>::zeros(3, 2);
  LstmStepCache<double> k;
  const Vector<double> x = (Vector<double>(2) << 0.7, -1.2).finished();
  const auto s = lstm_step(cell, x, Vector<double>::Zero(3).eval(), Vector<double>::Zero(3).eval(), &k);
  EXPECT_EQ(k.i, Vector<double>::Constant(3, 0.5));
  EXPECT_EQ(k.f, Vector<double>::Constant(3, 0.5));
  EXPECT_EQ(k.o, Vector<double>::Constant(3, 0.5));
  EXPECT_EQ(s.c, Vector<double>::Zero(3));
  EXPECT_EQ(s.h, Vector<double>::Zero(3));
}

TEST(Lstm, SaturatedGatesGivePerfectMemory) {
  Rng rng(8);
  auto cell = random_cell(3, 2, rng, 0.1);
  cell.b_f = Vector<double>::Constant(3, 2.5 + 1.0);  // pre-activation stays above 2.5
  cell.b_i = Vector<double>::Constant(3, -2.5 - 1.0);
  const Vector<double> c_prev = (Vector<double>(3) << 0.4, -1.7, 3.0).finished();
  const Vector<double> h_prev = random_matrix(3, 1, rng).col(0);
  const Vector<double> x = random_matrix(2, 1, rng).col(0);
  const auto s = lstm_step(cell, x, h_prev, c_prev);
  EXPECT_EQ(s.c, c_prev);
}

TEST(Lstm, ExactSaturationBias) {
  // With zero weights the gate pre-activation is the bias itself.
  auto cell = LstmCell<double>::zeros(2, 2);
  cell.b_f = Vector<double>::Constant(2, 2.5);
  cell.b_i = Vector<double>::Constant(2, -2.5);
  const Vector<double> c_prev = (Vector<double>(2) << -0.25, 9.0).finished();
  const auto s = lstm_step(cell, Vector<double>::Ones(2).eval(), Vector<double>::Zero(2).eval(), c_prev);
  EXPECT_EQ(s.c, c_prev);
}

TEST(Lstm, GatesAndOutputBounded) {
  Rng rng(21);
  const auto cell = random_cell(4, 3, rng, 3.0);
  Vector<double> h = Vector<double>::Zero(4), c = Vector<double>::Zero(4);
  for (int t = 0; t < 200; ++t) {
    LstmStepCache<double> k;
    const Vector<double> x = random_matrix(3, 1, rng, 10.0).col(0);
    auto s = lstm_step(cell, x, h, c, &k);
    for (const auto* g : {&k.i, &k.f, &k.o}) {
      EXPECT_GE(g->minCoeff(), 0.0);
      EXPECT_LE(g->maxCoeff(), 1.0);
    }
    EXPECT_LE(s.h.cwiseAbs().maxCoeff(), 1.0);
    h = s.h;
    c = s.c;
  }
}

TEST(Lstm, DimensionMismatchRejected) {
  const auto cell = LstmCell<double>::zeros(3, 2);
  EXPECT_THROW(lstm_step(cell, Vector<double>::Zero(3).eval(), Vector<double>::Zero(3).eval(),
                         Vector<double>::Zero(3).eval()),
               std::invalid_argument);
  EXPECT_THROW(lstm_step(cell, Vector<double>::Zero(2).eval(), Vector<double>::Zero(2).eval(),
                         Vector<double>::Zero(3).eval()),
               std::invalid_argument);
}

TEST(Lstm, LengthOneIsOneStep) {
  Rng rng(4);
  const auto t = random_table(5, 3, rng);
  const auto cell = random_cell(4, 3, rng);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::lstm;
  cfg.lstm_hidden = 4;
  const Vector<double> out = encode_lstm<double>({"w2"}, t, cell, nullptr, cfg, Mode::infer);
  const Vector<double> x = t.matrix().row(2).transpose();
  const auto s = lstm_step(cell, x, Vector<double>::Zero(4).eval(), Vector<double>::Zero(4).eval());
  EXPECT_EQ(out, s.h);
}

TEST(Lstm, TiedBackwardReadsReversedSentence) {
  Rng rng(6);
  const auto t = random_table(6, 3, rng);
  const auto cell = random_cell(4, 3, rng);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::lstm;
  cfg.lstm_hidden = 4;
  cfg.bidirectional = true;
  const Tokens s{"w0", "w3", "w1", "w5", "w2"};
  Tokens rev(s.rbegin(), s.rend());
  const Vector<double> bi = encode_lstm<double>(s, t, cell, &cell, cfg, Mode::infer);
  ASSERT_EQ(bi.size(), 8);
  EncoderConfig uni = cfg;
  uni.bidirectional = false;
  const Vector<double> fwd_rev = encode_lstm<double>(rev, t, cell, nullptr, uni, Mode::infer);
  EXPECT_EQ(Vector<double>(bi.tail(4)), fwd_rev);
  EXPECT_EQ(encode_lstm<double>(s, t, cell, nullptr, uni, Mode::infer).size(), 4);
}

TEST(Lstm, OrderMatters) {
  Rng rng(7);
  const auto t = random_table(4, 3, rng);
  const auto cell = random_cell(4, 3, rng, 1.0);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::lstm;
  cfg.lstm_hidden = 4;
  const Vector<double> a = encode_lstm<double>({"w0", "w1", "w2"}, t, cell, nullptr, cfg, Mode::infer);
  const Vector<double> b = encode_lstm<double>({"w2", "w1", "w0"}, t, cell, nullptr, cfg, Mode::infer);
  EXPECT_GT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Lstm, BackwardMatchesFiniteDifferences) {
  Rng rng(9);
  const Eigen::Index H = 3, D = 2, T = 4;
  for (bool reverse : {false, true}) {
    auto cell = random_cell(H, D, rng, 0.5);
    Matrix<double> X = random_matrix(T, D, rng);
    const Vector<double> w = random_matrix(H, 1, rng).col(0);
    const auto loss = [&]() { return w.dot(lstm_run(cell, X, reverse)); };
    std::vector<LstmStepCache<double>> caches;
    lstm_run(cell, X, reverse, &caches);
    auto g = LstmCell<double>::zeros(H, D);
    Matrix<double> gb_i = Matrix<double>::Zero(H, 1), gb_f = gb_i, gb_o = gb_i;
    LstmGrads<double> grads{&g.U_i, &g.U_f, &g.U_c, &g.U_o, &g.V_i, &g.V_f, &g.V_c, &g.V_o, &gb_i, &gb_f, &gb_o};
    const Matrix<double> dX = lstm_backward(cell, caches, w, reverse, grads);
    const double h = 1e-6;
    const auto check = [&](double& theta, double analytic) {
      const double saved = theta;
      theta = saved + h;
      const double p = loss();
      theta = saved - h;
      const double m = loss();
      theta = saved;
      EXPECT_NEAR(analytic, (p - m) / (2 * h), 1e-7);
    };
    for (auto [P, G] : {std::pair{&cell.U_i, &g.U_i}, {&cell.U_f, &g.U_f}, {&cell.U_c, &g.U_c}, {&cell.U_o, &g.U_o},
                        {&cell.V_i, &g.V_i}, {&cell.V_f, &g.V_f}, {&cell.V_c, &g.V_c}, {&cell.V_o, &g.V_o}}) {
      for (Eigen::Index i = 0; i < P->size(); ++i) check(P->data()[i], G->data()[i]);
    }
    for (auto [P, G] : {std::pair{&cell.b_i, &gb_i}, {&cell.b_f, &gb_f}, {&cell.b_o, &gb_o}}) {
      for (Eigen::Index i = 0; i < P->size(); ++i) check(P->data()[i], G->data()[i]);
    }
    for (Eigen::Index i = 0; i < X.size(); ++i) check(X.data()[i], dX.data()[i]);
  }
}

TEST(Lstm, EmptySentenceRejected) {
  Rng rng(1);
  const auto cell = random_cell(2, 2, rng);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::lstm;
  cfg.lstm_hidden = 2;
  EXPECT_THROW(encode_lstm<double>({}, table_ab(), cell, nullptr, cfg, Mode::infer), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Fine-tuning regularizer

TEST(FineTune, ModerateAtInitializationIsZero) {
  Rng rng(2);
  const Matrix<double> E = random_matrix(4, 3, rng);
  Matrix<double> g = Matrix<double>::Zero(4, 3);
  EXPECT_EQ(finetune_regularizer(E, &E, FineTuneMode::moderate(), 1e-4, &g), 0.0);
  EXPECT_EQ(g, Matrix<double>::Zero(4, 3));
}

TEST(FineTune, ModeratePenalizesDeviation) {
  Matrix<double> E0 = Matrix<double>::Zero(1, 2);
  Matrix<double> E(1, 2);
  E << 1.0, -2.0;
  Matrix<double> g = Matrix<double>::Zero(1, 2);
  EXPECT_DOUBLE_EQ(finetune_regularizer(E, &E0, FineTuneMode::moderate(0.5), 1e-4, &g), 0.5 * 5.0);
  EXPECT_DOUBLE_EQ(g(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g(0, 1), -2.0);
}

TEST(FineTune, FullIsL2OnE) {
  Matrix<double> E = Matrix<double>::Zero(2, 2);
  E(1, 0) = 2.0;
  Matrix<double> g = Matrix<double>::Zero(2, 2);
  EXPECT_NEAR(finetune_regularizer<double>(E, nullptr, FineTuneMode::full(), 1e-4, &g), 4e-4, 1e-18);
  EXPECT_NEAR(g(1, 0), 4e-4, 1e-18);
  EXPECT_EQ(g(0, 0), 0.0);
}

TEST(FineTune, FrozenIsZeroAndModerateNeedsE0) {
  Matrix<double> E = Matrix<double>::Ones(2, 2);
  Matrix<double> g = Matrix<double>::Zero(2, 2);
  EXPECT_EQ(finetune_regularizer<double>(E, nullptr, FineTuneMode::frozen(), 1e-4, &g), 0.0);
  EXPECT_EQ(g, Matrix<double>::Zero(2, 2));
  EXPECT_THROW(finetune_regularizer<double>(E, nullptr, FineTuneMode::moderate(), 1e-4), std::invalid_argument);
  EXPECT_THROW(FineTuneMode::moderate(0.0).validate(), std::invalid_argument);
}

TEST(FineTune, TableOverloadUsesSnapshot) {
  auto t = table_ab();
  t.snapshot_initial();
  EXPECT_EQ(finetune_regularizer(t, FineTuneMode::moderate(), 1e-4), 0.0);
  t.matrix()(0, 0) += 1.0;
  EXPECT_DOUBLE_EQ(finetune_regularizer(t, FineTuneMode::moderate(2.0), 1e-4), 2.0);
}

// ---------------------------------------------------------------------------
// Store-backed encoder

TEST(SentenceEncoder, OutputShapes) {
  Rng rng(3);
  for (auto [kind, bi, want] : {std::tuple{EncoderConfig::Kind::bow, false, 5}, {EncoderConfig::Kind::cnn, false, 7},
                                {EncoderConfig::Kind::lstm, false, 6}, {EncoderConfig::Kind::lstm, true, 12}}) {
    EncoderConfig cfg;
    cfg.kind = kind;
    cfg.filters = 7;
    cfg.lstm_hidden = 6;
    cfg.bidirectional = bi;
    SentenceEncoder<double> enc(cfg, 5);
    ParamStore<double> store;
    store.add("emb.E", random_matrix(4, 5, rng));
    enc.add_params(store, rng);
    EXPECT_EQ(enc.encode(store, {0, 1, 2}, Mode::infer, nullptr, nullptr).size(), want);
    EXPECT_EQ(enc.encode(store, {}, Mode::infer, nullptr, nullptr), Vector<double>::Zero(want));
  }
}

TEST(SentenceEncoder, InferDeterministicTrainDropoutStochastic) {
  Rng rng(3);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::cnn;
  cfg.filters = 8;
  cfg.dropout = 0.5;
  SentenceEncoder<double> enc(cfg, 4);
  ParamStore<double> store;
  store.add("emb.E", random_matrix(5, 4, rng));
  enc.add_params(store, rng);
  const TokenIds ids{0, 3, 1, 4};
  Rng a(1), b(2);
  EXPECT_EQ(enc.encode(store, ids, Mode::infer, &a, nullptr), enc.encode(store, ids, Mode::infer, &b, nullptr));
  Rng c(1), d(1), e(2);
  const Vector<double> tc = enc.encode(store, ids, Mode::train, &c, nullptr);
  EXPECT_EQ(tc, enc.encode(store, ids, Mode::train, &d, nullptr));
  EXPECT_NE(tc, enc.encode(store, ids, Mode::train, &e, nullptr));
  EXPECT_THROW(enc.encode(store, ids, Mode::train, nullptr, nullptr), std::invalid_argument);
}

TEST(SentenceEncoder, StoreEncoderMatchesFreeFunctions) {
  Rng rng(12);
  const auto table = random_table(6, 3, rng);
  EncoderConfig cfg;
  cfg.kind = EncoderConfig::Kind::lstm;
  cfg.lstm_hidden = 4;
  cfg.bidirectional = true;
  SentenceEncoder<double> enc(cfg, 3);
  ParamStore<double> store;
  store.add("emb.E", table.matrix());
  enc.add_params(store, rng);
  const auto cell_of = [&](const std::string& dir) {
    const auto n = SentenceEncoder<double>::lstm_names(dir);
    LstmCell<double> c;
    c.U_i = store.value(n[0]);
    c.U_f = store.value(n[1]);
    c.U_c = store.value(n[2]);
    c.U_o = store.value(n[3]);
    c.V_i = store.value(n[4]);
    c.V_f = store.value(n[5]);
    c.V_c = store.value(n[6]);
    c.V_o = store.value(n[7]);
    c.b_i = store.value(n[8]).col(0);
    c.b_f = store.value(n[9]).col(0);
    c.b_o = store.value(n[10]).col(0);
    return c;
  };
  const auto fwd = cell_of("fwd");
  const auto bwd = cell_of("bwd");
  const Tokens s{"w1", "w4", "w0"};
  const Vector<double> a = encode_lstm<double>(s, table, fwd, &bwd, cfg, Mode::infer);
  const Vector<double> b = enc.encode(store, table.resolve(s), Mode::infer, nullptr, nullptr);
  EXPECT_NEAR((a - b).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}
