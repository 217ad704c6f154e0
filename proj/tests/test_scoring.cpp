#include <gtest/gtest.h>

#include <random>

#include "model_fixtures.hpp"
#include "mtrank/error.hpp"
#include "mtrank/scoring.hpp"
#include "synthetic.hpp"

using namespace mtrank;
using namespace mtrank::testing;

namespace {

Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

PairModel<double> zero_model(std::size_t n, std::size_t k) {
  ModelConfig cfg;
  cfg.static_dim = n;
  cfg.skip_dim = k;
  Rng rng(1);
  auto m = PairModel<double>::initialize(cfg, rng);
  for (auto& [name, p] : m.params()) p.value.setZero();
  return m;
}

}  // namespace

TEST(MeanEmpty, PooledSymmetricMeanIsZero) {
  PairwiseInput in;
  in.x_t1 = vec({1, 0});
  in.x_t2 = vec({-1, 0});
  in.x_r = vec({5, 5});
  in.psi_1r = vec({0.5});
  in.psi_2r = vec({-0.25});
  const std::vector<PairwiseInput> one{in};
  const auto spec = build_mean_empty(one);
  EXPECT_EQ(spec.strategy, EmptyStrategy::mean);
  EXPECT_EQ(spec.translation, vec({0, 0}));
  EXPECT_EQ(spec.skip, vec({0.125}));
  const auto via_model = build_mean_empty(one, zero_model(2, 1));
  EXPECT_EQ(via_model.translation, spec.translation);
  EXPECT_EQ(via_model.skip, spec.skip);
  EXPECT_THROW(build_mean_empty(std::vector<PairwiseInput>{}), std::invalid_argument);
}

TEST(MeanEmpty, IncludesEncoderOutput) {
  NetFixture f;
  f.encoder.kind = EncoderConfig::Kind::bow;
  f.finetune = FineTuneMode::full();
  Rng rng(3);
  const auto m = random_model(f, rng);
  const auto data = random_instances(f, 6, rng);
  const auto spec = build_mean_empty(data, m);
  ASSERT_EQ(static_cast<std::size_t>(spec.translation.size()), f.static_dim + f.embedding_dim);
  Vector<double> want = Vector<double>::Zero(spec.translation.size());
  for (const auto& in : data) {
    want += m.sentence_vector(in.x_t1, in.tok_t1) + m.sentence_vector(in.x_t2, in.tok_t2);
  }
  want /= 12.0;
  EXPECT_NEAR((spec.translation - want).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(AbsoluteScore, ZeroModelScoresZero) {
  const auto m = zero_model(3, 2);
  const auto empty = zero_empty(3, 2);
  EXPECT_EQ(empty.translation, Vector<double>::Zero(3));
  EXPECT_EQ(absolute_score(m, vec({1, 2, 3}), vec({0.5, -1}), vec({0, 1, 0}), empty), 0.0);
}

TEST(AbsoluteScore, EmptyAgainstItselfIsExactlyZero) {
  NetFixture f;
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_model(f, rng);
    EmptyVectorSpec e{EmptyStrategy::mean, uniform_vector(3, rng), uniform_vector(2, rng)};
    EXPECT_EQ(absolute_score(m, e.translation, e.skip, uniform_vector(3, rng), e), 0.0);
  }
}

TEST(AbsoluteScore, BoundedDeterministicAndPure) {
  NetFixture f;
  Rng rng(5);
  auto m = random_model(f, rng);
  const auto before = m.params();
  const auto e = zero_empty(3, 2);
  for (int i = 0; i < 50; ++i) {
    const auto x = uniform_vector(3, rng), p = uniform_vector(2, rng), r = uniform_vector(3, rng);
    const double s = absolute_score(m, x, p, r, e);
    EXPECT_GT(s, -1.0);
    EXPECT_LT(s, 1.0);
    EXPECT_EQ(s, absolute_score(m, x, p, r, e));
  }
  for (const auto& [name, p] : before) EXPECT_EQ(p.value, m.params().value(name));
}

TEST(AbsoluteScore, DimensionMismatchRejected) {
  const auto m = zero_model(3, 2);
  EXPECT_THROW(absolute_score(m, vec({1, 2, 3}), vec({0.5, -1}), vec({0, 1, 0}), zero_empty(2, 2)),
               std::invalid_argument);
  EXPECT_THROW(absolute_score(m, vec({1, 2, 3}), vec({0.5, -1}), vec({0, 1, 0}), zero_empty(3, 1)),
               std::invalid_argument);
  EXPECT_THROW(absolute_score(m, vec({1, 2}), vec({0.5, -1}), vec({0, 1, 0}), zero_empty(3, 2)),
               std::invalid_argument);
}

TEST(EmptySpec, MeanNeedsStoredMeans) {
  ModelArtifact art;
  art.model = zero_model(2, 1);
  EXPECT_EQ(empty_spec(art, EmptyStrategy::zero).translation, Vector<double>::Zero(2));
  EXPECT_THROW(empty_spec(art, EmptyStrategy::mean), DataError);
  art.mean_translation = vec({0.1, 0.2});
  art.mean_skip = vec({0.3});
  EXPECT_EQ(empty_spec(art, EmptyStrategy::mean).skip, vec({0.3}));
}

TEST(Preference, FromAbsolute) {
  EXPECT_EQ(pairwise_from_absolute(0.3, 0.1), Preference::first);
  EXPECT_EQ(pairwise_from_absolute(0.1, 0.3), Preference::second);
  EXPECT_EQ(pairwise_from_absolute(0.2, 0.2), Preference::tie);
}

TEST(Preference, NoCyclesOverRandomSystems) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> u(0, 6);  // coarse values produce ties
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(10);
    for (auto& v : s) v = u(rng) / 6.0;
    const auto beats = [&](std::size_t a, std::size_t b) {
      return pairwise_from_absolute(s[a], s[b]) == Preference::first;
    };
    for (std::size_t a = 0; a < s.size(); ++a) {
      for (std::size_t b = 0; b < s.size(); ++b) {
        for (std::size_t c = 0; c < s.size(); ++c) {
          ASSERT_FALSE(beats(a, b) && beats(b, c) && beats(c, a));
        }
      }
    }
  }
}

TEST(SystemScore, Aggregations) {
  EXPECT_EQ(system_score(std::vector<double>{0.2, -0.2}, Aggregation::mean), 0.0);
  EXPECT_DOUBLE_EQ(system_score(std::vector<double>{0.2, -0.2, 0.5}, Aggregation::sign), 2.0 / 3.0);
  EXPECT_EQ(system_score(std::vector<double>{0.0, -0.1}, Aggregation::sign), 0.0);
  EXPECT_EQ(system_score(std::vector<double>{0.5, 0.25, -0.125}, Aggregation::mean),
            system_score(std::vector<double>{-0.125, 0.5, 0.25}, Aggregation::mean));
  EXPECT_THROW(system_score(std::vector<double>{}, Aggregation::mean), std::invalid_argument);
}

TEST(Names, RoundTrip) {
  for (auto s : {EmptyStrategy::zero, EmptyStrategy::mean}) EXPECT_EQ(parse_empty_strategy(to_string(s)), s);
  for (auto a : {Aggregation::mean, Aggregation::sign}) EXPECT_EQ(parse_aggregation(to_string(a)), a);
  EXPECT_THROW(parse_empty_strategy("avg"), std::invalid_argument);
  EXPECT_THROW(parse_aggregation("median"), std::invalid_argument);
}

TEST(AbsoluteScore, MonotoneInPlantedFeatureAfterTraining) {
  SyntheticSpec spec;
  spec.segments = 80;
  spec.skip_dim = 1;
  spec.flip = 0.0;
  const auto c = make_synthetic(spec);
  TrainOptions o;
  o.model.static_dim = spec.vector_dim;
  o.model.skip_dim = 1;
  o.optimizer.max_epochs = 150;
  o.optimizer.seed = 5;
  const auto r = train(c.instances(c.judgments_in(0, 60)), c.instances(c.judgments_in(60, 80)), o);
  const auto empty = empty_spec(r.artifact, EmptyStrategy::zero);
  Rng rng(6);
  for (int probe = 0; probe < 5; ++probe) {
    ScoringInput in;
    in.x_t = uniform_vector(3, rng);
    in.x_r = uniform_vector(3, rng);
    double prev = -2.0;
    for (int k = 0; k <= 40; ++k) {
      in.psi_t = vec({-0.25 + 1.5 * k / 40.0});
      const double s = absolute_score(r.artifact, in, empty);
      EXPECT_GE(s, prev) << "probe " << probe << " step " << k;
      prev = s;
    }
  }
}
