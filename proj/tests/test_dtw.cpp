#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "isa/dtw.hpp"
#include "isa/errors.hpp"
#include "isa/rng.hpp"
#include "support/oracles.hpp"

namespace isa {
namespace {

Sequence column(std::initializer_list<double> values, std::string id = "s") {
  Sequence s{std::move(id), std::nullopt, Matrix(values.size(), 1)};
  std::size_t i = 0;
  for (double v : values) s.obs(i++, 0) = v;
  return s;
}

TEST(Dtw, SelfDistanceIsZero) {
  Rng rng(1);
  const Sequence a = testing::random_sequence(rng, 8, 3);
  EXPECT_EQ(dtw_distance(a, a), 0.0);
}

TEST(Dtw, SingleCell) { EXPECT_EQ(dtw_distance(column({5}), column({2})), 3.0); }

TEST(Dtw, HandExampleMatchesEnumeration) {
  const Sequence a = column({0, 1, 2});
  const Sequence b = column({0, 2});
  // Cheapest monotone path: (0,0) (1,0) (2,1) with costs 0 + 1 + 0.
  EXPECT_EQ(testing::dtw_bruteforce(a, b, false), 1.0);
  EXPECT_EQ(dtw_distance(a, b), testing::dtw_bruteforce(a, b, false));
}

TEST(Dtw, MatchesExhaustiveEnumeration) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto la = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const auto lb = static_cast<std::size_t>(rng.uniform_int(1, 6));
    const Sequence a = testing::random_sequence(rng, la, 2);
    const Sequence b = testing::random_sequence(rng, lb, 2);
    EXPECT_EQ(dtw_distance(a, b), testing::dtw_bruteforce(a, b, false));
    DtwConfig sq;
    sq.metric = LocalMetric::squared_euclidean;
    EXPECT_EQ(dtw_distance(a, b, sq), testing::dtw_bruteforce(a, b, true));
  }
}

TEST(Dtw, SymmetricAndNonNegative) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Sequence a = testing::random_sequence(rng, static_cast<std::size_t>(rng.uniform_int(1, 12)), 2);
    const Sequence b = testing::random_sequence(rng, static_cast<std::size_t>(rng.uniform_int(1, 12)), 2);
    EXPECT_EQ(dtw_distance(a, b), dtw_distance(b, a));
    EXPECT_GE(dtw_distance(a, b), 0.0);
  }
}

TEST(Dtw, BandExcludingAllPathsIsUnreachable) {
  DtwConfig cfg;
  cfg.band_radius = 1;
  const Sequence a = column({0, 0, 0, 0, 0});
  const Sequence b = column({0, 0});
  EXPECT_TRUE(std::isinf(dtw_distance(a, b, cfg)));
  cfg.band_radius = 3;
  EXPECT_EQ(dtw_distance(a, b, cfg), 0.0);
}

TEST(Dtw, WideBandEqualsUnconstrained) {
  Rng rng(4);
  DtwConfig wide;
  wide.band_radius = 100;
  for (int i = 0; i < 20; ++i) {
    const Sequence a = testing::random_sequence(rng, 7, 2);
    const Sequence b = testing::random_sequence(rng, 5, 2);
    EXPECT_EQ(dtw_distance(a, b, wide), dtw_distance(a, b));
  }
}

TEST(Dtw, AlignmentPathCostAgreesWithDistance) {
  Rng rng(5);
  const Sequence a = testing::random_sequence(rng, 6, 2);
  const Sequence b = testing::random_sequence(rng, 9, 2);
  const DtwAlignment al = dtw_align(a, b);
  EXPECT_EQ(al.cost, dtw_distance(a, b));
  ASSERT_FALSE(al.path.empty());
  EXPECT_EQ(al.path.front(), std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(al.path.back(), std::make_pair(std::size_t{5}, std::size_t{8}));
  double sum = 0.0;
  for (auto [i, j] : al.path) sum += local_cost(a.obs.row(i), b.obs.row(j), LocalMetric::euclidean);
  EXPECT_NEAR(sum, al.cost, 1e-12);
}

TEST(Dtw, LengthNormalization) {
  DtwConfig cfg;
  cfg.normalize_by_length = true;
  EXPECT_EQ(dtw_distance(column({5}), column({2}), cfg), 1.5);
}

TEST(Dtw, Errors) {
  Rng rng(6);
  EXPECT_THROW(dtw_distance(testing::random_sequence(rng, 3, 2), testing::random_sequence(rng, 3, 3)),
               ShapeError);
  EXPECT_THROW(dtw_distance(Sequence{"e", std::nullopt, Matrix(0, 2)}, testing::random_sequence(rng, 3, 2)),
               ShapeError);
}

TEST(DtwRepresentation, Properties) {
  Rng rng(7);
  std::vector<Sequence> vocab;
  for (int i = 0; i < 5; ++i) vocab.push_back(testing::random_sequence(rng, 4 + i, 2));
  const Sequence x = vocab[2];
  const Vector r = dtw_representation(x, vocab);
  EXPECT_EQ(r.size(), 5u);
  EXPECT_EQ(r[2], 0.0);
  EXPECT_EQ(dtw_representation(testing::random_sequence(rng, 40, 2), vocab).size(), 5u);

  std::vector<Sequence> permuted{vocab[4], vocab[0], vocab[3], vocab[1], vocab[2]};
  const Vector rp = dtw_representation(x, permuted);
  EXPECT_EQ(rp[0], r[4]);
  EXPECT_EQ(rp[1], r[0]);
  EXPECT_EQ(rp[2], r[3]);
  EXPECT_EQ(rp[3], r[1]);
  EXPECT_EQ(rp[4], r[2]);

  EXPECT_EQ(dtw_representation(x, vocab, {}, 3), r);
  EXPECT_THROW(dtw_representation(x, std::span<const Sequence>{}), std::invalid_argument);
}

}  // namespace
}  // namespace isa
