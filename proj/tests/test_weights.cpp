#include "meshinspect/rpca.hpp"
#include "meshinspect/weights.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace meshinspect;

TEST(BuildWeight, NoPriorsGivesOnes) {
  const WeightMatrix w = weights::build_weight(BinaryMask(5, 6), BinaryMask(5, 6));
  EXPECT_EQ(w.data, RowMatrix::Ones(5, 6));
}

TEST(BuildWeight, SaturatedPrior) {
  const WeightMatrix w = weights::build_weight(BinaryMask(4, 4, true), BinaryMask(4, 4), 0.1);
  EXPECT_TRUE((w.data.array() == 0.1).all());
}

TEST(BuildWeight, DisjointSinglePixels) {
  BinaryMask a(4, 4), b(4, 4);
  a.set(1, 1);
  b.set(2, 2);
  const WeightMatrix w = weights::build_weight(a, b, 0.1);
  EXPECT_EQ((w.data.array() == 0.1).count(), 2);
  EXPECT_EQ(w(1, 1), 0.1);
  EXPECT_EQ(w(2, 2), 0.1);
  EXPECT_EQ((w.data.array() == 1.0).count(), 14);
}

TEST(BuildWeight, RejectsBadInputs) {
  EXPECT_THROW(weights::build_weight(BinaryMask(3, 3), BinaryMask(3, 3), 0.0), InvalidInput);
  EXPECT_THROW(weights::build_weight(BinaryMask(3, 3), BinaryMask(3, 3), 1.5), InvalidInput);
  EXPECT_THROW(weights::build_weight(BinaryMask(3, 3), BinaryMask(3, 4)), InvalidInput);
}

TEST(BuildWeight, EnlargingPriorsNeverRaisesWeights) {
  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask a = testutil::random_mask(12, 10, rng, 0.2);
    const BinaryMask b = testutil::random_mask(12, 10, rng, 0.2);
    const BinaryMask a2 = image::mask_union(a, testutil::random_mask(12, 10, rng, 0.2));
    const BinaryMask b2 = image::mask_union(b, testutil::random_mask(12, 10, rng, 0.2));
    for (WeightMode mode : {WeightMode::kTwoLevel, WeightMode::kGraded}) {
      auto build = [&](const BinaryMask& x, const BinaryMask& y) {
        return mode == WeightMode::kTwoLevel ? weights::build_weight(x, y, 0.2)
                                             : weights::build_weight_graded(x, y, 0.2, 1);
      };
      const WeightMatrix small = build(a, b);
      const WeightMatrix big = build(a2, b2);
      EXPECT_TRUE((big.data.array() <= small.data.array() + 1e-15).all());
      EXPECT_TRUE((big.data.array() >= 0.2 - 1e-15).all() && (small.data.array() <= 1.0 + 1e-15).all());
    }
  }
}

TEST(BuildWeight, PriorPixelsShrinkLess) {
  BinaryMask a(3, 3);
  a.set(0, 0);
  const WeightMatrix w = weights::build_weight(a, BinaryMask(3, 3), 0.3);
  const RowMatrix x = RowMatrix::Constant(3, 3, 1.0);
  const RowMatrix out = rpca::sparse_prox(x, w, 0.5, 1.0);
  EXPECT_GT(out(0, 0), out(1, 1));
  EXPECT_DOUBLE_EQ(out(0, 0), 1.0 - 0.15);
  EXPECT_DOUBLE_EQ(out(1, 1), 0.5);
}

TEST(GradedWeight, RadiusZeroMatchesTwoLevel) {
  std::mt19937_64 rng(31);
  const BinaryMask a = testutil::random_mask(9, 9, rng, 0.2);
  const BinaryMask b = testutil::random_mask(9, 9, rng, 0.2);
  const WeightMatrix g = weights::build_weight_graded(a, b, 0.1, 0);
  EXPECT_LT((g.data - weights::build_weight(a, b, 0.1).data).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GradedWeight, MatchesClippedBoxBlur) {
  BinaryMask a(7, 7);
  a.set(3, 3);
  a.set(0, 6);
  const WeightMatrix g = weights::build_weight_graded(a, BinaryMask(7, 7), 0.1, 1);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 7; ++x) {
      int n = 0, hits = 0;
      for (int yy = std::max(0, y - 1); yy <= std::min(6, y + 1); ++yy)
        for (int xx = std::max(0, x - 1); xx <= std::min(6, x + 1); ++xx, ++n) hits += a(yy, xx);
      EXPECT_NEAR(g(y, x), 1.0 - 0.9 * hits / n, 1e-12);
    }
  }
}

TEST(Heatmap, StretchesWeightRange) {
  BinaryMask a(2, 2);
  a.set(0, 0);
  const GrayImage h = weights::to_heatmap(weights::build_weight(a, BinaryMask(2, 2), 0.25));
  EXPECT_DOUBLE_EQ(h(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(h(1, 1), 1.0);
}
