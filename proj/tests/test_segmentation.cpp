#include "meshinspect/rpca.hpp"
#include "meshinspect/segmentation.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace meshinspect;

namespace {

GrayImage row_image(std::initializer_list<double> v) {
  GrayImage img(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), img.values().begin());
  return img;
}

std::vector<int> bits(const BinaryMask& m) {
  std::vector<int> out;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) out.push_back(m(y, x));
  return out;
}

}  // namespace

TEST(AutoThresholds, KSigma) {
  // Exact zero mean, population std 0.01.
  const GrayImage e = row_image({0.01, -0.01, 0.01, -0.01});
  const auto [t1, t2] = segmentation::auto_thresholds(e, 3.0);
  EXPECT_NEAR(t1, -0.03, 1e-15);
  EXPECT_NEAR(t2, 0.03, 1e-15);
  const auto [z1, z2] = segmentation::auto_thresholds(GrayImage(4, 4), 3.0);
  EXPECT_EQ(z1, 0.0);
  EXPECT_EQ(z2, 0.0);
}

TEST(AutoThresholds, ClampedAroundZero) {
  const auto [t1, t2] = segmentation::auto_thresholds(row_image({1.0, 1.0, 1.0, 1.1}), 0.5);
  EXPECT_LE(t1, 0.0);
  EXPECT_GE(t2, 0.0);
}

TEST(AutoThresholds, SpikeFallsOutside) {
  std::mt19937_64 rng(60);
  const int n = 48;
  RowMatrix d = RowMatrix::Constant(n, n, 0.3);
  for (int i = 0; i < n; i += 8) d.col(i).setConstant(0.9);
  d(20, 21) += 0.5;
  WeightMatrix w = WeightMatrix::uniform(n, n);
  w.data(20, 21) = 0.1;
  const Decomposition dec = rpca::solve(GrayImage(d), w, {});
  const auto [t1, t2] = segmentation::auto_thresholds(dec.E);
  const double spike = dec.E(20, 21);
  EXPECT_TRUE(spike <= t1 || spike > t2);
  std::vector<double> sorted(dec.E.values().begin(), dec.E.values().end());
  std::sort(sorted.begin(), sorted.end());
  EXPECT_GE(spike, sorted[sorted.size() - 1]);
}

TEST(DoubleThreshold, DirectComparison) {
  const auto r = segmentation::double_threshold(row_image({-0.5, 0.0, 0.5}), -0.1, 0.1);
  EXPECT_EQ(bits(r.broken_mask), (std::vector<int>{1, 0, 0}));
  EXPECT_EQ(bits(r.block_mask), (std::vector<int>{0, 0, 1}));
  EXPECT_EQ(bits(r.defect_mask), (std::vector<int>{1, 0, 1}));
}

TEST(DoubleThreshold, ZeroThresholdsLabelZerosBroken) {
  const auto r = segmentation::double_threshold(row_image({-0.2, 0.0, 0.3}), 0.0, 0.0);
  EXPECT_EQ(bits(r.broken_mask), (std::vector<int>{1, 1, 0}));
  EXPECT_EQ(bits(r.block_mask), (std::vector<int>{0, 0, 1}));
}

TEST(DoubleThreshold, AllZeroIsEmpty) {
  const auto r = segmentation::double_threshold(GrayImage(3, 3), -0.1, 0.1);
  EXPECT_EQ(r.defect_mask.count(), 0u);
  EXPECT_EQ(r.broken_mask.count(), 0u);
  EXPECT_EQ(r.block_mask.count(), 0u);
}

TEST(DoubleThreshold, InvertedIntervalThrows) {
  EXPECT_THROW(segmentation::double_threshold(GrayImage(2, 2), 0.2, 0.1), InvalidInput);
}

TEST(Segment, AllZeroEGivesEmptyMasks) {
  const auto r = segmentation::segment(GrayImage(5, 5));
  EXPECT_EQ(r.defect_mask.count(), 0u);
  EXPECT_LT(r.t1, 0.0);
}

TEST(Segment, Properties) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage e = testutil::random_image(9, 11, rng, -1, 1);
    const double t1 = -0.2 - 0.02 * trial;
    const double t2 = 0.1 + 0.01 * trial;
    const auto narrow = segmentation::double_threshold(e, t1, t2);
    const auto wide = segmentation::double_threshold(e, t1 - 0.1, t2 + 0.1);
    EXPECT_EQ(image::mask_intersection(wide.defect_mask, narrow.defect_mask), wide.defect_mask);
    EXPECT_EQ(image::mask_intersection(narrow.broken_mask, narrow.block_mask).count(), 0u);
    EXPECT_EQ(image::mask_union(narrow.broken_mask, narrow.block_mask), narrow.defect_mask);

    // Pixel permutation commutes with segmentation.
    std::vector<int> perm(e.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    GrayImage shuffled(e.height(), e.width());
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.values()[i] = e.values()[static_cast<std::size_t>(perm[i])];
    const auto s = segmentation::double_threshold(shuffled, t1, t2);
    const auto before = bits(narrow.defect_mask);
    const auto after = bits(s.defect_mask);
    for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(after[i], before[static_cast<std::size_t>(perm[i])]);
  }
}
