#include "meshinspect/hough_prior.hpp"
#include "meshinspect/mesh_synth.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

using namespace meshinspect;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

HoughConfig line_cfg(int n, int threshold) {
  HoughConfig cfg;
  cfg.vote_threshold = threshold;
  return hough::resolve(cfg, n, n, MeshType::kSquare);
}

bool has_line(const std::vector<LineParam>& lines, double rho, double theta, double rho_tol = 1.0,
              double theta_tol = kDeg) {
  for (const auto& l : lines) {
    if (std::abs(l.rho - rho) <= rho_tol + 1e-9 && std::abs(l.theta - theta) <= theta_tol + 1e-9) return true;
  }
  return false;
}

// Clockwise quarter turn of a square mask: (r, c) -> (c, n-1-r).
BinaryMask rotate90(const BinaryMask& m) {
  const int n = m.height();
  BinaryMask out(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (m(r, c)) out.set(c, n - 1 - r);
  return out;
}

double gap_coverage(const BinaryMask& prior, const BinaryMask& gt) {
  return static_cast<double>(image::mask_intersection(prior, gt).count()) / static_cast<double>(gt.count());
}

}  // namespace

TEST(HoughLines, VerticalAndHorizontal) {
  BinaryMask v(32, 32), h(32, 32);
  for (int i = 0; i < 32; ++i) {
    v.set(i, 10);
    h.set(7, i);
  }
  EXPECT_TRUE(has_line(hough::hough_lines(v, line_cfg(32, 16)), 10, 0));
  EXPECT_TRUE(has_line(hough::hough_lines(h, line_cfg(32, 16)), 7, kPi / 2));
}

TEST(HoughLines, ParallelLinesCollectTheirLength) {
  BinaryMask m(32, 32);
  for (int i = 0; i < 32; ++i) {
    m.set(i, 5);
    m.set(i, 20);
  }
  const HoughConfig cfg = line_cfg(32, 16);
  const auto lines = hough::hough_lines(m, cfg);
  ASSERT_TRUE(has_line(lines, 5, 0, 0.0, 0.0));
  ASSERT_TRUE(has_line(lines, 20, 0, 0.0, 0.0));
  // Recount: pixels whose rho at theta=0 falls in the reported bin.
  for (const auto& l : lines) {
    if (l.theta != 0.0) continue;
    int recount = 0;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        if (m(y, x) && std::abs(x - l.rho) < 0.5) ++recount;
    EXPECT_EQ(l.votes, recount);
    EXPECT_EQ(l.votes, 32);
  }
}

TEST(HoughLines, EveryThetaColumnCountsEachPixelOnce) {
  std::mt19937_64 rng(20);
  const BinaryMask m = testutil::random_mask(24, 31, rng, 0.1);
  const hough::LineAccumulator acc = hough::line_accumulator(m, line_cfg(24, 1));
  EXPECT_EQ(acc.n_theta, 180);
  for (int t = 0; t < acc.n_theta; ++t) {
    long sum = 0;
    for (int r = 0; r < acc.n_rho; ++r) sum += acc.at(t, r);
    EXPECT_EQ(sum, static_cast<long>(m.count()));
  }
}

TEST(HoughLines, DigitalDiagonalVotesEqualPixelCount) {
  BinaryMask m(40, 40);
  for (int i = 0; i < 40; ++i) m.set(i, i);
  const auto lines = hough::hough_lines(m, line_cfg(40, 20));
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines.front().votes, 40);
  EXPECT_NEAR(lines.front().theta, 135 * kDeg, 1e-9);
  EXPECT_NEAR(lines.front().rho, 0.0, 1.0);
}

TEST(HoughLines, EmptyMaskGivesNothing) { EXPECT_TRUE(hough::hough_lines(BinaryMask(16, 16), line_cfg(16, 1)).empty()); }

TEST(HoughLines, ResultsSortedByVotes) {
  BinaryMask m(48, 48);
  for (int i = 0; i < 48; ++i) m.set(i, 9);
  for (int i = 0; i < 30; ++i) m.set(30, i);
  const auto lines = hough::hough_lines(m, line_cfg(48, 20));
  ASSERT_GE(lines.size(), 2u);
  for (std::size_t i = 1; i < lines.size(); ++i) EXPECT_GE(lines[i - 1].votes, lines[i].votes);
}

TEST(HoughLines, QuarterTurnMapsParameters) {
  const int n = 64;
  for (double deg : {20.0, 35.0, 60.0, 110.0, 150.0}) {
    const double theta = deg * kDeg;
    // Through the middle of the frame so the digital segment is long.
    const LineParam truth{31.5 * (std::cos(theta) + std::sin(theta)) + 3.0, theta, 0};
    const BinaryMask m = hough::rasterize(n, n, {truth}, {});
    const auto found = hough::hough_lines(m, line_cfg(n, 10));
    ASSERT_FALSE(found.empty()) << deg;
    const LineParam a = found.front();
    const auto rotated = hough::hough_lines(rotate90(m), line_cfg(n, 10));
    ASSERT_FALSE(rotated.empty()) << deg;
    double t2 = a.theta + kPi / 2;
    double r2 = a.rho - (n - 1) * std::sin(a.theta);
    if (t2 >= kPi - 1e-12) {
      t2 -= kPi;
      r2 = -r2;
    }
    const LineParam b = rotated.front();
    EXPECT_NEAR(b.theta, t2, kDeg + 1e-9) << deg;
    EXPECT_NEAR(b.rho, r2, 1.0 + 1e-9) << deg;
  }
}

TEST(HoughCircles, RecoversRasterizedCircle) {
  const BinaryMask m = hough::rasterize(32, 32, {}, {CircleParam{16, 16, 8, 0}});
  HoughConfig cfg;
  cfg.radius_min = 5;
  cfg.radius_max = 12;
  cfg = hough::resolve(cfg, 32, 32, MeshType::kCircular);
  const auto circles = hough::hough_circles(m, cfg);
  ASSERT_FALSE(circles.empty());
  EXPECT_NEAR(circles.front().cx, 16, 1.0);
  EXPECT_NEAR(circles.front().cy, 16, 1.0);
  EXPECT_NEAR(circles.front().r, 8, 1.0);
  EXPECT_EQ(circles.front().votes, static_cast<int>(hough::circle_offsets(8).size()));
}

TEST(HoughCircles, EmptyMaskAndExcludedRadius) {
  HoughConfig cfg;
  cfg.radius_min = 12;
  cfg.radius_max = 14;
  cfg = hough::resolve(cfg, 32, 32, MeshType::kCircular);
  EXPECT_TRUE(hough::hough_circles(BinaryMask(32, 32), cfg).empty());
  const BinaryMask m = hough::rasterize(32, 32, {}, {CircleParam{16, 16, 8, 0}});
  for (const auto& c : hough::hough_circles(m, cfg)) EXPECT_GE(c.r, 12);
  bool found_eight = false;
  for (const auto& c : hough::hough_circles(m, cfg)) found_eight |= std::abs(c.r - 8) <= 1;
  EXPECT_FALSE(found_eight);
}

TEST(HoughCircles, OffsetsAreSymmetricAndUnique) {
  for (int r = 1; r < 15; ++r) {
    const auto off = hough::circle_offsets(r);
    std::set<std::pair<int, int>> s(off.begin(), off.end());
    EXPECT_EQ(s.size(), off.size());
    for (const auto& [dy, dx] : off) {
      EXPECT_TRUE(s.count({-dy, dx}) && s.count({dy, -dx}) && s.count({dx, dy}));
      EXPECT_LE(std::abs(std::hypot(dy, dx) - r), 1.0);
    }
  }
}

TEST(DrawPrimitives, VerticalLineIsOneColumn) {
  const GrayImage out = hough::draw_primitives(GrayImage(16, 16), {LineParam{3, 0, 0}}, {});
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) EXPECT_EQ(out(y, x), x == 3 ? 1.0 : 0.0);
}

TEST(DrawPrimitives, IdentityAndAdditivity) {
  std::mt19937_64 rng(21);
  const GrayImage img = testutil::random_image(20, 20, rng, 0.0, 0.9);
  EXPECT_EQ(hough::draw_primitives(img, {}, {}).matrix(), img.matrix());
  const LineParam l{7, 40 * kDeg, 0};
  const CircleParam c{10, 9, 5, 0};
  const GrayImage both = hough::draw_primitives(GrayImage(20, 20), {l}, {c});
  const BinaryMask expected = image::mask_union(hough::rasterize(20, 20, {l}, {}), hough::rasterize(20, 20, {}, {c}));
  EXPECT_EQ(image::binarize(both, 0.5, Polarity::kAbove), expected);
}

TEST(BrokenPrior, CleanSquareLatticeIsSparse) {
  const SynthImage s = synth::generate(MeshSpec::defaults(MeshType::kSquare), {});
  EXPECT_LE(hough::broken_line_prior(s.image, MeshType::kSquare).density(), 0.10);
}

TEST(BrokenPrior, GapIsFlaggedAndDensityGrows) {
  const MeshSpec mesh = MeshSpec::defaults(MeshType::kSquare);
  const double clean = hough::broken_line_prior(synth::generate(mesh, {}).image, MeshType::kSquare).density();
  DefectSpec d;
  d.kind = DefectKind::kBroken;
  BrokenDefect gap;
  gap.vertical = true;
  gap.line = synth::line_offsets(mesh)[5];
  gap.start = 100;
  gap.extent = 30;
  d.broken.push_back(gap);
  const SynthImage s = synth::generate(mesh, d);
  const BinaryMask prior = hough::broken_line_prior(s.image, MeshType::kSquare);
  EXPECT_GE(gap_coverage(prior, s.gt_broken), 0.5);
  EXPECT_GT(prior.density(), clean);
}

TEST(BrokenPrior, ErasedArcIsFlagged) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kCircular);
  const int r = mesh.resolved_ring_radius();
  DefectSpec d;
  d.kind = DefectKind::kBroken;
  BrokenDefect arc;
  const auto centres = synth::ring_centres(mesh);
  arc.row = centres[3];
  arc.col = centres[4];
  arc.angle = 0.3;
  arc.extent = 14;
  d.broken.push_back(arc);
  const SynthImage s = synth::generate(mesh, d);
  HoughConfig cfg;
  cfg.radius_min = r - 1;
  cfg.radius_max = r + 1;
  const BinaryMask prior = hough::broken_line_prior(s.image, MeshType::kCircular, cfg);
  EXPECT_GE(gap_coverage(prior, s.gt_broken), 0.5);
}

TEST(HoughConfig, ResolveDefaultsAndValidation) {
  const HoughConfig sq = hough::resolve({}, 256, 200, MeshType::kSquare);
  EXPECT_NEAR(sq.theta_resolution, kDeg, 1e-15);
  EXPECT_EQ(sq.vote_threshold, static_cast<int>(std::ceil(hough::kLineVoteFraction * 200)));
  EXPECT_EQ(sq.radius_min, 4);
  EXPECT_EQ(sq.radius_max, 100);
  HoughConfig bad = sq;
  bad.radius_max = 2;
  EXPECT_THROW(hough::validate(bad), InvalidInput);
  bad = sq;
  bad.rho_resolution = 0;
  EXPECT_THROW(hough::validate(bad), InvalidInput);
}

TEST(HoughFormat, OnePrimitivePerLine) {
  const std::string text = hough::format_primitives({LineParam{3, 0, 10}}, {CircleParam{1, 2, 3, 4}});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_EQ(text.rfind("line ", 0), 0u);
  EXPECT_NE(text.find("\ncircle "), std::string::npos);
}
