#include "meshinspect/mesh_synth.hpp"

#include "test_util.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <set>

using namespace meshinspect;

namespace {

MeshSpec ideal_square(int size) {
  MeshSpec m = MeshSpec::defaults(MeshType::kSquare);
  m.image_size = size;
  m.noise_sigma = 0.0;
  m.illumination_gradient = 0.0;
  return m;
}

}  // namespace

TEST(Generate, CleanSquareMeshStripes) {
  const MeshSpec mesh = ideal_square(128);
  const SynthImage s = synth::generate(mesh, {});
  std::set<int> full_cols, full_rows;
  for (int x = 0; x < 128; ++x) {
    bool full = true;
    for (int y = 0; y < 128; ++y) full &= s.image(y, x) == mesh.line_intensity;
    if (full) full_cols.insert(x);
  }
  for (int y = 0; y < 128; ++y) {
    bool full = true;
    for (int x = 0; x < 128; ++x) full &= s.image(y, x) == mesh.line_intensity;
    if (full) full_rows.insert(y);
  }
  EXPECT_EQ(full_cols.size(), 16u);  // 8 stripes of width 2
  EXPECT_EQ(full_rows.size(), 16u);
  const auto offsets = synth::line_offsets(mesh);
  ASSERT_EQ(offsets.size(), 8u);
  for (int o : offsets) EXPECT_TRUE(full_cols.count(o) && full_cols.count(o + 1) && full_rows.count(o));
  for (double v : s.image.values()) EXPECT_TRUE(v == mesh.line_intensity || v == mesh.background_intensity);
  EXPECT_EQ(s.gt_broken.count(), 0u);
  EXPECT_EQ(s.gt_block.count(), 0u);
}

TEST(Generate, GapMaskCount) {
  const MeshSpec mesh = ideal_square(128);
  DefectSpec d;
  d.kind = DefectKind::kBroken;
  BrokenDefect g;
  g.vertical = true;
  g.line = synth::line_offsets(mesh)[3];
  g.start = 50;
  g.extent = 20;
  d.broken.push_back(g);
  const SynthImage s = synth::generate(mesh, d);
  EXPECT_EQ(s.gt_broken.count(), static_cast<std::size_t>(20 * mesh.line_width));
  for (int y = 50; y < 70; ++y) {
    EXPECT_TRUE(s.gt_broken(y, g.line));
    EXPECT_EQ(s.image(y, g.line), mesh.background_intensity);
  }
}

TEST(Generate, DeterministicForSeed) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kSquare);
  mesh.seed = 17;
  const SynthImage a = synth::generate(mesh, {});
  const SynthImage b = synth::generate(mesh, {});
  EXPECT_EQ(a.image.matrix(), b.image.matrix());
}

TEST(Generate, CleanSquareMeshIsRankTwo) {
  const SynthImage s = synth::generate(ideal_square(128), {});
  const Eigen::VectorXd sv = Eigen::BDCSVD<Eigen::MatrixXd>(Eigen::MatrixXd(s.image.matrix())).singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv[i] > 1e-6 * sv[0];
  EXPECT_LE(rank, 2);
}

TEST(Generate, CircularRingsAndArc) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kCircular);
  mesh.noise_sigma = 0.0;
  mesh.illumination_gradient = 0.0;
  EXPECT_EQ(mesh.resolved_ring_radius(), 11);
  const auto centres = synth::ring_centres(mesh);
  DefectSpec d;
  d.kind = DefectKind::kBroken;
  BrokenDefect arc;
  arc.row = centres[2];
  arc.col = centres[2];
  arc.angle = 1.0;
  arc.extent = 12;
  d.broken.push_back(arc);
  const SynthImage s = synth::generate(mesh, d);
  EXPECT_GT(s.gt_broken.count(), 0u);
  const BinaryMask lattice = synth::lattice_mask(mesh);
  EXPECT_EQ(image::mask_intersection(s.gt_broken, lattice), s.gt_broken);
  for (int y = 0; y < s.image.height(); ++y)
    for (int x = 0; x < s.image.width(); ++x)
      if (s.gt_broken(y, x)) {
        EXPECT_EQ(s.image(y, x), mesh.background_intensity);
      }
}

TEST(Generate, RejectsBadSpecs) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kCircular);
  mesh.ring_radius = 20;
  EXPECT_THROW(synth::generate(mesh, {}), InvalidInput);
  DefectSpec d;
  d.blocks.push_back({250, 250, 20});
  EXPECT_THROW(synth::generate(MeshSpec::defaults(MeshType::kSquare), d), InvalidInput);
}

TEST(Dataset, SplitCounts) {
  EXPECT_EQ(synth::split_counts(60, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::array<int, 3>{20, 20, 20}));
  EXPECT_EQ(synth::split_counts(3, {1, 0, 0}), (std::array<int, 3>{3, 0, 0}));
  EXPECT_EQ(synth::split_counts(10, {1.0 / 3, 1.0 / 3, 1.0 / 3}), (std::array<int, 3>{4, 3, 3}));
  EXPECT_THROW(synth::split_counts(5, {0.5, 0.2, 0.2}), InvalidInput);
}

TEST(Dataset, DegenerateMix) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kSquare);
  mesh.image_size = 96;
  const auto items = synth::make_dataset(3, mesh, {1, 0, 0}, 1);
  ASSERT_EQ(items.size(), 3u);
  for (const auto& it : items) {
    EXPECT_EQ(it.defects.kind, DefectKind::kBroken);
    EXPECT_GT(it.data.gt_broken.count(), 0u);
    EXPECT_EQ(it.data.gt_block.count(), 0u);
  }
}

TEST(Dataset, SplitDigestAndClassDisjointness) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kSquare);
  mesh.image_size = 96;
  const auto a = synth::make_dataset(60, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0);
  std::array<int, 3> kinds{};
  for (const auto& it : a) {
    ++kinds[static_cast<std::size_t>(it.defects.kind)];
    EXPECT_EQ(image::mask_intersection(it.data.gt_broken, it.data.gt_block).count(), 0u) << it.id;
  }
  EXPECT_EQ(kinds, (std::array<int, 3>{20, 20, 20}));
  const auto b = synth::make_dataset(60, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 0);
  EXPECT_EQ(synth::digest(a), synth::digest(b));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_NE(synth::digest(synth::make_dataset(60, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, seed)), synth::digest(a));
  }
}

TEST(Dataset, CircularDataset) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kCircular);
  mesh.image_size = 128;
  const auto items = synth::make_dataset(6, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 4);
  for (const auto& it : items) {
    EXPECT_EQ(image::mask_intersection(it.data.gt_broken, it.data.gt_block).count(), 0u);
    EXPECT_GT(it.gt_union().count(), 0u);
  }
}

TEST(Dataset, DefectTextRoundTrip) {
  MeshSpec mesh = MeshSpec::defaults(MeshType::kCircular);
  mesh.image_size = 128;
  for (const auto& it : synth::make_dataset(6, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 9)) {
    const std::string text = synth::format_defects(it.defects);
    EXPECT_EQ(synth::format_defects(synth::parse_defects(it.defects.kind, text)), text);
  }
  EXPECT_EQ(synth::format_defects(DefectSpec{}), "-");
  EXPECT_THROW(synth::parse_defects(DefectKind::kBlock, "block:1:2"), InvalidInput);
}

TEST(Dataset, WriteReadRoundTrip) {
  testutil::TempDir dir("ds");
  MeshSpec mesh = MeshSpec::defaults(MeshType::kSquare);
  mesh.image_size = 64;
  const auto items = synth::make_dataset(3, mesh, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 2);
  synth::write_dataset(dir.path(), items);
  const auto back = synth::read_dataset(dir.path());
  ASSERT_EQ(back.size(), items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(back[i].id, items[i].id);
    EXPECT_EQ(back[i].defects.kind, items[i].defects.kind);
    EXPECT_EQ(back[i].mesh.seed, items[i].mesh.seed);
    EXPECT_EQ(back[i].data.gt_broken, items[i].data.gt_broken);
    EXPECT_EQ(back[i].data.gt_block, items[i].data.gt_block);
    EXPECT_LE((back[i].data.image.matrix() - items[i].data.image.matrix()).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  }
  EXPECT_EQ(synth::digest(back), synth::digest(items));
}

TEST(Dataset, ReadRejectsBadManifest) {
  testutil::TempDir dir("ds");
  EXPECT_THROW(synth::read_dataset(dir.path()), IoError);
}

TEST(Names, ParseAndPrint) {
  for (DefectKind k : {DefectKind::kBroken, DefectKind::kBlock, DefectKind::kMixed})
    EXPECT_EQ(parse_defect_kind(to_string(k)), k);
  EXPECT_EQ(parse_mesh_type("circular"), MeshType::kCircular);
  EXPECT_THROW(parse_mesh_type("hexagonal"), InvalidInput);
}
