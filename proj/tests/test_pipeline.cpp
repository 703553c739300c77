#include "meshinspect/evaluation.hpp"
#include "meshinspect/mesh_synth.hpp"
#include "meshinspect/pipeline.hpp"

#include <gtest/gtest.h>

#include <atomic>

using namespace meshinspect;

TEST(Detect, CleanMeshHasNoDefects) {
  const SynthImage s = synth::generate(MeshSpec::defaults(MeshType::kSquare), {});
  const Detection d = pipeline::detect(s.image, DetectorConfig::for_mesh(MeshType::kSquare));
  EXPECT_EQ(d.segmentation.defect_mask.count(), 0u);
}

TEST(Detect, BlockIsFoundWithHighF) {
  DefectSpec spec;
  spec.kind = DefectKind::kBlock;
  spec.blocks.push_back({90, 140, 20});
  const SynthImage s = synth::generate(MeshSpec::defaults(MeshType::kSquare), spec);
  const Detection d = pipeline::detect(s.image, DetectorConfig::for_mesh(MeshType::kSquare));
  const MetricsReport m = evaluation::metrics(evaluation::confusion(d.segmentation.block_mask, s.gt_block));
  EXPECT_GE(evaluation::f_or_zero(m), 0.75);
}

TEST(Detect, PriorsLowerWeights) {
  DefectSpec spec;
  spec.kind = DefectKind::kBlock;
  spec.blocks.push_back({90, 140, 20});
  const SynthImage s = synth::generate(MeshSpec::defaults(MeshType::kSquare), spec);
  DetectorConfig cfg = DetectorConfig::for_mesh(MeshType::kSquare);
  const Priors p = pipeline::compute_priors(s.image, cfg);
  EXPECT_EQ(p.weights.data(100, 150), cfg.w_min);
  cfg.use_block_prior = false;
  cfg.use_broken_prior = false;
  EXPECT_EQ(pipeline::compute_priors(s.image, cfg).weights.data, RowMatrix::Ones(256, 256));
}

TEST(Detect, ManualThresholdsOverride) {
  GrayImage e(1, 3);
  e(0, 0) = -0.5;
  e(0, 2) = 0.5;
  DetectorConfig cfg;
  cfg.t1 = -0.6;
  cfg.t2 = 0.4;
  const SegmentationResult r = pipeline::segment(e, cfg);
  EXPECT_EQ(r.broken_mask.count(), 0u);
  EXPECT_EQ(r.block_mask.count(), 1u);
  EXPECT_DOUBLE_EQ(r.t1, -0.6);
}

TEST(Detect, RingRadiusHint) {
  DetectorConfig cfg = DetectorConfig::for_mesh(MeshType::kCircular);
  pipeline::set_ring_radius_hint(cfg, 11);
  EXPECT_EQ(cfg.hough.radius_min, 10);
  EXPECT_EQ(cfg.hough.radius_max, 12);
  EXPECT_THROW(pipeline::set_ring_radius_hint(cfg, 1), InvalidInput);
  EXPECT_DOUBLE_EQ(cfg.solver.lambda, 0.06);
}

TEST(ParallelFor, VisitsEachIndexOnceAndRethrows) {
  std::vector<std::atomic<int>> hits(100);
  pipeline::parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  EXPECT_THROW(pipeline::parallel_for(10, 3,
                                      [](std::size_t i) {
                                        if (i == 7) throw std::runtime_error("boom");
                                      }),
               std::runtime_error);
}
