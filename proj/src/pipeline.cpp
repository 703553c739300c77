#include "meshinspect/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace meshinspect {

DetectorConfig DetectorConfig::for_mesh(MeshType type) {
  DetectorConfig cfg;
  cfg.mesh_type = type;
  cfg.solver = SolverConfig::for_mesh(type);
  return cfg;
}

namespace pipeline {

WeightMatrix weights_for(const BinaryMask& block, const BinaryMask& broken, const DetectorConfig& cfg) {
  if (cfg.weight_mode == WeightMode::kGraded) {
    return weights::build_weight_graded(block, broken, cfg.w_min, cfg.weight_blur_radius);
  }
  return weights::build_weight(block, broken, cfg.w_min);
}

void set_ring_radius_hint(DetectorConfig& cfg, int radius) {
  if (radius < 2) throw InvalidInput("ring radius hint must be >= 2");
  cfg.hough.radius_min = radius - 1;
  cfg.hough.radius_max = radius + 1;
}

Priors compute_priors(const GrayImage& img, const DetectorConfig& cfg) {
  if (img.empty()) throw InvalidInput("detect: empty image");
  Priors p;
  const BinaryMask none(img.height(), img.width());
  if (cfg.use_block_prior) p.block = spectral::block_defect_prior_maps(img, cfg.spectral);
  if (cfg.use_broken_prior) p.broken = hough::broken_line_prior_maps(img, cfg.mesh_type, cfg.hough);
  p.weights = weights_for(cfg.use_block_prior ? p.block.mask : none,
                          cfg.use_broken_prior ? p.broken.mask : none, cfg);
  return p;
}

SegmentationResult segment(const GrayImage& e, const DetectorConfig& cfg) {
  if (!cfg.t1 && !cfg.t2) return segmentation::segment(e, cfg.k);
  auto [t1, t2] = segmentation::auto_thresholds(e, cfg.k);
  if (cfg.t1) t1 = *cfg.t1;
  if (cfg.t2) t2 = *cfg.t2;
  return segmentation::double_threshold(e, t1, t2);
}

Detection detect_with_priors(const GrayImage& img, Priors priors, const DetectorConfig& cfg) {
  Detection d;
  d.priors = std::move(priors);
  d.decomposition = rpca::solve(img, d.priors.weights, cfg.solver);
  d.segmentation = segment(d.decomposition.E, cfg);
  return d;
}

Detection detect(const GrayImage& img, const DetectorConfig& cfg) {
  cfg.solver.validate();
  return detect_with_priors(img, compute_priors(img, cfg), cfg);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t count = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex err_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < count; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first) first = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace pipeline
}  // namespace meshinspect
