#pragma once

#include "meshinspect/hough_prior.hpp"
#include "meshinspect/rpca.hpp"
#include "meshinspect/segmentation.hpp"
#include "meshinspect/spectral_prior.hpp"
#include "meshinspect/weights.hpp"

#include <cstddef>
#include <functional>
#include <optional>

namespace meshinspect {

struct DetectorConfig {
  MeshType mesh_type = MeshType::kSquare;
  SpectralConfig spectral{};
  HoughConfig hough{};
  bool use_block_prior = true;
  bool use_broken_prior = true;
  double w_min = weights::kDefaultWMin;
  WeightMode weight_mode = WeightMode::kTwoLevel;
  int weight_blur_radius = 2;
  SolverConfig solver{};
  double k = segmentation::kDefaultK;
  std::optional<double> t1;  ///< manual override of the lower threshold
  std::optional<double> t2;

  static DetectorConfig for_mesh(MeshType type);
};

struct Priors {
  BlockPrior block;
  BrokenLinePrior broken;
  WeightMatrix weights;
};

struct Detection {
  Priors priors;
  Decomposition decomposition;
  SegmentationResult segmentation;
};

namespace pipeline {

/// Narrows the circle search to [r-1, r+1] when the ring radius is known.
void set_ring_radius_hint(DetectorConfig& cfg, int radius);

Priors compute_priors(const GrayImage& img, const DetectorConfig& cfg);

/// Weight matrix from two priors under the configured weight mode.
WeightMatrix weights_for(const BinaryMask& block, const BinaryMask& broken, const DetectorConfig& cfg);

SegmentationResult segment(const GrayImage& e, const DetectorConfig& cfg);

/// Decomposition and segmentation on precomputed priors.
Detection detect_with_priors(const GrayImage& img, Priors priors, const DetectorConfig& cfg);

Detection detect(const GrayImage& img, const DetectorConfig& cfg);

/// Runs fn(0..n-1) on up to `workers` threads. The first exception thrown by
/// any call is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace pipeline
}  // namespace meshinspect
