#pragma once

#include "meshinspect/image.hpp"

#include <utility>

namespace meshinspect {

struct SegmentationResult {
  BinaryMask defect_mask;
  BinaryMask broken_mask;  ///< E <= t1
  BinaryMask block_mask;   ///< E > t2
  double t1 = 0.0;
  double t2 = 0.0;
};

namespace segmentation {

inline constexpr double kDefaultK = 3.0;

/// mean(E) -/+ k*std(E), clamped so that t1 <= 0 <= t2. Constant E gives (0, 0).
std::pair<double, double> auto_thresholds(const GrayImage& e, double k = kDefaultK);

SegmentationResult double_threshold(const GrayImage& e, double t1, double t2);

/// auto_thresholds followed by double_threshold. When both levels come out
/// as exactly 0, t1 is moved just below zero so untouched (E == 0) pixels
/// are not reported as broken.
SegmentationResult segment(const GrayImage& e, double k = kDefaultK);

}  // namespace segmentation
}  // namespace meshinspect
