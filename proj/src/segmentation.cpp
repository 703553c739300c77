#include "meshinspect/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace meshinspect::segmentation {

std::pair<double, double> auto_thresholds(const GrayImage& e, double k) {
  if (!(k > 0.0)) throw InvalidInput("auto_thresholds: k must be > 0");
  if (e.empty()) throw InvalidInput("auto_thresholds: empty matrix");
  const auto& m = e.matrix();
  const double mean = m.mean();
  const double var = (m.array() - mean).square().mean();
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) return {0.0, 0.0};
  return {std::min(0.0, mean - k * sd), std::max(0.0, mean + k * sd)};
}

SegmentationResult double_threshold(const GrayImage& e, double t1, double t2) {
  if (!(t1 <= t2)) throw InvalidInput("double_threshold: t1 must not exceed t2");
  SegmentationResult r;
  r.t1 = t1;
  r.t2 = t2;
  r.broken_mask = BinaryMask(e.height(), e.width());
  r.block_mask = BinaryMask(e.height(), e.width());
  r.defect_mask = BinaryMask(e.height(), e.width());
  for (int y = 0; y < e.height(); ++y) {
    for (int x = 0; x < e.width(); ++x) {
      const double v = e(y, x);
      if (v <= t1) {
        r.broken_mask.set(y, x);
        r.defect_mask.set(y, x);
      } else if (v > t2) {
        r.block_mask.set(y, x);
        r.defect_mask.set(y, x);
      }
    }
  }
  return r;
}

SegmentationResult segment(const GrayImage& e, double k) {
  auto [t1, t2] = auto_thresholds(e, k);
  if (t1 == 0.0 && t2 == 0.0) t1 = -std::numeric_limits<double>::denorm_min();
  return double_threshold(e, t1, t2);
}

}  // namespace meshinspect::segmentation
