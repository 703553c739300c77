#pragma once

#include "meshinspect/image.hpp"

namespace meshinspect {

/// Per-pixel multiplier of the sparse penalty, values in [w_min, 1].
struct WeightMatrix {
  RowMatrix data;

  int height() const { return static_cast<int>(data.rows()); }
  int width() const { return static_cast<int>(data.cols()); }
  double operator()(int row, int col) const { return data(row, col); }

  static WeightMatrix uniform(int height, int width, double value = 1.0) {
    return {RowMatrix::Constant(height, width, value)};
  }
};

enum class WeightMode { kTwoLevel, kGraded };

namespace weights {

inline constexpr double kDefaultWMin = 0.1;

/// w_min where either prior is set, 1 elsewhere.
WeightMatrix build_weight(const BinaryMask& block_prior, const BinaryMask& broken_prior,
                          double w_min = kDefaultWMin);

/// 1 - (1 - w_min) * boxblur(prior union), blur radius in pixels. Radius 0
/// reproduces build_weight.
WeightMatrix build_weight_graded(const BinaryMask& block_prior, const BinaryMask& broken_prior,
                                 double w_min = kDefaultWMin, int blur_radius = 2);

/// Min/max stretch of W onto [0, 1] for heatmap dumps; constant W maps to 1.
GrayImage to_heatmap(const WeightMatrix& w);

}  // namespace weights
}  // namespace meshinspect
