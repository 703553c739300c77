#include "meshinspect/weights.hpp"

#include <algorithm>

namespace meshinspect::weights {
namespace {

BinaryMask checked_union(const BinaryMask& a, const BinaryMask& b, double w_min) {
  if (!(w_min > 0.0 && w_min <= 1.0)) throw InvalidInput("build_weight: w_min must lie in (0, 1]");
  if (!a.same_shape(b)) throw InvalidInput("build_weight: prior dimension mismatch");
  return image::mask_union(a, b);
}

}  // namespace

WeightMatrix build_weight(const BinaryMask& block_prior, const BinaryMask& broken_prior,
                          double w_min) {
  const BinaryMask prior = checked_union(block_prior, broken_prior, w_min);
  WeightMatrix w = WeightMatrix::uniform(prior.height(), prior.width());
  for (int y = 0; y < prior.height(); ++y)
    for (int x = 0; x < prior.width(); ++x)
      if (prior(y, x)) w.data(y, x) = w_min;
  return w;
}

WeightMatrix build_weight_graded(const BinaryMask& block_prior, const BinaryMask& broken_prior,
                                 double w_min, int blur_radius) {
  if (blur_radius < 0) throw InvalidInput("build_weight: negative blur radius");
  const BinaryMask prior = checked_union(block_prior, broken_prior, w_min);
  const int h = prior.height();
  const int wd = prior.width();
  // Box blur via a summed-area table; windows are clipped at the border.
  RowMatrix sat = RowMatrix::Zero(h + 1, wd + 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wd; ++x)
      sat(y + 1, x + 1) = (prior(y, x) ? 1.0 : 0.0) + sat(y, x + 1) + sat(y + 1, x) - sat(y, x);
  WeightMatrix w = WeightMatrix::uniform(h, wd);
  for (int y = 0; y < h; ++y) {
    const int y0 = std::max(0, y - blur_radius);
    const int y1 = std::min(h, y + blur_radius + 1);
    for (int x = 0; x < wd; ++x) {
      const int x0 = std::max(0, x - blur_radius);
      const int x1 = std::min(wd, x + blur_radius + 1);
      const double area = static_cast<double>((y1 - y0) * (x1 - x0));
      const double frac = (sat(y1, x1) - sat(y0, x1) - sat(y1, x0) + sat(y0, x0)) / area;
      w.data(y, x) = 1.0 - (1.0 - w_min) * frac;
    }
  }
  return w;
}

GrayImage to_heatmap(const WeightMatrix& w) {
  RowMatrix m = w.data;
  if (m.size() == 0) return GrayImage(std::move(m));
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (hi > lo) {
    m = (m.array() - lo) / (hi - lo);
  } else {
    m.setOnes();
  }
  return GrayImage(std::move(m));
}

}  // namespace meshinspect::weights
