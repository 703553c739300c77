#include "meshinspect/spectral_prior.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <mutex>

namespace meshinspect {

Spectrum::Spectrum(int height, int width) : height_(height), width_(width) {
  if (height <= 0 || width <= 0) throw InvalidInput("spectrum dimensions must be positive");
  bins_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), Complex{});
}

std::size_t Spectrum::nonzero_count() const {
  return static_cast<std::size_t>(
      std::count_if(bins_.begin(), bins_.end(), [](const Complex& c) { return c != Complex{}; }));
}

namespace spectral {
namespace {

// The FFTW planner is not re-entrant; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

// In-place 2-D transform of a row-major complex buffer.
void transform(std::vector<std::complex<double>>& buf, int h, int w, int sign) {
  FftwBuffer tmp(buf.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(h, w, tmp.data, tmp.data, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fftw plan creation failed");
  static_assert(sizeof(std::complex<double>) == sizeof(fftw_complex));
  std::memcpy(tmp.data, buf.data(), sizeof(fftw_complex) * buf.size());
  fftw_execute(plan);
  std::memcpy(static_cast<void*>(buf.data()), tmp.data, sizeof(fftw_complex) * buf.size());
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
}

// shift = +1 moves index 0 to floor(n/2) (fftshift); -1 undoes it.
std::vector<std::complex<double>> quadrant_shift(const std::vector<std::complex<double>>& in, int h,
                                                 int w, int shift) {
  std::vector<std::complex<double>> out(in.size());
  const int dy = shift > 0 ? h / 2 : h - h / 2;
  const int dx = shift > 0 ? w / 2 : w - w / 2;
  for (int y = 0; y < h; ++y) {
    const int ty = (y + dy) % h;
    for (int x = 0; x < w; ++x) {
      const int tx = (x + dx) % w;
      out[static_cast<std::size_t>(ty) * w + tx] = in[static_cast<std::size_t>(y) * w + x];
    }
  }
  return out;
}

}  // namespace

Spectrum fft2_centered(const GrayImage& img) {
  if (img.empty()) throw InvalidInput("fft2_centered: empty image");
  if (!img.all_finite()) throw InvalidInput("fft2_centered: non-finite pixels");
  const int h = img.height();
  const int w = img.width();
  std::vector<std::complex<double>> buf(img.size());
  const auto values = img.values();
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = {values[i], 0.0};
  transform(buf, h, w, FFTW_FORWARD);
  Spectrum spec(h, w);
  spec.bins() = quadrant_shift(buf, h, w, +1);
  return spec;
}

InverseResult ifft2_with_residue(const Spectrum& spec) {
  const int h = spec.height();
  const int w = spec.width();
  if (h <= 0 || w <= 0) throw InvalidInput("ifft2: empty spectrum");
  auto buf = quadrant_shift(spec.bins(), h, w, -1);
  transform(buf, h, w, FFTW_BACKWARD);
  const double scale = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
  InverseResult result{GrayImage(h, w), 0.0};
  auto out = result.image.values();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    out[i] = buf[i].real() * scale;
    result.max_imag_residue = std::max(result.max_imag_residue, std::abs(buf[i].imag() * scale));
  }
  return result;
}

GrayImage ifft2(const Spectrum& spec) { return ifft2_with_residue(spec).image; }

Spectrum apply_square_lowpass(const Spectrum& spec, int side) {
  if (side <= 0 || side > std::min(spec.height(), spec.width())) {
    throw InvalidInput("apply_square_lowpass: side out of range");
  }
  Spectrum out(spec.height(), spec.width());
  const int r0 = spec.center_row() - side / 2;
  const int c0 = spec.center_col() - side / 2;
  for (int y = r0; y < r0 + side; ++y) {
    for (int x = c0; x < c0 + side; ++x) out(y, x) = spec(y, x);
  }
  return out;
}

GrayImage fuse(const GrayImage& i1, const GrayImage& i2, const GrayImage& i3,
               const FusionWeights& w) {
  if (!i1.same_shape(i2) || !i1.same_shape(i3)) throw InvalidInput("fuse: dimension mismatch");
  RowMatrix p = w.k1 * i3.matrix() + w.k2 * (i1.matrix() + i2.matrix()) -
                w.k3 * (i2.matrix() - i1.matrix());
  return GrayImage(std::move(p));
}

double fusion_threshold(const GrayImage& img, const GrayImage& fused, const SpectralConfig& cfg) {
  switch (cfg.threshold_mode) {
    case FusionThreshold::kFixed:
      return cfg.fixed_threshold;
    case FusionThreshold::kOtsu:
      return image::otsu_threshold(fused);
    case FusionThreshold::kMetalFill:
      break;
  }
  const double metal_level = image::otsu_threshold(img);
  double metal_sum = 0.0;
  std::size_t metal_count = 0;
  for (double v : img.values()) {
    if (v > metal_level) {
      metal_sum += v;
      ++metal_count;
    }
  }
  const double mean = img.matrix().mean();
  const double metal_mean = metal_count ? metal_sum / static_cast<double>(metal_count) : mean;
  return cfg.weights.dc_gain() * 0.5 * (mean + metal_mean);
}

BlockPrior block_defect_prior_maps(const GrayImage& img, const SpectralConfig& cfg) {
  const auto& s = cfg.sides;
  if (!(s[0] < s[1] && s[1] < s[2])) throw InvalidInput("block_defect_prior: sides must be strictly increasing");
  const Spectrum spec = fft2_centered(img);
  BlockPrior prior;
  prior.i1 = ifft2(apply_square_lowpass(spec, s[0]));
  prior.i2 = ifft2(apply_square_lowpass(spec, s[1]));
  prior.i3 = ifft2(apply_square_lowpass(spec, s[2]));
  prior.fused = fuse(prior.i1, prior.i2, prior.i3, cfg.weights);
  prior.threshold = fusion_threshold(img, prior.fused, cfg);
  prior.mask = image::binarize(prior.fused, prior.threshold, Polarity::kAbove);
  return prior;
}

BinaryMask block_defect_prior(const GrayImage& img, const SpectralConfig& cfg) {
  return block_defect_prior_maps(img, cfg).mask;
}

}  // namespace spectral
}  // namespace meshinspect
