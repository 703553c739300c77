#pragma once

#include "meshinspect/image.hpp"

#include <array>
#include <complex>
#include <vector>

namespace meshinspect {

/// Centered 2-D spectrum: the zero-frequency bin sits at (h/2, w/2) (floor).
class Spectrum {
 public:
  using Complex = std::complex<double>;

  Spectrum() = default;
  Spectrum(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  int center_row() const { return height_ / 2; }
  int center_col() const { return width_ / 2; }

  Complex& operator()(int row, int col) { return bins_[index(row, col)]; }
  const Complex& operator()(int row, int col) const { return bins_[index(row, col)]; }

  const std::vector<Complex>& bins() const { return bins_; }
  std::vector<Complex>& bins() { return bins_; }

  std::size_t nonzero_count() const;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> bins_;
};

/// Fusion coefficients: P = k1*I3 + k2*(I1+I2) - k3*(I2-I1).
struct FusionWeights {
  double k1 = 0.8;
  double k2 = 0.2;
  double k3 = 0.3;

  /// Response of the fusion to a constant image of value 1.
  double dc_gain() const { return k1 + 2.0 * k2; }
};

enum class FusionThreshold {
  kMetalFill,  ///< dc_gain * (mean(img) + mean of metal pixels) / 2
  kOtsu,       ///< Otsu on the 8-bit histogram of the raw fusion map
  kFixed,      ///< caller-supplied level
};

struct SpectralConfig {
  std::array<int, 3> sides{10, 20, 40};
  FusionWeights weights{};
  FusionThreshold threshold_mode = FusionThreshold::kMetalFill;
  double fixed_threshold = 0.5;
};

/// Intermediate maps kept for inspection/debug dumps.
struct BlockPrior {
  GrayImage i1;
  GrayImage i2;
  GrayImage i3;
  GrayImage fused;
  double threshold = 0.0;
  BinaryMask mask;
};

namespace spectral {

/// Forward DFT (unnormalized) with quadrants swapped so DC is at the center.
Spectrum fft2_centered(const GrayImage& img);

struct InverseResult {
  GrayImage image;
  double max_imag_residue = 0.0;
};

/// Inverse of fft2_centered (divides by h*w). The real part is returned.
InverseResult ifft2_with_residue(const Spectrum& spec);
GrayImage ifft2(const Spectrum& spec);

/// Keeps bins in rows/cols [c - side/2, c - side/2 + side - 1]; zeroes the rest.
Spectrum apply_square_lowpass(const Spectrum& spec, int side);

GrayImage fuse(const GrayImage& i1, const GrayImage& i2, const GrayImage& i3,
               const FusionWeights& w);

/// Level used to binarize the fusion map under the configured mode.
double fusion_threshold(const GrayImage& img, const GrayImage& fused, const SpectralConfig& cfg);

/// Full block-defect prior: three low-pass reconstructions, fusion, binarization.
BlockPrior block_defect_prior_maps(const GrayImage& img, const SpectralConfig& cfg = {});
BinaryMask block_defect_prior(const GrayImage& img, const SpectralConfig& cfg = {});

}  // namespace spectral
}  // namespace meshinspect
