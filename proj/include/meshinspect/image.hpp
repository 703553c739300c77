#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

namespace meshinspect {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Thrown when an input violates a documented precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown on unreadable/unwritable files and malformed file contents.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real-valued intensity field, row-major, nominally in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int height, int width, double fill = 0.0);
  explicit GrayImage(RowMatrix data);

  int height() const { return static_cast<int>(data_.rows()); }
  int width() const { return static_cast<int>(data_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }
  bool empty() const { return data_.size() == 0; }

  double& operator()(int row, int col) { return data_(row, col); }
  double operator()(int row, int col) const { return data_(row, col); }

  const RowMatrix& matrix() const { return data_; }
  RowMatrix& matrix() { return data_; }

  std::span<const double> values() const { return {data_.data(), size()}; }
  std::span<double> values() { return {data_.data(), size()}; }

  bool all_finite() const;
  bool same_shape(const GrayImage& other) const {
    return height() == other.height() && width() == other.width();
  }

 private:
  RowMatrix data_;
};

/// Per-pixel {0,1} map. 1 marks foreground / defect / prior-active.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width, bool fill = false);
  explicit BinaryMask(MaskMatrix data);

  int height() const { return static_cast<int>(data_.rows()); }
  int width() const { return static_cast<int>(data_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  bool operator()(int row, int col) const { return data_(row, col) != 0; }
  void set(int row, int col, bool value = true) { data_(row, col) = value ? 1 : 0; }

  const MaskMatrix& matrix() const { return data_; }

  std::size_t count() const;
  double density() const;
  bool any() const { return count() > 0; }

  template <class Shape>
  bool same_shape(const Shape& other) const {
    return height() == other.height() && width() == other.width();
  }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.data_.rows() == b.data_.rows() && a.data_.cols() == b.data_.cols() &&
           a.data_ == b.data_;
  }

 private:
  MaskMatrix data_;
};

enum class Polarity { kAbove, kBelow };

namespace image {

/// Loads an 8-bit grayscale PGM (P5, maxval 255) or PNG and maps bytes to [0,1].
GrayImage load_gray(const std::filesystem::path& path, bool invert = false);

/// Clamps to [0,1], quantizes round-half-up to 8 bits and writes PGM or PNG
/// depending on the extension (".pgm" -> P5, anything else -> PNG).
void save_gray(const GrayImage& img, const std::filesystem::path& path);

/// Masks are written with pixel values exactly 0 or 255.
void save_mask(const BinaryMask& mask, const std::filesystem::path& path);
BinaryMask load_mask(const std::filesystem::path& path);

/// 8-bit quantization used by save_gray and the Otsu histogram.
std::uint8_t quantize(double value);

/// Otsu threshold over the 256-bin histogram of the quantized image. Returns
/// (bin + 0.5)/255 for the winning bin, so value > level selects the bins
/// above it. Ties go to the lowest bin. Fewer than two occupied bins throw.
double otsu_threshold(const GrayImage& img);

BinaryMask binarize(const GrayImage& img, double threshold, Polarity polarity);

/// Square (Chebyshev) structuring element of side 2*radius+1.
BinaryMask dilate(const BinaryMask& mask, int radius);

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_complement(const BinaryMask& mask);

/// Linear stretch of [min,max] onto [0,1]; constant images map to 0.
GrayImage normalize(const GrayImage& img);

/// Mask rendered as an intensity image (1 -> 1.0).
GrayImage to_gray(const BinaryMask& mask);

}  // namespace image
}  // namespace meshinspect
