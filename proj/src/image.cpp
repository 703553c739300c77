#include "meshinspect/image.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

namespace meshinspect {

GrayImage::GrayImage(int height, int width, double fill) {
  if (height < 0 || width < 0) throw InvalidInput("negative image dimensions");
  data_ = RowMatrix::Constant(height, width, fill);
}

GrayImage::GrayImage(RowMatrix data) : data_(std::move(data)) {}

bool GrayImage::all_finite() const { return data_.allFinite(); }

BinaryMask::BinaryMask(int height, int width, bool fill) {
  if (height < 0 || width < 0) throw InvalidInput("negative mask dimensions");
  data_ = MaskMatrix::Constant(height, width, fill ? 1 : 0);
}

BinaryMask::BinaryMask(MaskMatrix data) : data_(std::move(data)) {
  for (Eigen::Index i = 0; i < data_.size(); ++i) {
    if (data_.data()[i] > 1) throw InvalidInput("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < data_.size(); ++i) n += data_.data()[i];
  return n;
}

double BinaryMask::density() const {
  return size() == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(size());
}

namespace image {
namespace {

struct Raster8 {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> bytes;
};

bool has_pgm_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".pgm";
}

// Skips whitespace and '#' comments between PGM header tokens.
int read_pgm_token(std::istream& in, const std::string& path) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
    c = in.peek();
  }
  int value = -1;
  if (!(in >> value)) throw IoError("malformed PGM header: " + path);
  return value;
}

Raster8 read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5') {
    throw IoError("unsupported format (expected binary PGM P5): " + path.string());
  }
  Raster8 r;
  r.width = read_pgm_token(in, path.string());
  r.height = read_pgm_token(in, path.string());
  const int maxval = read_pgm_token(in, path.string());
  if (maxval != 255) throw IoError("unsupported format (PGM maxval must be 255): " + path.string());
  in.get();  // single whitespace before raster
  if (r.width <= 0 || r.height <= 0) throw IoError("zero-sized image: " + path.string());
  r.bytes.resize(static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height));
  in.read(reinterpret_cast<char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(r.bytes.size())) {
    throw IoError("truncated PGM raster: " + path.string());
  }
  return r;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

Raster8 read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open file: " + path.string());
  std::array<png_byte, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), fp.get()) != sig.size() ||
      png_sig_cmp(sig.data(), 0, sig.size()) != 0) {
    throw IoError("unsupported format (not PGM or PNG): " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  Raster8 r;
  std::string error;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, static_cast<int>(sig.size()));
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  r.width = static_cast<int>(png_get_image_width(png, info));
  r.height = static_cast<int>(png_get_image_height(png, info));
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    error = "unsupported format (PNG must be 8-bit single-channel): " + path.string();
  } else if (r.width <= 0 || r.height <= 0) {
    error = "zero-sized image: " + path.string();
  } else {
    r.bytes.resize(static_cast<std::size_t>(r.width) * static_cast<std::size_t>(r.height));
    rows.resize(static_cast<std::size_t>(r.height));
    for (int y = 0; y < r.height; ++y) rows[static_cast<std::size_t>(y)] = r.bytes.data() + static_cast<std::size_t>(y) * r.width;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!error.empty()) throw IoError(error);
  return r;
}

Raster8 read_raster(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing file: " + path.string());
  std::ifstream probe(path, std::ios::binary);
  char first = 0;
  probe.get(first);
  if (!probe) throw IoError("zero-sized image: " + path.string());
  probe.close();
  return first == 'P' ? read_pgm(path) : read_png(path);
}

void write_pgm(const Raster8& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << "P5\n" << r.width << ' ' << r.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(r.bytes.data()), static_cast<std::streamsize>(r.bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

void write_png(const Raster8& r, const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot write file: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < r.height; ++y) {
    png_write_row(png, r.bytes.data() + static_cast<std::size_t>(y) * r.width);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_raster(const Raster8& r, const std::filesystem::path& path) {
  if (has_pgm_extension(path)) {
    write_pgm(r, path);
  } else {
    write_png(r, path);
  }
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_shape(b)) throw InvalidInput(std::string(what) + ": dimension mismatch");
}

}  // namespace

std::uint8_t quantize(double value) {
  const double clamped = std::clamp(value, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

GrayImage load_gray(const std::filesystem::path& path, bool invert) {
  const Raster8 r = read_raster(path);
  GrayImage img(r.height, r.width);
  auto out = img.values();
  for (std::size_t i = 0; i < r.bytes.size(); ++i) {
    const double v = static_cast<double>(r.bytes[i]) / 255.0;
    out[i] = invert ? 1.0 - v : v;
  }
  return img;
}

void save_gray(const GrayImage& img, const std::filesystem::path& path) {
  if (!img.all_finite()) throw InvalidInput("save_gray: non-finite pixel values");
  Raster8 r{img.height(), img.width(), {}};
  r.bytes.reserve(img.size());
  for (double v : img.values()) r.bytes.push_back(quantize(v));
  write_raster(r, path);
}

void save_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  Raster8 r{mask.height(), mask.width(), {}};
  r.bytes.resize(mask.size());
  const auto* src = mask.matrix().data();
  for (std::size_t i = 0; i < mask.size(); ++i) r.bytes[i] = src[i] ? 255 : 0;
  write_raster(r, path);
}

BinaryMask load_mask(const std::filesystem::path& path) {
  const Raster8 r = read_raster(path);
  MaskMatrix m(r.height, r.width);
  for (std::size_t i = 0; i < r.bytes.size(); ++i) m.data()[i] = r.bytes[i] >= 128 ? 1 : 0;
  return BinaryMask(std::move(m));
}

double otsu_threshold(const GrayImage& img) {
  std::array<double, 256> hist{};
  for (double v : img.values()) hist[quantize(v)] += 1.0;
  const int levels = static_cast<int>(std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0; }));
  if (levels < 2) throw InvalidInput("otsu_threshold: degenerate histogram");

  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[static_cast<std::size_t>(i)];

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int best_bin = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[static_cast<std::size_t>(t)];
    sum0 += t * hist[static_cast<std::size_t>(t)];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  // Upper edge of the winning bin: value > level  <=>  quantize(value) > best_bin.
  return (best_bin + 0.5) / 255.0;
}

BinaryMask binarize(const GrayImage& img, double threshold, Polarity polarity) {
  if (std::isnan(threshold)) throw InvalidInput("binarize: threshold is NaN");
  MaskMatrix m(img.height(), img.width());
  const auto values = img.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const bool above = values[i] > threshold;
    m.data()[i] = (polarity == Polarity::kAbove ? above : !above) ? 1 : 0;
  }
  return BinaryMask(std::move(m));
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius < 0) throw InvalidInput("dilate: negative radius");
  if (radius == 0) return mask;
  const int h = mask.height();
  const int w = mask.width();
  // Separable: a square element is a row max followed by a column max.
  MaskMatrix rows = MaskMatrix::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x)) continue;
      const int x0 = std::max(0, x - radius);
      const int x1 = std::min(w - 1, x + radius);
      for (int xx = x0; xx <= x1; ++xx) rows(y, xx) = 1;
    }
  }
  MaskMatrix out = MaskMatrix::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!rows(y, x)) continue;
      const int y0 = std::max(0, y - radius);
      const int y1 = std::min(h - 1, y + radius);
      for (int yy = y0; yy <= y1; ++yy) out(yy, x) = 1;
    }
  }
  return BinaryMask(std::move(out));
}

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask_union");
  return BinaryMask(MaskMatrix(a.matrix().cwiseMax(b.matrix())));
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "mask_intersection");
  return BinaryMask(MaskMatrix(a.matrix().cwiseMin(b.matrix())));
}

BinaryMask mask_complement(const BinaryMask& mask) {
  MaskMatrix m = mask.matrix();
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = m.data()[i] ? 0 : 1;
  return BinaryMask(std::move(m));
}

GrayImage normalize(const GrayImage& img) {
  if (img.empty()) return img;
  const double lo = img.matrix().minCoeff();
  const double hi = img.matrix().maxCoeff();
  if (hi <= lo) return GrayImage(img.height(), img.width(), 0.0);
  return GrayImage(RowMatrix((img.matrix().array() - lo) / (hi - lo)));
}

GrayImage to_gray(const BinaryMask& mask) {
  return GrayImage(RowMatrix(mask.matrix().cast<double>()));
}

}  // namespace image
}  // namespace meshinspect
