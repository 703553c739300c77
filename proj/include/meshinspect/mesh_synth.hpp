#pragma once

#include "meshinspect/hough_prior.hpp"
#include "meshinspect/image.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace meshinspect {

struct MeshSpec {
  MeshType mesh_type = MeshType::kSquare;
  int period = 16;
  int line_width = 2;
  int image_size = 256;
  double line_intensity = 0.8;
  double background_intensity = 0.2;
  double illumination_gradient = 0.1;  ///< total fractional tilt across the diagonal
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;
  int ring_radius = 0;  ///< circular only; 0 means (period - 2*line_width)/2 - 3

  /// Square: period 16. Circular: period 32 (ring radius 11).
  static MeshSpec defaults(MeshType type);
  void validate() const;
  int resolved_ring_radius() const;
};

enum class DefectKind { kBroken, kBlock, kMixed };

/// Square mesh: a gap of `extent` pixels on the line whose first pixel column
/// (vertical) or row (horizontal) is `line`, starting at `start` along it.
/// Circular mesh: an arc of `extent` pixels (span extent/R radians) erased from
/// the ring centred at (row, col), starting at `angle` (radians, atan2(dy, dx)).
struct BrokenDefect {
  bool vertical = true;
  int line = 0;
  int start = 0;
  int row = 0;
  int col = 0;
  double angle = 0.0;
  int extent = 0;
};

struct BlockDefect {
  int row = 0;
  int col = 0;
  int side = 0;
};

struct DefectSpec {
  DefectKind kind = DefectKind::kBroken;
  std::vector<BrokenDefect> broken;
  std::vector<BlockDefect> blocks;
};

struct SynthImage {
  GrayImage image;
  BinaryMask gt_broken;
  BinaryMask gt_block;
};

struct DatasetItem {
  std::string id;
  MeshSpec mesh;  ///< seed is the per-image noise seed
  DefectSpec defects;
  SynthImage data;

  BinaryMask gt_union() const { return image::mask_union(data.gt_broken, data.gt_block); }
};

std::string to_string(DefectKind kind);
DefectKind parse_defect_kind(const std::string& text);
std::string to_string(MeshType type);
MeshType parse_mesh_type(const std::string& text);

namespace synth {

/// Pixel offsets of the first row/column of each straight line.
std::vector<int> line_offsets(const MeshSpec& mesh);
/// Ring centres along one axis.
std::vector<int> ring_centres(const MeshSpec& mesh);

BinaryMask lattice_mask(const MeshSpec& mesh);

SynthImage generate(const MeshSpec& mesh, const DefectSpec& defects);

/// Per-kind counts by largest remainder; ties go to the earlier kind.
std::array<int, 3> split_counts(int n, const std::array<double, 3>& mix);

/// Deterministic dataset of n images; kinds appear in the order broken, block, mixed.
std::vector<DatasetItem> make_dataset(int n, const MeshSpec& mesh, const std::array<double, 3>& mix,
                                      std::uint64_t seed);

/// FNV-1a over quantized images and masks, as 16 hex digits.
std::string digest(const std::vector<DatasetItem>& items);

/// images/, gt_broken/, gt_block/ (PNG) and manifest.tsv.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetItem>& items);

/// Reads a directory written by write_dataset. Images are re-quantized to 8 bits.
std::vector<DatasetItem> read_dataset(const std::filesystem::path& dir);

std::string format_defects(const DefectSpec& d);
DefectSpec parse_defects(DefectKind kind, const std::string& text);

}  // namespace synth
}  // namespace meshinspect
