#pragma once

#include "meshinspect/evaluation.hpp"
#include "meshinspect/image.hpp"
#include "meshinspect/pipeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace meshinspect {

struct ScanNode {
  double x = 0.0;  ///< um
  double y = 0.0;  ///< um
  int row = 0;
  int col = 0;
};

struct ScanPlan {
  std::vector<ScanNode> nodes;  ///< serpentine order
  double step = 0.0;            ///< um
  double dwell = 0.0;           ///< s per node
  double fov_diameter = 0.0;    ///< um
  double region_width = 0.0;    ///< um
  double region_height = 0.0;   ///< um
  int columns = 0;
  int rows = 0;

  double overlap() const { return fov_diameter - step; }
  double total_dwell() const { return dwell * static_cast<double>(nodes.size()); }
  /// Side of the square inscribed in the circular field of view.
  double inscribed_side() const;
};

struct Tile {
  GrayImage image;
  double x = 0.0;  ///< node position, um
  double y = 0.0;
};

/// Pixel placement of each tile in the mosaic; origins are shifted so the
/// smallest is 0.
struct MosaicLayout {
  int height = 0;
  int width = 0;
  int tile_height = 0;
  int tile_width = 0;
  std::vector<std::pair<int, int>> origins;  ///< (row, col) of each tile's top-left pixel
};

struct TileReport {
  std::size_t index = 0;
  bool ok = false;
  std::string error;
  double t1 = 0.0;
  double t2 = 0.0;
  int iterations = 0;
  double residual = 0.0;
  std::optional<MetricsReport> metrics;
};

struct RegionDetection {
  GrayImage mosaic;
  SegmentationResult region;  ///< OR-blended masks; t1/t2 are unused (0)
  std::vector<TileReport> tiles;
  MosaicLayout layout;
};

namespace scan {

/// Per axis: one centred node when the extent fits inside the inscribed FOV
/// square, otherwise nodes at 0, step, ... up to the first one >= extent.
/// Rejects fov <= step (no redundancy) and steps that leave gaps between
/// inscribed squares. `jitter` perturbs positions uniformly by +-jitter um.
ScanPlan plan_s_path(double region_width, double region_height, double step, double fov_diameter,
                     double dwell, double jitter = 0.0, std::uint64_t jitter_seed = 0);

/// "# key=value" lines for the plan geometry, then "index\tx_um\ty_um\tdwell_s" rows.
std::string format_plan(const ScanPlan& plan);
ScanPlan parse_plan(const std::string& text);

MosaicLayout layout(const std::vector<std::pair<double, double>>& positions, int tile_height, int tile_width,
                    double pixel_pitch);

/// Square tiles of `tile_size` pixels cut from one image at the plan's nodes,
/// placed as layout() would place them.
std::vector<Tile> cut_tiles(const GrayImage& src, const ScanPlan& plan, double pixel_pitch, int tile_size);

/// Tiles positioned at their node coordinates; overlaps averaged.
GrayImage stitch(const std::vector<Tile>& tiles, const ScanPlan& plan, double pixel_pitch);

/// Masks positioned like stitch(); overlaps OR-ed. Tiles flagged in `skip`
/// contribute nothing.
BinaryMask stitch_masks(const std::vector<BinaryMask>& masks, const MosaicLayout& layout,
                        const std::vector<bool>& skip = {});

/// Runs the detector on every tile and OR-stitches the masks. A failing tile
/// is reported and left out of the mosaic masks.
RegionDetection detect_over_region(const std::vector<Tile>& tiles, const ScanPlan& plan, double pixel_pitch,
                                   const DetectorConfig& cfg, const std::vector<BinaryMask>* gt = nullptr,
                                   int workers = 1);

}  // namespace scan
}  // namespace meshinspect
