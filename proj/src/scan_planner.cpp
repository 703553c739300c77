#include "meshinspect/scan_planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace meshinspect {

double ScanPlan::inscribed_side() const { return fov_diameter / std::sqrt(2.0); }

namespace scan {
namespace {

std::vector<double> axis_positions(double extent, double step, double inscribed) {
  if (extent <= inscribed) return {0.5 * extent};
  std::vector<double> out;
  for (int i = 0;; ++i) {
    out.push_back(i * step);
    if (i * step >= extent) break;
  }
  return out;
}

void check_tiles(const std::vector<Tile>& tiles, const ScanPlan& plan) {
  if (tiles.size() != plan.nodes.size()) {
    throw InvalidInput("stitch: missing tile (" + std::to_string(tiles.size()) + " tiles for " +
                       std::to_string(plan.nodes.size()) + " nodes)");
  }
  for (const auto& t : tiles) {
    if (t.image.empty() || !t.image.same_shape(tiles.front().image)) {
      throw InvalidInput("stitch: inconsistent tile sizes");
    }
  }
}

std::vector<std::pair<double, double>> positions_of(const std::vector<Tile>& tiles) {
  std::vector<std::pair<double, double>> pos;
  for (const auto& t : tiles) pos.emplace_back(t.x, t.y);
  return pos;
}

}  // namespace

ScanPlan plan_s_path(double region_width, double region_height, double step, double fov_diameter,
                     double dwell, double jitter, std::uint64_t jitter_seed) {
  if (!(region_width > 0.0) || !(region_height > 0.0)) throw InvalidInput("scan plan: degenerate region");
  if (!(step > 0.0)) throw InvalidInput("scan plan: step must be > 0");
  if (dwell < 0.0) throw InvalidInput("scan plan: dwell must be >= 0");
  if (jitter < 0.0) throw InvalidInput("scan plan: jitter must be >= 0");
  if (fov_diameter <= step) throw InvalidInput("scan plan: no redundancy (fov_diameter <= step)");
  ScanPlan plan;
  plan.step = step;
  plan.dwell = dwell;
  plan.fov_diameter = fov_diameter;
  plan.region_width = region_width;
  plan.region_height = region_height;
  const double side = plan.inscribed_side();
  const auto xs = axis_positions(region_width, step, side);
  const auto ys = axis_positions(region_height, step, side);
  if ((xs.size() > 1 || ys.size() > 1) && step > side) {
    throw InvalidInput("scan plan: step exceeds the inscribed field of view; coverage would have gaps");
  }
  plan.columns = static_cast<int>(xs.size());
  plan.rows = static_cast<int>(ys.size());
  std::mt19937_64 rng(jitter_seed);
  std::uniform_real_distribution<double> offset(-jitter, jitter);
  for (int r = 0; r < plan.rows; ++r) {
    for (int k = 0; k < plan.columns; ++k) {
      const int c = (r % 2 == 0) ? k : plan.columns - 1 - k;
      ScanNode n{xs[static_cast<std::size_t>(c)], ys[static_cast<std::size_t>(r)], r, c};
      if (jitter > 0.0) {
        n.x += offset(rng);
        n.y += offset(rng);
      }
      plan.nodes.push_back(n);
    }
  }
  return plan;
}

std::string format_plan(const ScanPlan& plan) {
  std::ostringstream os;
  os << std::setprecision(12);
  os << "# region_width=" << plan.region_width << "\n# region_height=" << plan.region_height
     << "\n# step=" << plan.step << "\n# fov_diameter=" << plan.fov_diameter << "\n# dwell=" << plan.dwell
     << "\n# columns=" << plan.columns << "\n# rows=" << plan.rows << '\n';
  os << "index\tx_um\ty_um\tdwell_s\n";
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    os << i << '\t' << plan.nodes[i].x << '\t' << plan.nodes[i].y << '\t' << plan.dwell << '\n';
  }
  return os.str();
}

ScanPlan parse_plan(const std::string& text) {
  ScanPlan plan;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  auto number = [&](const std::string& v) {
    try {
      return std::stod(v);
    } catch (const std::logic_error&) {
      throw InvalidInput("plan: bad value at line " + std::to_string(lineno));
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const double v = number(line.substr(eq + 1));
      if (key == "region_width") plan.region_width = v;
      else if (key == "region_height") plan.region_height = v;
      else if (key == "step") plan.step = v;
      else if (key == "fov_diameter") plan.fov_diameter = v;
      else if (key == "dwell") plan.dwell = v;
      else if (key == "columns") plan.columns = static_cast<int>(v);
      else if (key == "rows") plan.rows = static_cast<int>(v);
      continue;
    }
    if (!header_seen) {
      if (line.rfind("index\t", 0) != 0) throw InvalidInput("plan: missing column header");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::size_t index = 0;
    ScanNode n;
    double dwell = 0.0;
    if (!(row >> index >> n.x >> n.y >> dwell) || index != plan.nodes.size()) {
      throw InvalidInput("plan: bad node record at line " + std::to_string(lineno));
    }
    plan.dwell = dwell;
    plan.nodes.push_back(n);
  }
  if (plan.nodes.empty()) throw InvalidInput("plan: no nodes");
  return plan;
}

MosaicLayout layout(const std::vector<std::pair<double, double>>& positions, int tile_height, int tile_width,
                    double pixel_pitch) {
  if (!(pixel_pitch > 0.0)) throw InvalidInput("stitch: pixel_pitch must be > 0");
  if (positions.empty()) throw InvalidInput("stitch: no tiles");
  MosaicLayout l;
  l.tile_height = tile_height;
  l.tile_width = tile_width;
  int min_r = std::numeric_limits<int>::max();
  int min_c = std::numeric_limits<int>::max();
  for (const auto& [x, y] : positions) {
    const int r = static_cast<int>(std::lround(y / pixel_pitch)) - tile_height / 2;
    const int c = static_cast<int>(std::lround(x / pixel_pitch)) - tile_width / 2;
    l.origins.emplace_back(r, c);
    min_r = std::min(min_r, r);
    min_c = std::min(min_c, c);
  }
  for (auto& [r, c] : l.origins) {
    r -= min_r;
    c -= min_c;
    l.height = std::max(l.height, r + tile_height);
    l.width = std::max(l.width, c + tile_width);
  }
  return l;
}

std::vector<Tile> cut_tiles(const GrayImage& src, const ScanPlan& plan, double pixel_pitch, int tile_size) {
  if (tile_size < 1) throw InvalidInput("cut: tile size must be >= 1");
  std::vector<std::pair<double, double>> pos;
  for (const auto& n : plan.nodes) pos.emplace_back(n.x, n.y);
  const MosaicLayout l = layout(pos, tile_size, tile_size, pixel_pitch);
  if (src.height() < l.height || src.width() < l.width) {
    throw InvalidInput("cut: image is smaller than the plan footprint (" + std::to_string(l.width) + "x" +
                       std::to_string(l.height) + " px)");
  }
  std::vector<Tile> tiles;
  for (std::size_t i = 0; i < l.origins.size(); ++i) {
    const auto [r, c] = l.origins[i];
    tiles.push_back({GrayImage(RowMatrix(src.matrix().block(r, c, tile_size, tile_size))), pos[i].first,
                     pos[i].second});
  }
  return tiles;
}

GrayImage stitch(const std::vector<Tile>& tiles, const ScanPlan& plan, double pixel_pitch) {
  check_tiles(tiles, plan);
  const MosaicLayout l =
      layout(positions_of(tiles), tiles.front().image.height(), tiles.front().image.width(), pixel_pitch);
  RowMatrix sum = RowMatrix::Zero(l.height, l.width);
  RowMatrix count = RowMatrix::Zero(l.height, l.width);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto [r, c] = l.origins[i];
    sum.block(r, c, l.tile_height, l.tile_width) += tiles[i].image.matrix();
    count.block(r, c, l.tile_height, l.tile_width).array() += 1.0;
  }
  RowMatrix out = (count.array() > 0.0).select(sum.array() / count.array().max(1.0), 0.0);
  return GrayImage(std::move(out));
}

BinaryMask stitch_masks(const std::vector<BinaryMask>& masks, const MosaicLayout& l, const std::vector<bool>& skip) {
  if (masks.size() != l.origins.size()) throw InvalidInput("stitch: missing tile mask");
  BinaryMask out(l.height, l.width);
  for (std::size_t i = 0; i < masks.size(); ++i) {
    if (!skip.empty() && skip[i]) continue;
    if (masks[i].height() != l.tile_height || masks[i].width() != l.tile_width) {
      throw InvalidInput("stitch: inconsistent tile sizes");
    }
    const auto [r0, c0] = l.origins[i];
    for (int y = 0; y < l.tile_height; ++y)
      for (int x = 0; x < l.tile_width; ++x)
        if (masks[i](y, x)) out.set(r0 + y, c0 + x);
  }
  return out;
}

RegionDetection detect_over_region(const std::vector<Tile>& tiles, const ScanPlan& plan, double pixel_pitch,
                                   const DetectorConfig& cfg, const std::vector<BinaryMask>* gt, int workers) {
  check_tiles(tiles, plan);
  if (gt && gt->size() != tiles.size()) throw InvalidInput("detect_over_region: one ground-truth mask per tile");
  cfg.solver.validate();
  RegionDetection out;
  out.mosaic = stitch(tiles, plan, pixel_pitch);
  out.layout = layout(positions_of(tiles), tiles.front().image.height(), tiles.front().image.width(), pixel_pitch);

  const std::size_t n = tiles.size();
  std::vector<SegmentationResult> segs(n);
  out.tiles.resize(n);
  pipeline::parallel_for(n, workers, [&](std::size_t i) {
    TileReport& rep = out.tiles[i];
    rep.index = i;
    try {
      const Detection det = pipeline::detect(tiles[i].image, cfg);
      rep.t1 = det.segmentation.t1;
      rep.t2 = det.segmentation.t2;
      rep.iterations = det.decomposition.iterations;
      rep.residual = det.decomposition.final_residual();
      if (gt) rep.metrics = evaluation::metrics(evaluation::confusion(det.segmentation.defect_mask, (*gt)[i]));
      segs[i] = det.segmentation;
      rep.ok = true;
    } catch (const std::exception& e) {
      rep.error = e.what();
    }
  });

  std::vector<bool> skip(n);
  std::vector<BinaryMask> defect(n), broken(n), block(n);
  const BinaryMask empty(out.layout.tile_height, out.layout.tile_width);
  for (std::size_t i = 0; i < n; ++i) {
    skip[i] = !out.tiles[i].ok;
    defect[i] = skip[i] ? empty : segs[i].defect_mask;
    broken[i] = skip[i] ? empty : segs[i].broken_mask;
    block[i] = skip[i] ? empty : segs[i].block_mask;
  }
  out.region.defect_mask = stitch_masks(defect, out.layout, skip);
  out.region.broken_mask = stitch_masks(broken, out.layout, skip);
  out.region.block_mask = stitch_masks(block, out.layout, skip);
  return out;
}

}  // namespace scan
}  // namespace meshinspect
