#include "meshinspect/hough_prior.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <iomanip>

namespace meshinspect::hough {
namespace {

// Plots the integer midpoint (Bresenham) segment, skipping out-of-bounds pixels.
void plot_segment(BinaryMask& out, int x0, int y0, int x1, int y1) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < out.width() && y0 >= 0 && y0 < out.height()) out.set(y0, x0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void plot_line(BinaryMask& out, const LineParam& line) {
  const double c = std::cos(line.theta);
  const double s = std::sin(line.theta);
  const int h = out.height();
  const int w = out.width();
  if (std::abs(c) >= std::abs(s)) {
    // Mostly vertical: solve for x at the first and last row.
    const int xa = static_cast<int>(std::lround(line.rho / c));
    const int xb = static_cast<int>(std::lround((line.rho - (h - 1) * s) / c));
    plot_segment(out, xa, 0, xb, h - 1);
  } else {
    const int ya = static_cast<int>(std::lround(line.rho / s));
    const int yb = static_cast<int>(std::lround((line.rho - (w - 1) * c) / s));
    plot_segment(out, 0, ya, w - 1, yb);
  }
}

void plot_circle(BinaryMask& out, const CircleParam& circle) {
  const int cx = static_cast<int>(std::lround(circle.cx));
  const int cy = static_cast<int>(std::lround(circle.cy));
  for (const auto& [dy, dx] : circle_offsets(static_cast<int>(std::lround(circle.r)))) {
    const int y = cy + dy;
    const int x = cx + dx;
    if (x >= 0 && x < out.width() && y >= 0 && y < out.height()) out.set(y, x);
  }
}

}  // namespace

HoughConfig resolve(const HoughConfig& cfg, int height, int width, MeshType mesh_type) {
  HoughConfig out = cfg;
  const int min_dim = std::min(height, width);
  if (out.theta_resolution <= 0.0) out.theta_resolution = std::numbers::pi / 180.0;
  if (out.radius_min <= 0 && out.radius_max <= 0) {
    out.radius_min = 4;
    out.radius_max = std::max(4, min_dim / 2);
  }
  if (out.vote_threshold <= 0) {
    if (mesh_type == MeshType::kSquare) {
      out.vote_threshold = static_cast<int>(std::ceil(kLineVoteFraction * min_dim));
    } else {
      const auto n = circle_offsets(std::max(1, out.radius_min)).size();
      out.vote_threshold = static_cast<int>(std::ceil(0.5 * static_cast<double>(n)));
    }
    out.vote_threshold = std::max(1, out.vote_threshold);
  }
  return out;
}

void validate(const HoughConfig& cfg) {
  if (!(cfg.rho_resolution > 0.0) || !(cfg.theta_resolution > 0.0)) {
    throw InvalidInput("hough: resolutions must be positive");
  }
  if (cfg.vote_threshold < 1) throw InvalidInput("hough: vote_threshold must be >= 1");
  if (cfg.radius_min < 1 || cfg.radius_max < cfg.radius_min) {
    throw InvalidInput("hough: radius_range must be a nonempty interval of positive radii");
  }
  if (cfg.dilate_radius < 0 || cfg.match_tolerance < 0 || cfg.center_suppression < 0) {
    throw InvalidInput("hough: radii must be non-negative");
  }
}

LineAccumulator line_accumulator(const BinaryMask& mask, const HoughConfig& cfg) {
  if (!(cfg.rho_resolution > 0.0) || !(cfg.theta_resolution > 0.0)) {
    throw InvalidInput("hough: resolutions must be positive");
  }
  LineAccumulator acc;
  acc.rho_resolution = cfg.rho_resolution;
  acc.theta_resolution = cfg.theta_resolution;
  acc.n_theta = std::max(1, static_cast<int>(std::lround(std::numbers::pi / cfg.theta_resolution)));
  const double diag = std::hypot(static_cast<double>(mask.height()), static_cast<double>(mask.width()));
  const int half = static_cast<int>(std::ceil(diag / cfg.rho_resolution));
  acc.n_rho = 2 * half + 1;
  acc.rho_offset = -half * cfg.rho_resolution;
  acc.votes.assign(static_cast<std::size_t>(acc.n_rho) * acc.n_theta, 0);

  std::vector<double> cos_t(static_cast<std::size_t>(acc.n_theta));
  std::vector<double> sin_t(static_cast<std::size_t>(acc.n_theta));
  for (int t = 0; t < acc.n_theta; ++t) {
    cos_t[static_cast<std::size_t>(t)] = std::cos(acc.theta_of(t));
    sin_t[static_cast<std::size_t>(t)] = std::sin(acc.theta_of(t));
  }
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(y, x)) continue;
      for (int t = 0; t < acc.n_theta; ++t) {
        const double rho = x * cos_t[static_cast<std::size_t>(t)] + y * sin_t[static_cast<std::size_t>(t)];
        const int r = static_cast<int>(std::lround((rho - acc.rho_offset) / acc.rho_resolution));
        if (r >= 0 && r < acc.n_rho) ++acc.votes[static_cast<std::size_t>(t) * acc.n_rho + r];
      }
    }
  }
  return acc;
}

std::vector<LineParam> hough_lines(const BinaryMask& mask, const HoughConfig& cfg) {
  if (mask.count() == 0) return {};
  const LineAccumulator acc = line_accumulator(mask, cfg);
  const int threshold = std::max(1, cfg.vote_threshold);

  struct Peak {
    int votes;
    std::size_t scan;
    int t;
    int r;
  };
  std::vector<Peak> peaks;
  for (int t = 0; t < acc.n_theta; ++t) {
    for (int r = 0; r < acc.n_rho; ++r) {
      const int v = acc.at(t, r);
      if (v < threshold) continue;
      const std::size_t scan = static_cast<std::size_t>(t) * acc.n_rho + r;
      bool is_peak = true;
      for (int dt = -1; dt <= 1 && is_peak; ++dt) {
        for (int dr = -1; dr <= 1; ++dr) {
          if (dt == 0 && dr == 0) continue;
          int tt = t + dt;
          int rr = r + dr;
          // theta wraps at pi with rho negated.
          if (tt < 0 || tt >= acc.n_theta) {
            tt = (tt + acc.n_theta) % acc.n_theta;
            rr = acc.n_rho - 1 - rr;
          }
          if (rr < 0 || rr >= acc.n_rho) continue;
          const int nv = acc.at(tt, rr);
          const std::size_t nscan = static_cast<std::size_t>(tt) * acc.n_rho + rr;
          // Plateaus keep only their first cell in scan order.
          if (nv > v || (nv == v && nscan < scan)) {
            is_peak = false;
            break;
          }
        }
      }
      if (is_peak) peaks.push_back({v, scan, t, r});
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.votes != b.votes ? a.votes > b.votes : a.scan < b.scan;
  });
  std::vector<LineParam> lines;
  lines.reserve(peaks.size());
  for (const auto& p : peaks) lines.push_back({acc.rho_of(p.r), acc.theta_of(p.t), p.votes});
  return lines;
}

std::vector<std::pair<int, int>> circle_offsets(int r) {
  if (r < 0) throw InvalidInput("circle_offsets: negative radius");
  std::vector<std::pair<int, int>> pts;
  if (r == 0) return {{0, 0}};
  int x = r;
  int y = 0;
  int err = 1 - r;
  while (x >= y) {
    const std::pair<int, int> octant[8] = {{y, x},  {x, y},  {x, -y}, {y, -x},
                                           {-y, -x}, {-x, -y}, {-x, y}, {-y, x}};
    pts.insert(pts.end(), std::begin(octant), std::end(octant));
    ++y;
    if (err < 0) {
      err += 2 * y + 1;
    } else {
      --x;
      err += 2 * (y - x) + 1;
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

std::vector<CircleParam> hough_circles(const BinaryMask& mask, const HoughConfig& cfg) {
  if (cfg.radius_min < 1 || cfg.radius_max < cfg.radius_min) {
    throw InvalidInput("hough_circles: radius_range must be nonempty");
  }
  if (mask.count() == 0) return {};
  const int h = mask.height();
  const int w = mask.width();
  const int n_r = cfg.radius_max - cfg.radius_min + 1;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<int> acc(plane * n_r, 0);

  std::vector<std::pair<int, int>> fg;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (mask(y, x)) fg.emplace_back(y, x);

  for (int ri = 0; ri < n_r; ++ri) {
    const auto offsets = circle_offsets(cfg.radius_min + ri);
    int* slab = acc.data() + plane * ri;
    for (const auto& [y, x] : fg) {
      for (const auto& [dy, dx] : offsets) {
        const int cy = y - dy;
        const int cx = x - dx;
        if (cy >= 0 && cy < h && cx >= 0 && cx < w) ++slab[static_cast<std::size_t>(cy) * w + cx];
      }
    }
  }

  const int threshold = std::max(1, cfg.vote_threshold);
  auto at = [&](int ri, int y, int x) { return acc[plane * ri + static_cast<std::size_t>(y) * w + x]; };
  struct Peak {
    int votes;
    std::size_t scan;
    int ri;
    int y;
    int x;
  };
  std::vector<Peak> peaks;
  for (int ri = 0; ri < n_r; ++ri) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int v = at(ri, y, x);
        if (v < threshold) continue;
        const std::size_t scan = plane * ri + static_cast<std::size_t>(y) * w + x;
        bool is_peak = true;
        for (int dr = -1; dr <= 1 && is_peak; ++dr) {
          for (int dy = -1; dy <= 1 && is_peak; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (dr == 0 && dy == 0 && dx == 0) continue;
              const int rr = ri + dr;
              const int yy = y + dy;
              const int xx = x + dx;
              if (rr < 0 || rr >= n_r || yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
              const int nv = at(rr, yy, xx);
              const std::size_t nscan = plane * rr + static_cast<std::size_t>(yy) * w + xx;
              if (nv > v || (nv == v && nscan < scan)) {
                is_peak = false;
                break;
              }
            }
          }
        }
        if (is_peak) peaks.push_back({v, scan, ri, y, x});
      }
    }
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    return a.votes != b.votes ? a.votes > b.votes : a.scan < b.scan;
  });

  std::vector<CircleParam> circles;
  for (const auto& p : peaks) {
    const bool suppressed = std::any_of(circles.begin(), circles.end(), [&](const CircleParam& c) {
      return std::max(std::abs(c.cx - p.x), std::abs(c.cy - p.y)) <= cfg.center_suppression;
    });
    if (!suppressed) {
      circles.push_back({static_cast<double>(p.x), static_cast<double>(p.y),
                         static_cast<double>(cfg.radius_min + p.ri), p.votes});
    }
  }
  return circles;
}

BinaryMask rasterize(int height, int width, const std::vector<LineParam>& lines,
                     const std::vector<CircleParam>& circles) {
  BinaryMask out(height, width);
  for (const auto& line : lines) plot_line(out, line);
  for (const auto& circle : circles) plot_circle(out, circle);
  return out;
}

GrayImage draw_primitives(const GrayImage& img, const std::vector<LineParam>& lines,
                          const std::vector<CircleParam>& circles) {
  GrayImage out = img;
  const BinaryMask strokes = rasterize(img.height(), img.width(), lines, circles);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (strokes(y, x)) out(y, x) = 1.0;
  return out;
}

BrokenLinePrior broken_line_prior_maps(const GrayImage& img, MeshType mesh_type,
                                       const HoughConfig& cfg) {
  const HoughConfig resolved = resolve(cfg, img.height(), img.width(), mesh_type);
  validate(resolved);
  BrokenLinePrior prior;
  prior.observed = image::binarize(img, image::otsu_threshold(img), Polarity::kAbove);
  if (mesh_type == MeshType::kSquare) {
    prior.lines = hough_lines(prior.observed, resolved);
  } else {
    prior.circles = hough_circles(prior.observed, resolved);
  }
  prior.drawn = draw_primitives(img, prior.lines, prior.circles);
  prior.strokes = rasterize(img.height(), img.width(), prior.lines, prior.circles);
  const BinaryMask near_metal = image::dilate(prior.observed, resolved.match_tolerance);
  prior.disagreement = image::mask_intersection(prior.strokes, image::mask_complement(near_metal));
  prior.mask = image::dilate(prior.disagreement, resolved.dilate_radius);
  return prior;
}

BinaryMask broken_line_prior(const GrayImage& img, MeshType mesh_type, const HoughConfig& cfg) {
  return broken_line_prior_maps(img, mesh_type, cfg).mask;
}

std::string format_primitives(const std::vector<LineParam>& lines,
                              const std::vector<CircleParam>& circles) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (const auto& l : lines) os << "line " << l.rho << ' ' << l.theta << ' ' << l.votes << '\n';
  for (const auto& c : circles) {
    os << "circle " << c.cx << ' ' << c.cy << ' ' << c.r << ' ' << c.votes << '\n';
  }
  return os.str();
}

}  // namespace meshinspect::hough
