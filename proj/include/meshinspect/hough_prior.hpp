#pragma once

#include "meshinspect/image.hpp"

#include <utility>
#include <vector>

namespace meshinspect {

enum class MeshType { kSquare, kCircular };

/// Line x*cos(theta) + y*sin(theta) = rho with x = column, y = row.
struct LineParam {
  double rho = 0.0;
  double theta = 0.0;  ///< radians in [0, pi)
  int votes = 0;
};

struct CircleParam {
  double cx = 0.0;  ///< column
  double cy = 0.0;  ///< row
  double r = 0.0;
  int votes = 0;
};

struct HoughConfig {
  double rho_resolution = 1.0;       ///< pixels
  double theta_resolution = 0.0;     ///< radians; 0 means one degree
  int vote_threshold = 0;            ///< 0 means derived from image/radius (see hough::resolve)
  int radius_min = 0;                ///< 0/0 means [4, min(h,w)/2]
  int radius_max = 0;
  int dilate_radius = 2;
  int match_tolerance = 1;           ///< metal search radius around a stroke pixel
  int center_suppression = 2;        ///< circles: drop weaker centres within this Chebyshev distance
};

/// Lines/circles detected on the binarized input plus the derived prior.
struct BrokenLinePrior {
  BinaryMask observed;       ///< Otsu-binarized input (metal = 1)
  std::vector<LineParam> lines;
  std::vector<CircleParam> circles;
  GrayImage drawn;           ///< input with primitives drawn at 1.0
  BinaryMask strokes;        ///< rasterized primitives
  BinaryMask disagreement;   ///< strokes with no metal within match_tolerance
  BinaryMask mask;           ///< dilated disagreement: the prior
};

namespace hough {

/// Default line vote threshold as a fraction of min(h, w). At 0.5, 45-degree
/// diagonals through a 2/16 lattice collect exactly that many votes.
inline constexpr double kLineVoteFraction = 0.6;

/// Fills in derived defaults for a given image size and mesh type.
HoughConfig resolve(const HoughConfig& cfg, int height, int width, MeshType mesh_type);

void validate(const HoughConfig& cfg);

/// Votes for every (rho, theta) cell; exposed for recount oracles in tests.
struct LineAccumulator {
  int n_rho = 0;
  int n_theta = 0;
  double rho_resolution = 1.0;
  double theta_resolution = 0.0;
  double rho_offset = 0.0;  ///< rho of bin 0
  std::vector<int> votes;   ///< theta-major: votes[t * n_rho + r]

  int at(int theta_bin, int rho_bin) const {
    return votes[static_cast<std::size_t>(theta_bin) * n_rho + rho_bin];
  }
  double rho_of(int rho_bin) const { return rho_offset + rho_bin * rho_resolution; }
  double theta_of(int theta_bin) const { return theta_bin * theta_resolution; }
};

LineAccumulator line_accumulator(const BinaryMask& mask, const HoughConfig& cfg);

/// Local maxima (3x3 cell neighbourhood) with votes >= threshold, sorted by
/// votes descending; plateau ties resolved in scan order.
std::vector<LineParam> hough_lines(const BinaryMask& mask, const HoughConfig& cfg);

/// Integer offsets of the midpoint-rasterized circle of radius r, deduplicated.
std::vector<std::pair<int, int>> circle_offsets(int r);

std::vector<CircleParam> hough_circles(const BinaryMask& mask, const HoughConfig& cfg);

/// 1-pixel strokes of the given primitives.
BinaryMask rasterize(int height, int width, const std::vector<LineParam>& lines,
                     const std::vector<CircleParam>& circles);

/// Copy of img with primitives set to 1.0.
GrayImage draw_primitives(const GrayImage& img, const std::vector<LineParam>& lines,
                          const std::vector<CircleParam>& circles);

BrokenLinePrior broken_line_prior_maps(const GrayImage& img, MeshType mesh_type,
                                       const HoughConfig& cfg = {});
BinaryMask broken_line_prior(const GrayImage& img, MeshType mesh_type, const HoughConfig& cfg = {});

/// One primitive per line: "line <rho> <theta> <votes>" / "circle <cx> <cy> <r> <votes>".
std::string format_primitives(const std::vector<LineParam>& lines,
                              const std::vector<CircleParam>& circles);

}  // namespace hough
}  // namespace meshinspect
