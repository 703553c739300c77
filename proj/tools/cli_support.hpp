#pragma once

#include "meshinspect/evaluation.hpp"
#include "meshinspect/pipeline.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace meshinspect::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;
inline constexpr int kExitUsage = 2;

/// Flags shared by every command that runs some part of the detector.
struct DetectorOptions {
  std::string mesh_type = "square";
  std::optional<double> lambda;  ///< unset: mesh default
  std::optional<double> beta;
  double rho = 0.8;
  std::string lowrank_mode = "nuclear";
  double p = 0.75;
  int tau = 30;
  int maxstep = 10;
  double epsilon = 1e-4;

  double w_min = 0.1;
  std::string weight_mode = "two_level";
  int weight_blur = 2;

  double k = 3.0;
  std::optional<double> t1;
  std::optional<double> t2;

  std::vector<int> sides{10, 20, 40};
  double k1 = 0.8;
  double k2 = 0.2;
  double k3 = 0.3;
  std::string fusion_threshold = "metal_fill";
  double fusion_level = 0.5;

  double rho_resolution = 1.0;
  double theta_resolution_deg = 1.0;
  int vote_threshold = 0;
  int radius_min = 0;
  int radius_max = 0;
  int ring_radius = 0;
  int dilate_radius = 2;
  int match_tolerance = 1;
  int center_suppression = 2;
  bool no_block_prior = false;
  bool no_broken_prior = false;

  void add_to(CLI::App& app);
  /// Throws InvalidInput on bad enum values.
  DetectorConfig resolve() const;
  /// Same as resolve() but with the mesh type and ring radius of a dataset item.
  DetectorConfig resolve_for(MeshType type, int ring_radius) const;
};

json to_json(const DetectorConfig& cfg);
json to_json(const MetricsReport& m);
json optional_json(const std::optional<double>& v);

/// Expands "--config FILE" (flat key=value lines, '#' comments) into
/// "--key=value" arguments placed right after the subcommand name, so that
/// explicit flags take precedence. Throws InvalidInput for unknown keys.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app);

/// Write to a sibling temporary file, then rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void save_gray_atomic(const GrayImage& img, const std::filesystem::path& path);
void save_mask_atomic(const BinaryMask& mask, const std::filesystem::path& path);

/// Tab-separated full-precision matrix.
std::string format_matrix(const RowMatrix& m);
RowMatrix parse_matrix_file(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

/// "lo:hi:step" or a comma list.
std::vector<double> parse_grid(const std::string& text);

void ensure_dir(const std::filesystem::path& dir);

}  // namespace meshinspect::cli
