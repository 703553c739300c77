#include "cli_support.hpp"

#include "meshinspect/mesh_synth.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace meshinspect::cli {

void DetectorOptions::add_to(CLI::App& app) {
  auto* g = "Detector";
  app.add_option("--mesh-type", mesh_type, "square | circular")->group(g)->capture_default_str();
  app.add_option("--lambda", lambda, "sparse weight (default: 0.11 square, 0.06 circular)")->group(g);
  app.add_option("--beta", beta, "noise weight (default: 0.003 square, 0.004 circular)")->group(g);
  app.add_option("--rho", rho, "penalty parameter")->group(g)->capture_default_str();
  app.add_option("--lowrank-mode", lowrank_mode, "nuclear | schatten_p_truncated")->group(g)->capture_default_str();
  app.add_option("--p", p, "Schatten exponent")->group(g)->capture_default_str();
  app.add_option("--tau", tau, "truncation rank")->group(g)->capture_default_str();
  app.add_option("--maxstep", maxstep, "iteration cap")->group(g)->capture_default_str();
  app.add_option("--epsilon", epsilon, "residual tolerance")->group(g)->capture_default_str();
  app.add_option("--w-min", w_min, "weight at prior pixels")->group(g)->capture_default_str();
  app.add_option("--weight-mode", weight_mode, "two_level | graded")->group(g)->capture_default_str();
  app.add_option("--weight-blur", weight_blur, "graded mode blur radius")->group(g)->capture_default_str();
  app.add_option("--k", k, "threshold multiplier on std(E)")->group(g)->capture_default_str();
  app.add_option("--t1", t1, "manual lower threshold")->group(g);
  app.add_option("--t2", t2, "manual upper threshold")->group(g);
  app.add_option("--sides", sides, "low-pass square sides (3, increasing)")
      ->group(g)->expected(3)->delimiter(',')->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
      ->capture_default_str();
  app.add_option("--k1", k1, "fusion coefficient")->group(g)->capture_default_str();
  app.add_option("--k2", k2, "fusion coefficient")->group(g)->capture_default_str();
  app.add_option("--k3", k3, "fusion coefficient")->group(g)->capture_default_str();
  app.add_option("--fusion-threshold", fusion_threshold, "metal_fill | otsu | fixed")->group(g)->capture_default_str();
  app.add_option("--fusion-level", fusion_level, "level for --fusion-threshold fixed")->group(g)->capture_default_str();
  app.add_option("--rho-resolution", rho_resolution, "Hough rho bin, pixels")->group(g)->capture_default_str();
  app.add_option("--theta-resolution", theta_resolution_deg, "Hough theta bin, degrees")->group(g)->capture_default_str();
  app.add_option("--vote-threshold", vote_threshold, "Hough votes; 0 derives from image size")->group(g)->capture_default_str();
  app.add_option("--radius-min", radius_min, "circle search radius")->group(g)->capture_default_str();
  app.add_option("--radius-max", radius_max, "circle search radius")->group(g)->capture_default_str();
  app.add_option("--ring-radius", ring_radius, "known ring radius; searches [r-1, r+1]")->group(g)->capture_default_str();
  app.add_option("--dilate-radius", dilate_radius, "broken-line prior dilation")->group(g)->capture_default_str();
  app.add_option("--match-tolerance", match_tolerance, "metal search radius around strokes")->group(g)->capture_default_str();
  app.add_option("--center-suppression", center_suppression, "circle centre suppression distance")->group(g)->capture_default_str();
  app.add_flag("--no-block-prior", no_block_prior, "disable the spectral prior")->group(g);
  app.add_flag("--no-broken-prior", no_broken_prior, "disable the Hough prior")->group(g);
}

DetectorConfig DetectorOptions::resolve() const {
  return resolve_for(parse_mesh_type(mesh_type), ring_radius);
}

DetectorConfig DetectorOptions::resolve_for(MeshType type, int ring) const {
  DetectorConfig cfg = DetectorConfig::for_mesh(type);
  if (lambda) cfg.solver.lambda = *lambda;
  if (beta) cfg.solver.beta = *beta;
  cfg.solver.rho = rho;
  cfg.solver.lowrank_mode = parse_lowrank_mode(lowrank_mode);
  cfg.solver.p = p;
  cfg.solver.tau = tau;
  cfg.solver.maxstep = maxstep;
  cfg.solver.epsilon = epsilon;
  cfg.solver.validate();

  cfg.w_min = w_min;
  if (weight_mode == "two_level") {
    cfg.weight_mode = WeightMode::kTwoLevel;
  } else if (weight_mode == "graded") {
    cfg.weight_mode = WeightMode::kGraded;
  } else {
    throw InvalidInput("unknown weight_mode: " + weight_mode);
  }
  if (!(w_min > 0.0 && w_min <= 1.0)) throw InvalidInput("w_min must lie in (0, 1]");
  cfg.weight_blur_radius = weight_blur;
  if (!(k > 0.0)) throw InvalidInput("k must be > 0");
  cfg.k = k;
  cfg.t1 = t1;
  cfg.t2 = t2;
  if (t1 && t2 && *t1 > *t2) throw InvalidInput("t1 must not exceed t2");

  if (sides.size() != 3) throw InvalidInput("sides needs three values");
  cfg.spectral.sides = {sides[0], sides[1], sides[2]};
  if (!(sides[0] > 0 && sides[0] < sides[1] && sides[1] < sides[2])) {
    throw InvalidInput("sides must be positive and strictly increasing");
  }
  cfg.spectral.weights = {k1, k2, k3};
  if (fusion_threshold == "metal_fill") {
    cfg.spectral.threshold_mode = FusionThreshold::kMetalFill;
  } else if (fusion_threshold == "otsu") {
    cfg.spectral.threshold_mode = FusionThreshold::kOtsu;
  } else if (fusion_threshold == "fixed") {
    cfg.spectral.threshold_mode = FusionThreshold::kFixed;
  } else {
    throw InvalidInput("unknown fusion_threshold: " + fusion_threshold);
  }
  cfg.spectral.fixed_threshold = fusion_level;

  cfg.hough.rho_resolution = rho_resolution;
  cfg.hough.theta_resolution = theta_resolution_deg * std::numbers::pi / 180.0;
  if (!(rho_resolution > 0.0) || !(theta_resolution_deg > 0.0)) {
    throw InvalidInput("Hough resolutions must be > 0");
  }
  if (vote_threshold < 0) throw InvalidInput("vote_threshold must be >= 0");
  cfg.hough.vote_threshold = vote_threshold;
  if (ring > 0 && radius_min == 0 && radius_max == 0) {
    pipeline::set_ring_radius_hint(cfg, ring);
  } else {
    cfg.hough.radius_min = radius_min;
    cfg.hough.radius_max = radius_max;
  }
  cfg.hough.dilate_radius = dilate_radius;
  cfg.hough.match_tolerance = match_tolerance;
  cfg.hough.center_suppression = center_suppression;
  if (dilate_radius < 0 || match_tolerance < 0 || center_suppression < 0 || weight_blur < 0) {
    throw InvalidInput("radii must be >= 0");
  }
  cfg.use_block_prior = !no_block_prior;
  cfg.use_broken_prior = !no_broken_prior;
  return cfg;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const DetectorConfig& cfg) {
  const char* fusion = cfg.spectral.threshold_mode == FusionThreshold::kMetalFill ? "metal_fill"
                       : cfg.spectral.threshold_mode == FusionThreshold::kOtsu    ? "otsu"
                                                                                  : "fixed";
  return {
      {"mesh_type", to_string(cfg.mesh_type)},
      {"solver",
       {{"lambda", cfg.solver.lambda},
        {"beta", cfg.solver.beta},
        {"rho", cfg.solver.rho},
        {"lowrank_mode", to_string(cfg.solver.lowrank_mode)},
        {"p", cfg.solver.p},
        {"tau", cfg.solver.tau},
        {"maxstep", cfg.solver.maxstep},
        {"epsilon", cfg.solver.epsilon}}},
      {"weights",
       {{"w_min", cfg.w_min},
        {"mode", cfg.weight_mode == WeightMode::kTwoLevel ? "two_level" : "graded"},
        {"blur_radius", cfg.weight_blur_radius}}},
      {"segmentation", {{"k", cfg.k}, {"t1", optional_json(cfg.t1)}, {"t2", optional_json(cfg.t2)}}},
      {"spectral",
       {{"enabled", cfg.use_block_prior},
        {"sides", cfg.spectral.sides},
        {"k1", cfg.spectral.weights.k1},
        {"k2", cfg.spectral.weights.k2},
        {"k3", cfg.spectral.weights.k3},
        {"threshold", fusion},
        {"fixed_level", cfg.spectral.fixed_threshold}}},
      {"hough",
       {{"enabled", cfg.use_broken_prior},
        {"rho_resolution", cfg.hough.rho_resolution},
        {"theta_resolution_rad", cfg.hough.theta_resolution},
        {"vote_threshold", cfg.hough.vote_threshold},
        {"radius_min", cfg.hough.radius_min},
        {"radius_max", cfg.hough.radius_max},
        {"dilate_radius", cfg.hough.dilate_radius},
        {"match_tolerance", cfg.hough.match_tolerance},
        {"center_suppression", cfg.hough.center_suppression}}},
  };
}

json to_json(const MetricsReport& m) {
  return {{"tp", m.counts.tp},         {"fp", m.counts.fp},      {"tn", m.counts.tn},
          {"fn", m.counts.fn},         {"tpr", optional_json(m.tpr)}, {"fpr", optional_json(m.fpr)},
          {"ppv", optional_json(m.ppv)}, {"npv", optional_json(m.npv)}, {"f", optional_json(m.f)},
          {"gamma", m.gamma}};
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args, const CLI::App& app) {
  if (args.empty()) return args;
  std::optional<std::string> path;
  std::size_t config_at = 0;
  std::size_t config_len = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      config_at = i;
      config_len = 2;
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      config_at = i;
      config_len = 1;
      break;
    }
  }
  if (!path) return args;
  const CLI::App* sub = nullptr;
  for (const auto* s : app.get_subcommands([](const CLI::App*) { return true; })) {
    if (s->get_name() == args[0]) sub = s;
  }
  if (!sub) throw InvalidInput("--config must follow a subcommand");

  std::vector<std::string> injected;
  std::istringstream in(read_text(*path));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput(*path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    for (auto& c : key)
      if (c == '_') c = '-';
    if (key == "config" || !sub->get_option_no_throw("--" + key)) {
      throw InvalidInput(*path + ":" + std::to_string(lineno) + ": unknown key '" + key + "' for " +
                         sub->get_name());
    }
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out;
  out.push_back(args[0]);
  out.insert(out.end(), injected.begin(), injected.end());
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (i >= config_at && i < config_at + config_len) continue;
    out.push_back(args[i]);
  }
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir.string());
}

namespace {

std::filesystem::path temp_sibling(const std::filesystem::path& path) {
  // Keep the extension: the image writers choose the format from it.
  return path.parent_path() / (".tmp." + path.filename().string());
}

void commit(const std::filesystem::path& tmp, const std::filesystem::path& path) {
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write: " + path.string());
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = temp_sibling(path);
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + path.string());
    out << text;
    if (!out) throw IoError("cannot write: " + path.string());
  }
  commit(tmp, path);
}

void save_gray_atomic(const GrayImage& img, const std::filesystem::path& path) {
  const auto tmp = temp_sibling(path);
  image::save_gray(img, tmp);
  commit(tmp, path);
}

void save_mask_atomic(const BinaryMask& mask, const std::filesystem::path& path) {
  const auto tmp = temp_sibling(path);
  image::save_mask(mask, tmp);
  commit(tmp, path);
}

std::string format_matrix(const RowMatrix& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << '\t';
      os << m(r, c);
    }
    os << '\n';
  }
  return os.str();
}

RowMatrix parse_matrix_file(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::vector<double> values;
    std::string tok;
    while (row >> tok) {
      try {
        values.push_back(std::stod(tok));
      } catch (const std::logic_error&) {
        throw IoError("bad matrix value '" + tok + "' in " + path.string());
      }
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw IoError("ragged matrix rows in " + path.string());
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty() || rows.front().empty()) throw IoError("empty matrix in " + path.string());
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

std::vector<double> parse_grid(const std::string& text) {
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<double> parts;
      std::istringstream in(text);
      std::string tok;
      while (std::getline(in, tok, ':')) parts.push_back(std::stod(tok));
      if (parts.size() != 3) throw InvalidInput("grid range must be lo:hi:step");
      return evaluation::linspace_step(parts[0], parts[1], parts[2]);
    }
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    if (out.empty()) throw InvalidInput("empty grid");
    return out;
  } catch (const InvalidInput&) {
    throw;
  } catch (const std::logic_error&) {
    throw InvalidInput("bad grid specification: " + text);
  }
}

}  // namespace meshinspect::cli
