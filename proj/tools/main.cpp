#include "cli_support.hpp"

#include "meshinspect/evaluation.hpp"
#include "meshinspect/mesh_synth.hpp"
#include "meshinspect/optics.hpp"
#include "meshinspect/scan_planner.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

using namespace meshinspect;
using namespace meshinspect::cli;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit_report(const json& report, const std::optional<fs::path>& dir) {
  const std::string text = report.dump(2) + "\n";
  if (dir) write_text_atomic(*dir / "report.json", text);
  std::cout << text;
}

json trace_json(const Decomposition& d) {
  json rows = json::array();
  for (const auto& t : d.trace) rows.push_back({{"iteration", t.iteration}, {"residual", t.residual}, {"objective", t.objective}});
  return rows;
}

DetectorConfig resolve_or_usage(const DetectorOptions& opts) {
  try {
    return opts.resolve();
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------- detect

struct DetectArgs {
  DetectorOptions det;
  std::vector<std::string> images;
  std::string out;
  int workers = 1;
  bool invert = false;
  bool dump = false;
};

int cmd_detect(const DetectArgs& a) {
  const DetectorConfig cfg = resolve_or_usage(a.det);
  if (a.workers < 1) throw UsageError("workers must be >= 1");
  const fs::path out(a.out);
  ensure_dir(out);

  std::vector<json> rows(a.images.size());
  std::vector<bool> ok(a.images.size(), false);
  pipeline::parallel_for(a.images.size(), a.workers, [&](std::size_t i) {
    const fs::path path(a.images[i]);
    const std::string stem = path.stem().string();
    json row = {{"input", a.images[i]}};
    try {
      const GrayImage img = image::load_gray(path, a.invert);
      const Detection det = pipeline::detect(img, cfg);
      const auto& seg = det.segmentation;
      save_mask_atomic(seg.defect_mask, out / (stem + "_defect.png"));
      save_mask_atomic(seg.broken_mask, out / (stem + "_broken.png"));
      save_mask_atomic(seg.block_mask, out / (stem + "_block.png"));
      if (a.dump) {
        if (cfg.use_block_prior) save_mask_atomic(det.priors.block.mask, out / (stem + "_block_prior.png"));
        if (cfg.use_broken_prior) save_mask_atomic(det.priors.broken.mask, out / (stem + "_broken_prior.png"));
        save_gray_atomic(weights::to_heatmap(det.priors.weights), out / (stem + "_weights.png"));
        save_gray_atomic(det.decomposition.L, out / (stem + "_L.png"));
        write_text_atomic(out / (stem + "_E.tsv"), format_matrix(det.decomposition.E.matrix()));
        write_text_atomic(out / (stem + "_trace.tsv"), rpca::format_trace(det.decomposition));
      }
      row["ok"] = true;
      row["t1"] = seg.t1;
      row["t2"] = seg.t2;
      row["iterations"] = det.decomposition.iterations;
      row["termination"] = to_string(det.decomposition.termination);
      row["trace"] = trace_json(det.decomposition);
      row["defect_pixels"] = seg.defect_mask.count();
      row["broken_pixels"] = seg.broken_mask.count();
      row["block_pixels"] = seg.block_mask.count();
      row["block_prior_density"] = cfg.use_block_prior ? det.priors.block.mask.density() : 0.0;
      row["broken_prior_density"] = cfg.use_broken_prior ? det.priors.broken.mask.density() : 0.0;
      ok[i] = true;
    } catch (const std::exception& e) {
      row["ok"] = false;
      row["error"] = e.what();
      std::cerr << "error: " << a.images[i] << ": " << e.what() << "\n";
    }
    rows[i] = std::move(row);
  });
  json report = {{"command", "detect"},
                 {"parameters", to_json(cfg)},
                 {"invert", a.invert},
                 {"workers", a.workers},
                 {"images", rows}};
  emit_report(report, out);
  return std::all_of(ok.begin(), ok.end(), [](bool b) { return b; }) ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- prior

struct PriorArgs {
  DetectorOptions det;
  std::string input;
  std::string out;
  bool invert = false;
};

int cmd_prior(const PriorArgs& a) {
  const DetectorConfig cfg = resolve_or_usage(a.det);
  const fs::path out(a.out);
  ensure_dir(out);
  const GrayImage img = image::load_gray(a.input, a.invert);
  const BlockPrior block = spectral::block_defect_prior_maps(img, cfg.spectral);
  const BrokenLinePrior broken = hough::broken_line_prior_maps(img, cfg.mesh_type, cfg.hough);
  save_mask_atomic(block.mask, out / "block_prior.png");
  save_mask_atomic(broken.mask, out / "broken_prior.png");
  save_gray_atomic(image::normalize(block.fused), out / "fusion.png");
  save_gray_atomic(broken.drawn, out / "drawn.png");
  write_text_atomic(out / "primitives.txt", hough::format_primitives(broken.lines, broken.circles));
  const HoughConfig resolved = hough::resolve(cfg.hough, img.height(), img.width(), cfg.mesh_type);
  json report = {{"command", "prior"},
                 {"input", a.input},
                 {"parameters", to_json(cfg)},
                 {"resolved_vote_threshold", resolved.vote_threshold},
                 {"resolved_radius_range", {resolved.radius_min, resolved.radius_max}},
                 {"fusion_threshold", block.threshold},
                 {"block_prior_density", block.mask.density()},
                 {"broken_prior_density", broken.mask.density()},
                 {"lines", broken.lines.size()},
                 {"circles", broken.circles.size()}};
  emit_report(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- decompose

struct DecomposeArgs {
  DetectorOptions det;
  std::string input;
  std::string out;
  bool invert = false;
  bool uniform = false;
};

int cmd_decompose(const DecomposeArgs& a) {
  const DetectorConfig cfg = resolve_or_usage(a.det);
  const fs::path out(a.out);
  ensure_dir(out);
  const GrayImage img = image::load_gray(a.input, a.invert);
  const WeightMatrix w = a.uniform ? WeightMatrix::uniform(img.height(), img.width())
                                   : pipeline::compute_priors(img, cfg).weights;
  const Decomposition d = rpca::solve(img, w, cfg.solver);
  write_text_atomic(out / "E.tsv", format_matrix(d.E.matrix()));
  write_text_atomic(out / "trace.tsv", rpca::format_trace(d));
  save_gray_atomic(d.L, out / "L.png");
  save_gray_atomic(image::normalize(d.E), out / "E.png");
  save_gray_atomic(image::normalize(d.N), out / "N.png");
  save_gray_atomic(weights::to_heatmap(w), out / "weights.png");
  json report = {{"command", "decompose"},
                 {"input", a.input},
                 {"parameters", to_json(cfg)},
                 {"uniform_weights", a.uniform},
                 {"iterations", d.iterations},
                 {"termination", to_string(d.termination)},
                 {"svd_threads", d.svd_threads},
                 {"trace", trace_json(d)}};
  emit_report(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- segment

struct SegmentArgs {
  DetectorOptions det;
  std::string e_path;
  std::string out;
};

int cmd_segment(const SegmentArgs& a) {
  const DetectorConfig cfg = resolve_or_usage(a.det);
  const fs::path out(a.out);
  ensure_dir(out);
  const GrayImage e(parse_matrix_file(a.e_path));
  const SegmentationResult seg = pipeline::segment(e, cfg);
  save_mask_atomic(seg.defect_mask, out / "defect.png");
  save_mask_atomic(seg.broken_mask, out / "broken.png");
  save_mask_atomic(seg.block_mask, out / "block.png");
  json report = {{"command", "segment"},
                 {"input", a.e_path},
                 {"k", cfg.k},
                 {"manual_t1", optional_json(cfg.t1)},
                 {"manual_t2", optional_json(cfg.t2)},
                 {"t1", seg.t1},
                 {"t2", seg.t2},
                 {"defect_pixels", seg.defect_mask.count()},
                 {"broken_pixels", seg.broken_mask.count()},
                 {"block_pixels", seg.block_mask.count()}};
  emit_report(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  DetectorOptions det;
  std::string dataset;
  std::string out;
  std::string pred;
  int limit = 0;
  int workers = 1;
  double gamma = 1.0;
};

std::vector<DatasetItem> load_dataset(const std::string& dir, int limit) {
  auto items = synth::read_dataset(dir);
  if (limit > 0 && static_cast<std::size_t>(limit) < items.size()) items.resize(static_cast<std::size_t>(limit));
  if (items.empty()) throw IoError("dataset is empty: " + dir);
  return items;
}

DetectorConfig config_for_item(const DetectorOptions& opts, const DatasetItem& item) {
  try {
    return opts.resolve_for(item.mesh.mesh_type,
                            item.mesh.mesh_type == MeshType::kCircular ? item.mesh.resolved_ring_radius() : 0);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
}

int cmd_eval(const EvalArgs& a) {
  if (!(a.gamma > 0.0)) throw UsageError("gamma must be > 0");
  (void)resolve_or_usage(a.det);
  const fs::path out(a.out);
  ensure_dir(out);
  const auto items = load_dataset(a.dataset, a.limit);
  std::vector<DetectorConfig> cfgs;
  for (const auto& item : items) cfgs.push_back(config_for_item(a.det, item));

  std::vector<std::optional<MetricsReport>> results(items.size());
  std::vector<std::string> errors(items.size());
  pipeline::parallel_for(items.size(), a.workers, [&](std::size_t i) {
    try {
      BinaryMask pred;
      if (!a.pred.empty()) {
        pred = image::load_mask(fs::path(a.pred) / (items[i].id + ".png"));
      } else {
        pred = pipeline::detect(items[i].data.image, cfgs[i]).segmentation.defect_mask;
      }
      results[i] = evaluation::metrics(evaluation::confusion(pred, items[i].gt_union()), a.gamma);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::ostringstream table;
  table << "id\tkind\tTPR\tFPR\tPPV\tNPV\tf\n";
  std::map<std::string, std::pair<double, int>> per_kind;
  double total = 0.0;
  int evaluated = 0;
  json failures = json::array();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string kind = to_string(items[i].defects.kind);
    if (!results[i]) {
      std::cerr << "error: " << items[i].id << ": " << errors[i] << "\n";
      failures.push_back({{"id", items[i].id}, {"error", errors[i]}});
      continue;
    }
    const auto& m = *results[i];
    table << items[i].id << '\t' << kind << '\t' << evaluation::format_metric(m.tpr) << '\t'
          << evaluation::format_metric(m.fpr) << '\t' << evaluation::format_metric(m.ppv) << '\t'
          << evaluation::format_metric(m.npv) << '\t' << evaluation::format_metric(m.f) << '\n';
    auto& [sum, n] = per_kind[kind];
    sum += evaluation::f_or_zero(m);
    ++n;
    total += evaluation::f_or_zero(m);
    ++evaluated;
  }
  write_text_atomic(out / "metrics.tsv", table.str());
  json kinds = json::object();
  for (const auto& [kind, sn] : per_kind) kinds[kind] = {{"images", sn.second}, {"mean_f", sn.first / sn.second}};
  json report = {{"command", "eval"},
                 {"dataset", a.dataset},
                 {"predictions", a.pred.empty() ? json("detector") : json(a.pred)},
                 {"gamma", a.gamma},
                 {"parameters", to_json(cfgs.front())},
                 {"images", items.size()},
                 {"evaluated", evaluated},
                 {"mean_f", evaluated ? json(total / evaluated) : json(nullptr)},
                 {"per_kind", kinds},
                 {"failures", failures}};
  emit_report(report, out);
  return failures.empty() ? kExitOk : kExitPartial;
}

// ---------------------------------------------------------------- grid-search

struct GridArgs {
  DetectorOptions det;
  std::string dataset;
  std::string out;
  std::string lambdas = "0.05:0.2:0.03";
  std::string betas = "0.001:0.005:0.001";
  int limit = 0;
  int workers = 1;
};

int cmd_grid_search(const GridArgs& a) {
  const DetectorConfig base = resolve_or_usage(a.det);
  std::vector<double> lambdas;
  std::vector<double> betas;
  try {
    lambdas = parse_grid(a.lambdas);
    betas = parse_grid(a.betas);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const fs::path out(a.out);
  ensure_dir(out);
  const auto items = load_dataset(a.dataset, a.limit);
  std::vector<evaluation::LabeledImage> data;
  for (const auto& item : items) data.push_back({item.id, item.data.image, item.gt_union(), config_for_item(a.det, item)});
  const auto result = evaluation::grid_search(data, lambdas, betas, base.solver, a.workers);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  write_text_atomic(out / "scores.tsv", evaluation::format_score_table(data, result));
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back({{"lambda", c.lambda}, {"beta", c.beta}, {"mean_f", optional_json(c.mean_f)},
                     {"error", c.error.empty() ? json(nullptr) : json(c.error)}});
  }
  json best = nullptr;
  if (result.best) {
    const auto& b = result.best_cell();
    best = {{"lambda", b.lambda}, {"beta", b.beta}, {"mean_f", *b.mean_f}};
  }
  json report = {{"command", "grid-search"},
                 {"dataset", a.dataset},
                 {"images", items.size()},
                 {"parameters", to_json(base)},
                 {"lambdas", lambdas},
                 {"betas", betas},
                 {"best", best},
                 {"cells", cells},
                 {"warnings", result.warnings}};
  emit_report(report, out);
  return result.best ? (result.warnings.empty() ? kExitOk : kExitPartial) : kExitPartial;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out;
  int n = 60;
  std::string mesh_type = "square";
  std::vector<double> mix{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  std::uint64_t seed = 0;
  int period = 0;
  int line_width = 2;
  int image_size = 256;
  double line_intensity = 0.8;
  double background_intensity = 0.2;
  double gradient = 0.1;
  double noise_sigma = 0.01;
  int ring_radius = 0;
};

int cmd_synth(const SynthArgs& a) {
  MeshSpec mesh;
  std::array<double, 3> mix{};
  try {
    mesh = MeshSpec::defaults(parse_mesh_type(a.mesh_type));
    if (a.period > 0) mesh.period = a.period;
    mesh.line_width = a.line_width;
    mesh.image_size = a.image_size;
    mesh.line_intensity = a.line_intensity;
    mesh.background_intensity = a.background_intensity;
    mesh.illumination_gradient = a.gradient;
    mesh.noise_sigma = a.noise_sigma;
    mesh.ring_radius = a.ring_radius;
    mesh.validate();
    if (a.mix.size() != 3) throw InvalidInput("mix needs three proportions");
    mix = {a.mix[0], a.mix[1], a.mix[2]};
    (void)synth::split_counts(a.n, mix);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const auto items = synth::make_dataset(a.n, mesh, mix, a.seed);
  const fs::path out(a.out);
  synth::write_dataset(out, items);
  const auto counts = synth::split_counts(a.n, mix);
  json report = {{"command", "synth"},
                 {"out", a.out},
                 {"n", a.n},
                 {"seed", a.seed},
                 {"mix", mix},
                 {"counts", {{"broken", counts[0]}, {"block", counts[1]}, {"mixed", counts[2]}}},
                 {"mesh",
                  {{"mesh_type", to_string(mesh.mesh_type)},
                   {"period", mesh.period},
                   {"line_width", mesh.line_width},
                   {"image_size", mesh.image_size},
                   {"ring_radius", mesh.mesh_type == MeshType::kCircular ? json(mesh.resolved_ring_radius()) : json(nullptr)},
                   {"line_intensity", mesh.line_intensity},
                   {"background_intensity", mesh.background_intensity},
                   {"illumination_gradient", mesh.illumination_gradient},
                   {"noise_sigma", mesh.noise_sigma}}},
                 {"digest", synth::digest(items)}};
  emit_report(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- scan-plan

struct PlanArgs {
  std::string out;
  double width = 2000.0;
  double height = 2000.0;
  double step = 500.0;
  double fov = 800.0;
  double dwell = 2.0;
  double jitter = 0.0;
  std::uint64_t seed = 0;
  std::string cut;
  double pitch = 0.0;
  int tile_size = 0;
};

int cmd_scan_plan(const PlanArgs& a) {
  ScanPlan plan;
  try {
    plan = scan::plan_s_path(a.width, a.height, a.step, a.fov, a.dwell, a.jitter, a.seed);
    if (!a.cut.empty() && (!(a.pitch > 0.0) || a.tile_size <= 0)) {
      throw InvalidInput("--cut needs --pitch and --tile-size");
    }
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  const fs::path out(a.out);
  ensure_dir(out);
  write_text_atomic(out / "plan.tsv", scan::format_plan(plan));
  json report = {{"command", "scan-plan"},
                 {"region", {a.width, a.height}},
                 {"step", a.step},
                 {"fov_diameter", a.fov},
                 {"dwell", a.dwell},
                 {"jitter", a.jitter},
                 {"nodes", plan.nodes.size()},
                 {"grid", {plan.columns, plan.rows}},
                 {"overlap", plan.overlap()},
                 {"total_dwell", plan.total_dwell()}};
  if (!a.cut.empty()) {
    const GrayImage src = image::load_gray(a.cut);
    const std::vector<Tile> tiles = scan::cut_tiles(src, plan, a.pitch, a.tile_size);
    ensure_dir(out / "tiles");
    for (std::size_t i = 0; i < tiles.size(); ++i) {
      std::ostringstream name;
      name << "tile_" << std::setw(3) << std::setfill('0') << i << ".png";
      save_gray_atomic(tiles[i].image, out / "tiles" / name.str());
    }
    std::vector<std::pair<double, double>> pos;
    for (const auto& n : plan.nodes) pos.emplace_back(n.x, n.y);
    const MosaicLayout l = scan::layout(pos, a.tile_size, a.tile_size, a.pitch);
    report["cut"] = {{"source", a.cut}, {"pitch", a.pitch}, {"tile_size", a.tile_size},
                     {"footprint", {l.width, l.height}}};
  }
  emit_report(report, out);
  return kExitOk;
}

// ---------------------------------------------------------------- stitch

struct StitchArgs {
  DetectorOptions det;
  std::string plan;
  std::string tiles;
  std::string out;
  double pitch = 0.0;
  bool detect = false;
  int workers = 1;
};

int cmd_stitch(const StitchArgs& a) {
  const DetectorConfig cfg = resolve_or_usage(a.det);
  if (!(a.pitch > 0.0)) throw UsageError("pitch must be > 0");
  const ScanPlan plan = scan::parse_plan(read_text(a.plan));
  std::vector<Tile> tiles;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
    std::ostringstream name;
    name << "tile_" << std::setw(3) << std::setfill('0') << i << ".png";
    tiles.push_back({image::load_gray(fs::path(a.tiles) / name.str()), plan.nodes[i].x, plan.nodes[i].y});
  }
  const fs::path out(a.out);
  ensure_dir(out);
  json report = {{"command", "stitch"}, {"plan", a.plan}, {"tiles", tiles.size()}, {"pitch", a.pitch}};
  int code = kExitOk;
  if (!a.detect) {
    const GrayImage mosaic = scan::stitch(tiles, plan, a.pitch);
    save_gray_atomic(mosaic, out / "mosaic.png");
    report["mosaic"] = {mosaic.width(), mosaic.height()};
  } else {
    const RegionDetection r = scan::detect_over_region(tiles, plan, a.pitch, cfg, nullptr, a.workers);
    save_gray_atomic(r.mosaic, out / "mosaic.png");
    save_mask_atomic(r.region.defect_mask, out / "region_defect.png");
    save_mask_atomic(r.region.broken_mask, out / "region_broken.png");
    save_mask_atomic(r.region.block_mask, out / "region_block.png");
    json per_tile = json::array();
    for (const auto& t : r.tiles) {
      json row = {{"index", t.index}, {"ok", t.ok}};
      if (t.ok) {
        row["t1"] = t.t1;
        row["t2"] = t.t2;
        row["iterations"] = t.iterations;
        row["residual"] = t.residual;
      } else {
        row["error"] = t.error;
        code = kExitPartial;
        std::cerr << "error: tile " << t.index << ": " << t.error << "\n";
      }
      per_tile.push_back(row);
    }
    report["mosaic"] = {r.mosaic.width(), r.mosaic.height()};
    report["parameters"] = to_json(cfg);
    report["defect_pixels"] = r.region.defect_mask.count();
    report["per_tile"] = per_tile;
  }
  emit_report(report, out);
  return code;
}

// ---------------------------------------------------------------- optics

int cmd_optics(const OpticsSpec& spec, const std::string& out) {
  double mo = 0.0;
  try {
    mo = optics::optical_magnification(spec);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  std::ostringstream rounded;
  rounded << std::fixed << std::setprecision(2) << mo << "x";
  json report = {{"command", "optics"},
                 {"f_objective_mm", spec.f_objective},
                 {"f_tube_mm", spec.f_tube},
                 {"f_internal_mm", spec.f_internal},
                 {"f_relay_mm", spec.f_relay},
                 {"pixel_size_um", spec.pixel_size},
                 {"tube_ratio", optics::tube_ratio(spec)},
                 {"relay_ratio", optics::relay_ratio(spec)},
                 {"optical_magnification", mo},
                 {"optical_magnification_rounded", rounded.str()},
                 {"digital_magnification", optics::digital_magnification(spec)},
                 {"object_pixel_pitch_um", optics::object_pixel_pitch(spec)},
                 {"fov_diameter_um", spec.fov_diameter},
                 {"fov_inscribed_side_um", spec.fov_diameter / std::sqrt(2.0)}};
  std::optional<fs::path> dir;
  if (!out.empty()) {
    dir = out;
    ensure_dir(*dir);
  }
  emit_report(report, dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metallic mesh defect detection with dual-prior weighted RPCA"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "meshinspect 0.1.0");
  std::string config_help;  // parsed before CLI11 runs; registered for --help only

  DetectArgs detect_args;
  auto* detect = app.add_subcommand("detect", "Run the full pipeline on images");
  detect_args.det.add_to(*detect);
  detect->add_option("images", detect_args.images, "input images (PNG or PGM)")->required();
  detect->add_option("--out", detect_args.out, "output directory")->required();
  detect->add_option("--workers", detect_args.workers, "images processed concurrently")->capture_default_str();
  detect->add_flag("--invert", detect_args.invert, "treat dark pixels as metal");
  detect->add_flag("--dump", detect_args.dump, "also write priors, W, L, E and the solver trace");

  PriorArgs prior_args;
  auto* prior = app.add_subcommand("prior", "Compute the block and broken-line priors");
  prior_args.det.add_to(*prior);
  prior->add_option("input", prior_args.input)->required();
  prior->add_option("--out", prior_args.out)->required();
  prior->add_flag("--invert", prior_args.invert);

  DecomposeArgs dec_args;
  auto* decompose = app.add_subcommand("decompose", "Solve for L, E, N on one image");
  dec_args.det.add_to(*decompose);
  decompose->add_option("input", dec_args.input)->required();
  decompose->add_option("--out", dec_args.out)->required();
  decompose->add_flag("--invert", dec_args.invert);
  decompose->add_flag("--uniform-weights", dec_args.uniform, "W = 1 everywhere (plain weighted RPCA)");

  SegmentArgs seg_args;
  auto* segment = app.add_subcommand("segment", "Double-threshold a sparse matrix E (TSV)");
  seg_args.det.add_to(*segment);
  segment->add_option("--e", seg_args.e_path, "E matrix written by decompose/detect --dump")->required();
  segment->add_option("--out", seg_args.out)->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a synthetic dataset");
  eval_args.det.add_to(*eval);
  eval->add_option("dataset", eval_args.dataset, "directory written by synth")->required();
  eval->add_option("--out", eval_args.out)->required();
  eval->add_option("--pred", eval_args.pred, "directory of predicted masks <id>.png instead of running the detector");
  eval->add_option("--limit", eval_args.limit, "use only the first N images");
  eval->add_option("--workers", eval_args.workers)->capture_default_str();
  eval->add_option("--gamma", eval_args.gamma)->capture_default_str();

  GridArgs grid_args;
  auto* grid = app.add_subcommand("grid-search", "Scan lambda x beta on a dataset");
  grid_args.det.add_to(*grid);
  grid->add_option("dataset", grid_args.dataset)->required();
  grid->add_option("--out", grid_args.out)->required();
  grid->add_option("--lambdas", grid_args.lambdas, "lo:hi:step or a comma list")->capture_default_str();
  grid->add_option("--betas", grid_args.betas, "lo:hi:step or a comma list")->capture_default_str();
  grid->add_option("--limit", grid_args.limit);
  grid->add_option("--workers", grid_args.workers)->capture_default_str();

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic mesh dataset");
  synth_cmd->add_option("--out", synth_args.out)->required();
  synth_cmd->add_option("--n", synth_args.n)->capture_default_str();
  synth_cmd->add_option("--mesh-type", synth_args.mesh_type)->capture_default_str();
  synth_cmd->add_option("--mix", synth_args.mix, "broken,block,mixed proportions")->expected(3)->delimiter(',');
  synth_cmd->add_option("--seed", synth_args.seed)->capture_default_str();
  synth_cmd->add_option("--period", synth_args.period, "default 16 square, 32 circular");
  synth_cmd->add_option("--line-width", synth_args.line_width)->capture_default_str();
  synth_cmd->add_option("--image-size", synth_args.image_size)->capture_default_str();
  synth_cmd->add_option("--line-intensity", synth_args.line_intensity)->capture_default_str();
  synth_cmd->add_option("--background-intensity", synth_args.background_intensity)->capture_default_str();
  synth_cmd->add_option("--gradient", synth_args.gradient)->capture_default_str();
  synth_cmd->add_option("--noise-sigma", synth_args.noise_sigma)->capture_default_str();
  synth_cmd->add_option("--ring-radius", synth_args.ring_radius, "0 derives from period and width");

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("scan-plan", "Plan a serpentine scan; optionally cut tiles from an image");
  plan->add_option("--out", plan_args.out)->required();
  plan->add_option("--width", plan_args.width, "region width, um")->capture_default_str();
  plan->add_option("--height", plan_args.height, "region height, um")->capture_default_str();
  plan->add_option("--step", plan_args.step, "um")->capture_default_str();
  plan->add_option("--fov", plan_args.fov, "field-of-view diameter, um")->capture_default_str();
  plan->add_option("--dwell", plan_args.dwell, "s per node")->capture_default_str();
  plan->add_option("--jitter", plan_args.jitter, "uniform position jitter, um")->capture_default_str();
  plan->add_option("--seed", plan_args.seed, "jitter seed")->capture_default_str();
  plan->add_option("--cut", plan_args.cut, "image to cut into tiles/tile_NNN.png");
  plan->add_option("--pitch", plan_args.pitch, "um per pixel for --cut");
  plan->add_option("--tile-size", plan_args.tile_size, "tile side in pixels for --cut");

  StitchArgs stitch_args;
  auto* stitch = app.add_subcommand("stitch", "Stitch tiles into a mosaic; optionally detect per tile");
  stitch_args.det.add_to(*stitch);
  stitch->add_option("--plan", stitch_args.plan)->required();
  stitch->add_option("--tiles", stitch_args.tiles, "directory with tile_NNN.png")->required();
  stitch->add_option("--pitch", stitch_args.pitch, "um per pixel")->required();
  stitch->add_option("--out", stitch_args.out)->required();
  stitch->add_flag("--detect", stitch_args.detect, "run the detector on every tile and OR-stitch the masks");
  stitch->add_option("--workers", stitch_args.workers)->capture_default_str();

  OpticsSpec optics_spec;
  std::string optics_out;
  auto* optics_cmd = app.add_subcommand("optics", "Report magnification and sampling of the imaging system");
  optics_cmd->add_option("--f-objective", optics_spec.f_objective, "mm")->capture_default_str();
  optics_cmd->add_option("--f-tube", optics_spec.f_tube, "mm")->capture_default_str();
  optics_cmd->add_option("--f-internal", optics_spec.f_internal, "mm")->capture_default_str();
  optics_cmd->add_option("--f-relay", optics_spec.f_relay, "mm")->capture_default_str();
  optics_cmd->add_option("--pixel-size", optics_spec.pixel_size, "um")->capture_default_str();
  optics_cmd->add_option("--screen-to-sensor-ratio", optics_spec.screen_to_sensor_ratio)->capture_default_str();
  optics_cmd->add_option("--fov", optics_spec.fov_diameter, "um")->capture_default_str();
  optics_cmd->add_option("--out", optics_out, "also write report.json here");

  for (auto* sub : {detect, prior, decompose, segment, eval, grid, synth_cmd, plan, stitch, optics_cmd}) {
    sub->add_option("--config", config_help, "flat key=value file; flags override it");
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    args = expand_config(args, app);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*detect) return cmd_detect(detect_args);
    if (*prior) return cmd_prior(prior_args);
    if (*decompose) return cmd_decompose(dec_args);
    if (*segment) return cmd_segment(seg_args);
    if (*eval) return cmd_eval(eval_args);
    if (*grid) return cmd_grid_search(grid_args);
    if (*synth_cmd) return cmd_synth(synth_args);
    if (*plan) return cmd_scan_plan(plan_args);
    if (*stitch) return cmd_stitch(stitch_args);
    if (*optics_cmd) return cmd_optics(optics_spec, optics_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitUsage;
}
