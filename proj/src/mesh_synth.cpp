#include "meshinspect/mesh_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace meshinspect {

MeshSpec MeshSpec::defaults(MeshType type) {
  MeshSpec m;
  m.mesh_type = type;
  if (type == MeshType::kCircular) m.period = 32;
  return m;
}

int MeshSpec::resolved_ring_radius() const {
  return ring_radius > 0 ? ring_radius : (period - 2 * line_width) / 2 - 3;
}

void MeshSpec::validate() const {
  if (!(0 < line_width && line_width < period && period < image_size)) {
    throw InvalidInput("mesh: need 0 < line_width < period < image_size");
  }
  if (line_intensity == background_intensity) throw InvalidInput("mesh: intensities must differ");
  if (noise_sigma < 0.0 || illumination_gradient < 0.0) {
    throw InvalidInput("mesh: noise_sigma and illumination_gradient must be >= 0");
  }
  if (mesh_type == MeshType::kCircular) {
    const int r = resolved_ring_radius();
    if (r < 2 || 2 * r + line_width >= period) {
      throw InvalidInput("mesh: ring radius does not fit the period");
    }
  }
}

std::string to_string(DefectKind kind) {
  switch (kind) {
    case DefectKind::kBroken: return "broken";
    case DefectKind::kBlock: return "block";
    case DefectKind::kMixed: return "mixed";
  }
  return "broken";
}

DefectKind parse_defect_kind(const std::string& text) {
  if (text == "broken") return DefectKind::kBroken;
  if (text == "block") return DefectKind::kBlock;
  if (text == "mixed") return DefectKind::kMixed;
  throw InvalidInput("unknown defect kind: " + text);
}

std::string to_string(MeshType type) { return type == MeshType::kSquare ? "square" : "circular"; }

MeshType parse_mesh_type(const std::string& text) {
  if (text == "square") return MeshType::kSquare;
  if (text == "circular") return MeshType::kCircular;
  throw InvalidInput("unknown mesh type: " + text);
}

namespace synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool on_ring(double dy, double dx, double r, int width) {
  return std::abs(std::hypot(dy, dx) - r) <= 0.5 * width;
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  return a < 0.0 ? a + two_pi : a;
}

void erase_gap(const MeshSpec& mesh, const BrokenDefect& g, const BinaryMask& lattice, GrayImage& img,
               BinaryMask& gt) {
  const int n = mesh.image_size;
  if (g.extent <= 0) throw InvalidInput("defect: extent must be positive");
  if (mesh.mesh_type == MeshType::kSquare) {
    const auto offsets = line_offsets(mesh);
    if (std::find(offsets.begin(), offsets.end(), g.line) == offsets.end()) {
      throw InvalidInput("defect: broken defect is not anchored on a mesh line");
    }
    if (g.start < 0 || g.start + g.extent > n) throw InvalidInput("defect: out of bounds");
    for (int a = g.start; a < g.start + g.extent; ++a) {
      for (int b = g.line; b < g.line + mesh.line_width; ++b) {
        const int y = g.vertical ? a : b;
        const int x = g.vertical ? b : a;
        img(y, x) = mesh.background_intensity;
        gt.set(y, x);
      }
    }
    return;
  }
  const auto centres = ring_centres(mesh);
  if (std::find(centres.begin(), centres.end(), g.row) == centres.end() ||
      std::find(centres.begin(), centres.end(), g.col) == centres.end()) {
    throw InvalidInput("defect: broken defect is not anchored on a ring centre");
  }
  const int r = mesh.resolved_ring_radius();
  const int reach = r + mesh.line_width;
  if (g.row - reach < 0 || g.row + reach >= n || g.col - reach < 0 || g.col + reach >= n) {
    throw InvalidInput("defect: out of bounds");
  }
  const double span = static_cast<double>(g.extent) / r;
  for (int y = g.row - reach; y <= g.row + reach; ++y) {
    for (int x = g.col - reach; x <= g.col + reach; ++x) {
      const double dy = y - g.row;
      const double dx = x - g.col;
      if (!lattice(y, x) || !on_ring(dy, dx, r, mesh.line_width)) continue;
      if (wrap_angle(std::atan2(dy, dx) - g.angle) < span) {
        img(y, x) = mesh.background_intensity;
        gt.set(y, x);
      }
    }
  }
}

}  // namespace

std::vector<int> line_offsets(const MeshSpec& mesh) {
  std::vector<int> out;
  for (int s = mesh.period / 2; s + mesh.line_width <= mesh.image_size; s += mesh.period) out.push_back(s);
  return out;
}

std::vector<int> ring_centres(const MeshSpec& mesh) {
  std::vector<int> out;
  for (int c = mesh.period / 2; c < mesh.image_size; c += mesh.period) out.push_back(c);
  return out;
}

BinaryMask lattice_mask(const MeshSpec& mesh) {
  mesh.validate();
  const int n = mesh.image_size;
  BinaryMask m(n, n);
  if (mesh.mesh_type == MeshType::kSquare) {
    std::vector<bool> on(static_cast<std::size_t>(n), false);
    for (int s : line_offsets(mesh))
      for (int k = 0; k < mesh.line_width; ++k) on[static_cast<std::size_t>(s + k)] = true;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (on[static_cast<std::size_t>(y)] || on[static_cast<std::size_t>(x)]) m.set(y, x);
    return m;
  }
  const double r = mesh.resolved_ring_radius();
  const int half = mesh.period / 2;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const int dy = y % mesh.period - half;
      const int dx = x % mesh.period - half;
      if (on_ring(dy, dx, r, mesh.line_width)) m.set(y, x);
    }
  }
  return m;
}

SynthImage generate(const MeshSpec& mesh, const DefectSpec& defects) {
  mesh.validate();
  const int n = mesh.image_size;
  const BinaryMask lattice = lattice_mask(mesh);
  SynthImage out{GrayImage(n, n, mesh.background_intensity), BinaryMask(n, n), BinaryMask(n, n)};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (lattice(y, x)) out.image(y, x) = mesh.line_intensity;

  for (const auto& g : defects.broken) erase_gap(mesh, g, lattice, out.image, out.gt_broken);

  const double raised = std::min(1.0, mesh.line_intensity + 0.2);
  for (const auto& b : defects.blocks) {
    if (b.side <= 0 || b.row < 0 || b.col < 0 || b.row + b.side > n || b.col + b.side > n) {
      throw InvalidInput("defect: block out of bounds");
    }
    for (int y = b.row; y < b.row + b.side; ++y) {
      for (int x = b.col; x < b.col + b.side; ++x) {
        if (out.gt_broken(y, x)) throw InvalidInput("defect: block overlaps a broken defect");
        out.image(y, x) = lattice(y, x) ? raised : mesh.line_intensity;
        out.gt_block.set(y, x);
      }
    }
  }

  const double g = mesh.illumination_gradient;
  const double span = std::max(1, 2 * (n - 1));
  std::mt19937_64 rng(mesh.seed);
  std::normal_distribution<double> noise(0.0, mesh.noise_sigma > 0.0 ? mesh.noise_sigma : 1.0);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double v = out.image(y, x) * (1.0 - 0.5 * g + g * (x + y) / span);
      if (mesh.noise_sigma > 0.0) v += noise(rng);
      out.image(y, x) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

std::array<int, 3> split_counts(int n, const std::array<double, 3>& mix) {
  if (n < 1) throw InvalidInput("dataset: n must be >= 1");
  double total = 0.0;
  for (double m : mix) {
    if (m < 0.0 || !std::isfinite(m)) throw InvalidInput("dataset: invalid proportions");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-6) throw InvalidInput("dataset: proportions must sum to 1");
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = n * mix[i];
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    rem[i] = exact - counts[i];
    assigned += counts[i];
  }
  while (assigned < n) {
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (rem[i] > rem[best] + 1e-12) best = i;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  return counts;
}

std::vector<DatasetItem> make_dataset(int n, const MeshSpec& mesh, const std::array<double, 3>& mix,
                                      std::uint64_t seed) {
  mesh.validate();
  const auto counts = split_counts(n, mix);
  const int size = mesh.image_size;
  const bool square = mesh.mesh_type == MeshType::kSquare;
  const auto lines = line_offsets(mesh);
  const auto centres = ring_centres(mesh);
  if ((square ? lines.size() : centres.size()) < 3) throw InvalidInput("dataset: mesh too coarse for defects");
  const int margin = 10;
  const int max_side = std::min(24, size - 2 * margin - 1);
  if (max_side < 12) throw InvalidInput("dataset: image too small for block defects");

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  auto random_gap = [&]() {
    BrokenDefect g;
    if (square) {
      g.vertical = uniform(0, 1) == 1;
      g.line = lines[static_cast<std::size_t>(uniform(1, static_cast<int>(lines.size()) - 2))];
      g.extent = uniform(20, std::min(30, size - 2 * margin - 1));
      g.start = uniform(margin, size - margin - g.extent);
    } else {
      g.row = centres[static_cast<std::size_t>(uniform(1, static_cast<int>(centres.size()) - 2))];
      g.col = centres[static_cast<std::size_t>(uniform(1, static_cast<int>(centres.size()) - 2))];
      g.angle = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
      g.extent = uniform(10, 16);
    }
    return g;
  };
  auto random_block = [&]() {
    BlockDefect b;
    b.side = uniform(12, max_side);
    b.row = uniform(margin, size - margin - b.side);
    b.col = uniform(margin, size - margin - b.side);
    return b;
  };

  std::vector<DatasetItem> items;
  int index = 0;
  for (int k = 0; k < 3; ++k) {
    const auto kind = static_cast<DefectKind>(k);
    for (int c = 0; c < counts[static_cast<std::size_t>(k)]; ++c, ++index) {
      DatasetItem item;
      std::ostringstream id;
      id << "img_" << std::setw(3) << std::setfill('0') << index;
      item.id = id.str();
      item.mesh = mesh;
      item.mesh.seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
      for (int attempt = 0;; ++attempt) {
        DefectSpec d;
        d.kind = kind;
        if (kind == DefectKind::kBroken) {
          d.broken = {random_gap(), random_gap()};
        } else if (kind == DefectKind::kBlock) {
          d.blocks = {random_block()};
        } else {
          const int gaps = uniform(1, 2);
          for (int i = 0; i < gaps; ++i) d.broken.push_back(random_gap());
          d.blocks = {random_block()};
        }
        try {
          item.data = generate(item.mesh, d);
          item.defects = std::move(d);
          break;
        } catch (const InvalidInput&) {
          if (attempt >= 1000) throw;
        }
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

namespace {

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void add(std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  void add(const std::string& s) {
    for (char c : s) add(static_cast<std::uint8_t>(c));
  }
};

}  // namespace

std::string digest(const std::vector<DatasetItem>& items) {
  Fnv1a f;
  for (const auto& item : items) {
    f.add(item.id);
    f.add(to_string(item.defects.kind));
    for (double v : item.data.image.values()) f.add(image::quantize(v));
    for (const BinaryMask* m : {&item.data.gt_broken, &item.data.gt_block}) {
      const auto& mat = m->matrix();
      for (Eigen::Index i = 0; i < mat.size(); ++i) f.add(mat.data()[i]);
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << f.h;
  return os.str();
}

std::string format_defects(const DefectSpec& d) {
  std::ostringstream os;
  os << std::setprecision(17);
  bool first = true;
  auto sep = [&] {
    if (!first) os << ';';
    first = false;
  };
  for (const auto& g : d.broken) {
    sep();
    if (g.row == 0 && g.col == 0) {
      os << "gap:" << (g.vertical ? 'v' : 'h') << ':' << g.line << ':' << g.start << ':' << g.extent;
    } else {
      os << "arc:" << g.row << ':' << g.col << ':' << g.angle << ':' << g.extent;
    }
  }
  for (const auto& b : d.blocks) {
    sep();
    os << "block:" << b.row << ':' << b.col << ':' << b.side;
  }
  return first ? "-" : os.str();
}

DefectSpec parse_defects(DefectKind kind, const std::string& text) {
  DefectSpec d;
  d.kind = kind;
  if (text == "-" || text.empty()) return d;
  std::istringstream items(text);
  std::string item;
  while (std::getline(items, item, ';')) {
    std::vector<std::string> f;
    std::istringstream fields(item);
    std::string tok;
    while (std::getline(fields, tok, ':')) f.push_back(tok);
    try {
      if (f.size() == 5 && f[0] == "gap") {
        BrokenDefect g;
        g.vertical = f[1] == "v";
        g.line = std::stoi(f[2]);
        g.start = std::stoi(f[3]);
        g.extent = std::stoi(f[4]);
        d.broken.push_back(g);
      } else if (f.size() == 5 && f[0] == "arc") {
        BrokenDefect g;
        g.row = std::stoi(f[1]);
        g.col = std::stoi(f[2]);
        g.angle = std::stod(f[3]);
        g.extent = std::stoi(f[4]);
        d.broken.push_back(g);
      } else if (f.size() == 4 && f[0] == "block") {
        d.blocks.push_back({std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3])});
      } else {
        throw InvalidInput("bad defect record: " + item);
      }
    } catch (const std::logic_error&) {
      throw InvalidInput("bad defect record: " + item);
    }
  }
  return d;
}

namespace {

const char* kManifestHeader =
    "id\tkind\tmesh_type\tperiod\tline_width\timage_size\tring_radius\tline_intensity\t"
    "background_intensity\tillumination_gradient\tnoise_sigma\tseed\tdefects";

}  // namespace

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetItem>& items) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const char* sub : {"images", "gt_broken", "gt_block"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw IoError("cannot create directory: " + (dir / sub).string());
  }
  std::ostringstream manifest;
  manifest << std::setprecision(12) << kManifestHeader << '\n';
  for (const auto& item : items) {
    const std::string file = item.id + ".png";
    image::save_gray(item.data.image, dir / "images" / file);
    image::save_mask(item.data.gt_broken, dir / "gt_broken" / file);
    image::save_mask(item.data.gt_block, dir / "gt_block" / file);
    const MeshSpec& m = item.mesh;
    manifest << item.id << '\t' << to_string(item.defects.kind) << '\t' << to_string(m.mesh_type) << '\t'
             << m.period << '\t' << m.line_width << '\t' << m.image_size << '\t'
             << (m.mesh_type == MeshType::kCircular ? m.resolved_ring_radius() : 0)
             << '\t' << m.line_intensity << '\t' << m.background_intensity << '\t' << m.illumination_gradient
             << '\t' << m.noise_sigma << '\t' << m.seed << '\t' << format_defects(item.defects) << '\n';
  }
  const fs::path path = dir / "manifest.tsv";
  const fs::path tmp = dir / "manifest.tsv.tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write: " + tmp.string());
    out << manifest.str();
    if (!out) throw IoError("cannot write: " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write: " + path.string());
}

std::vector<DatasetItem> read_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.tsv";
  std::ifstream in(path);
  if (!in) throw IoError("missing file: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader) {
    throw IoError("manifest mismatch: unexpected header in " + path.string());
  }
  std::vector<DatasetItem> items;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string tok;
    while (std::getline(row, tok, '\t')) f.push_back(tok);
    if (f.size() != 13) {
      throw IoError("manifest mismatch: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) +
                    " fields");
    }
    DatasetItem item;
    try {
      item.id = f[0];
      const DefectKind kind = parse_defect_kind(f[1]);
      item.mesh.mesh_type = parse_mesh_type(f[2]);
      item.mesh.period = std::stoi(f[3]);
      item.mesh.line_width = std::stoi(f[4]);
      item.mesh.image_size = std::stoi(f[5]);
      item.mesh.ring_radius = std::stoi(f[6]);
      item.mesh.line_intensity = std::stod(f[7]);
      item.mesh.background_intensity = std::stod(f[8]);
      item.mesh.illumination_gradient = std::stod(f[9]);
      item.mesh.noise_sigma = std::stod(f[10]);
      item.mesh.seed = std::stoull(f[11]);
      item.defects = parse_defects(kind, f[12]);
    } catch (const std::logic_error& e) {
      throw IoError("manifest mismatch: line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string file = item.id + ".png";
    item.data.image = image::load_gray(dir / "images" / file);
    item.data.gt_broken = image::load_mask(dir / "gt_broken" / file);
    item.data.gt_block = image::load_mask(dir / "gt_block" / file);
    if (!item.data.gt_broken.same_shape(item.data.image) || !item.data.gt_block.same_shape(item.data.image)) {
      throw IoError("manifest mismatch: mask size differs from image for " + item.id);
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace synth
}  // namespace meshinspect
