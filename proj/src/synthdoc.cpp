#include "glpge/synthdoc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "glpge/errors.hpp"
#include "glpge/parallel.hpp"

namespace glpge {

namespace fs = std::filesystem;

std::string to_string(DegradeKind kind) {
  switch (kind) {
    case DegradeKind::kShadow:
      return "shadow";
    case DegradeKind::kWrinkle:
      return "wrinkle_shading";
    case DegradeKind::kColorCast:
      return "color_cast";
    case DegradeKind::kBleedThrough:
      return "bleed_through";
    case DegradeKind::kBlur:
      return "blur";
    case DegradeKind::kNoise:
      return "noise";
  }
  return "?";
}

DegradeKind parse_degrade_kind(const std::string& name) {
  for (const auto k : kDegradeOrder)
    if (to_string(k) == name) return k;
  if (name == "wrinkle") return DegradeKind::kWrinkle;
  throw ConfigError("unknown degradation kind '" + name + "'");
}

bool DegradeConfig::enabled(DegradeKind kind) const {
  switch (kind) {
    case DegradeKind::kShadow:
      return shadow;
    case DegradeKind::kWrinkle:
      return wrinkle;
    case DegradeKind::kColorCast:
      return color_cast;
    case DegradeKind::kBleedThrough:
      return bleed_through;
    case DegradeKind::kBlur:
      return blur;
    case DegradeKind::kNoise:
      return noise;
  }
  return false;
}

namespace {

void fill_rect(ImageBuffer& img, int y0, int x0, int h, int w, const std::array<float, 3>& color) {
  const int y1 = std::min(img.height, y0 + h);
  const int x1 = std::min(img.width, x0 + w);
  for (int y = std::max(0, y0); y < y1; ++y)
    for (int x = std::max(0, x0); x < x1; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = color[c];
}

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

ImageBuffer clamp01(ImageBuffer img) { return clamp_image(std::move(img)); }

}  // namespace

ImageBuffer render_document(std::uint64_t seed, int h, int w) {
  if (h < 64 || w < 64) throw InvalidArgument("render_document: extents must be >= 64");
  Rng rng = Rng(seed).stream(0x72656E64);
  const float sheet = static_cast<float>(rng.uniform(0.92, 0.98));
  const std::array<float, 3> bg = {sheet, sheet - static_cast<float>(rng.uniform(0.0, 0.02)),
                                   sheet - static_cast<float>(rng.uniform(0.01, 0.05))};
  ImageBuffer img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = bg[c];

  const float ink_level = static_cast<float>(rng.uniform(0.03, 0.18));
  const std::array<float, 3> ink = {ink_level, ink_level, ink_level + static_cast<float>(rng.uniform(0.0, 0.08))};
  const int cell = std::max(2, static_cast<int>(std::lround(h / rng.uniform(90.0, 130.0))));
  const int glyph_h = 5 * cell;
  const int line_h = glyph_h + std::max(3, static_cast<int>(std::lround(glyph_h * rng.uniform(0.6, 0.9))));
  const int glyph_w = 3 * cell;
  const int margin_x = std::max(3, static_cast<int>(w * rng.uniform(0.05, 0.1)));
  const int margin_y = std::max(3, static_cast<int>(h * rng.uniform(0.04, 0.08)));

  // Accent block in the top-right area.
  const std::array<float, 3> accent = {static_cast<float>(rng.uniform(0.2, 0.9)),
                                       static_cast<float>(rng.uniform(0.2, 0.9)),
                                       static_cast<float>(rng.uniform(0.2, 0.9))};
  const int acc_h = std::max(4, static_cast<int>(h * rng.uniform(0.06, 0.12)));
  const int acc_w = std::max(4, static_cast<int>(w * rng.uniform(0.1, 0.2)));
  const int acc_x = w - margin_x - acc_w;
  fill_rect(img, margin_y, acc_x, acc_h, acc_w, accent);

  int y = margin_y;
  bool para_start = true;
  while (y + line_h <= h - margin_y) {
    if (y < margin_y + acc_h + 2 && para_start) {
      y += line_h;
      continue;
    }
    const bool heading = para_start && rng.uniform() < 0.3;
    const double density = heading ? 0.6 : 0.3;
    const int line_end = w - margin_x - static_cast<int>(rng.uniform(0.0, para_start ? 0.0 : 0.15) * w);
    int x = margin_x + (para_start && !heading ? 2 * glyph_w : 0);
    const int top = y + (line_h - glyph_h) / 2;
    while (x + glyph_w <= line_end) {
      const int word = 2 + static_cast<int>(rng.below(8));
      for (int g = 0; g < word && x + glyph_w <= line_end; ++g) {
        // A 3 x 5 random bitmap per glyph, with at least one stroke per row.
        for (int r = 0; r < 5; ++r) {
          bool any = false;
          for (int col = 0; col < 3; ++col) {
            if (rng.uniform() < density) {
              fill_rect(img, top + r * cell, x + col * cell, cell, cell, ink);
              any = true;
            }
          }
          if (!any) fill_rect(img, top + r * cell, x + static_cast<int>(rng.below(3)) * cell, cell, cell, ink);
        }
        x += glyph_w + cell;
      }
      x += 2 * glyph_w;
    }
    y += line_h;
    para_start = rng.uniform() < 0.18;
    if (para_start) y += line_h / 2;
  }
  return img;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma) {
  if (sigma <= 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (double& v : k) v /= total;
  ImageBuffer tmp(img.height, img.width, img.channels);
  ImageBuffer out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img.at(y, mirror(x + i, img.width), c);
        tmp.at(y, x, c) = static_cast<float>(acc);
      }
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp.at(mirror(y + i, img.height), x, c);
        out.at(y, x, c) = static_cast<float>(acc);
      }
  return out;
}

ImageBuffer degrade_stage(const ImageBuffer& img, DegradeKind kind, double s, Rng& rng) {
  if (!(s >= 0.0 && s <= 1.0)) throw InvalidArgument("degrade_stage: strength must lie in [0, 1]");
  if (s == 0.0) return img;
  const int h = img.height;
  const int w = img.width;
  const int ch = img.channels;
  ImageBuffer out = img;
  switch (kind) {
    case DegradeKind::kShadow: {
      // Soft-edged shadow along a random direction plus a mild vignette.
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double cx = std::cos(theta);
      const double cy = std::sin(theta);
      const double offset = rng.uniform(-0.3, 0.3);
      const double soft = rng.uniform(0.08, 0.3);
      const double vignette = rng.uniform(0.0, 0.4);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double u = (x + 0.5) / w - 0.5;
          const double v = (y + 0.5) / h - 0.5;
          const double edge = 1.0 / (1.0 + std::exp(-((u * cx + v * cy) - offset) / soft));
          const double radial = std::min(1.0, 2.0 * (u * u + v * v));
          const double phi = std::clamp((1.0 - vignette) * edge + vignette * radial, 0.0, 1.0);
          const auto m = static_cast<float>(1.0 - 0.6 * s * phi);
          for (int c = 0; c < ch; ++c) out.at(y, x, c) = img.at(y, x, c) * m;
        }
      break;
    }
    case DegradeKind::kWrinkle: {
      struct Wave {
        double fx, fy, phase;
      };
      std::array<Wave, 3> waves{};
      for (auto& wv : waves) {
        const double period = rng.uniform(0.2, 0.6);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        wv = {std::cos(theta) / period, std::sin(theta) / period, rng.uniform(0.0, 2.0 * std::numbers::pi)};
      }
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double u = (x + 0.5) / w;
          const double v = (y + 0.5) / h;
          double r = 0.0;
          for (const auto& wv : waves) r += std::sin(2.0 * std::numbers::pi * (wv.fx * u + wv.fy * v) + wv.phase);
          const auto delta = static_cast<float>(0.15 * s * r / 3.0);
          for (int c = 0; c < ch; ++c) out.at(y, x, c) = img.at(y, x, c) + delta;
        }
      break;
    }
    case DegradeKind::kColorCast: {
      std::array<float, 3> gain{};
      for (auto& g : gain) g = static_cast<float>(rng.uniform(1.0 - 0.25 * s, 1.0 + 0.25 * s));
      for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = img.data[i] * gain[i % ch];
      break;
    }
    case DegradeKind::kBleedThrough: {
      ImageBuffer mirrored(h, w, ch);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < ch; ++c) mirrored.at(y, x, c) = img.at(y, w - 1 - x, c);
      const int dy = static_cast<int>(rng.below(static_cast<std::uint64_t>(std::max(1, h / 16))));
      const ImageBuffer back = gaussian_blur(mirrored, rng.uniform(1.0, 2.0));
      const auto wgt = static_cast<float>(0.3 * s);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < ch; ++c)
            out.at(y, x, c) = img.at(y, x, c) * (1.0F - wgt + wgt * back.at(std::min(h - 1, y + dy), x, c));
      break;
    }
    case DegradeKind::kBlur:
      out = gaussian_blur(img, 2.0 * s);
      break;
    case DegradeKind::kNoise: {
      const double sigma = 0.08 * s;
      for (float& v : out.data) v = static_cast<float>(v + sigma * rng.normal());
      break;
    }
  }
  return clamp01(std::move(out));
}

ImageBuffer degrade(const ImageBuffer& img, const DegradeConfig& cfg) {
  if (!(cfg.intensity >= 0.0 && cfg.intensity <= 1.0)) throw InvalidArgument("degrade: intensity must lie in [0, 1]");
  if (cfg.intensity == 0.0) return img;
  const Rng root(cfg.seed);
  ImageBuffer out = img;
  for (std::size_t i = 0; i < kDegradeOrder.size(); ++i) {
    const DegradeKind kind = kDegradeOrder[i];
    Rng draw = root.stream(2 * i);
    Rng stage = root.stream(2 * i + 1);
    const double strength = cfg.intensity * draw.uniform(0.5, 1.0);
    if (!cfg.enabled(kind)) continue;
    out = degrade_stage(out, kind, strength, stage);
  }
  return out;
}

// ---------------------------------------------------------------------------

fs::path DatasetManifest::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : root / path;
}

void DatasetManifest::save(const fs::path& csv) const {
  std::ofstream out(csv, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + csv.string());
  out << kManifestHeader << '\n';
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", r.intensity);
    out << r.degraded << ',' << r.clean << ',' << r.seed << ',' << buf << ',' << r.width << ',' << r.height << '\n';
  }
  if (!out) throw IoError("write failed for manifest " + csv.string());
}

DatasetManifest DatasetManifest::load(const fs::path& csv) {
  std::ifstream in(csv);
  if (!in) throw NotFound("manifest not found: " + csv.string());
  DatasetManifest m;
  m.root = csv.has_parent_path() ? csv.parent_path() : fs::path(".");
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    throw ParseError("manifest " + csv.string() + " lacks the header '" + kManifestHeader + "'");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw ParseError("manifest " + csv.string() + " line " + std::to_string(lineno) + ": expected 6 fields");
    ManifestRow r;
    try {
      r.degraded = f[0];
      r.clean = f[1];
      r.seed = std::stoull(f[2]);
      r.intensity = std::stod(f[3]);
      r.width = std::stoi(f[4]);
      r.height = std::stoi(f[5]);
    } catch (const std::exception&) {
      throw ParseError("manifest " + csv.string() + " line " + std::to_string(lineno) + ": malformed number");
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

std::pair<ImageBuffer, ImageBuffer> synth_pair(const SynthOptions& opts, std::size_t index, ManifestRow* row) {
  Rng r = Rng(opts.seed).stream(index);
  const std::uint64_t seed = r.next_u64();
  const double intensity = opts.intensity_min + (opts.intensity_max - opts.intensity_min) * r.uniform();
  ImageBuffer clean = render_document(seed, opts.size, opts.size);
  DegradeConfig cfg = opts.stages;
  cfg.seed = seed;
  cfg.intensity = std::clamp(intensity, opts.intensity_min, opts.intensity_max);
  ImageBuffer degraded = degrade(clean, cfg);
  if (row != nullptr) {
    row->seed = seed;
    row->intensity = cfg.intensity;
    row->width = opts.size;
    row->height = opts.size;
  }
  return {std::move(degraded), std::move(clean)};
}

DatasetManifest build_dataset(const SynthOptions& opts, const fs::path& out_dir) {
  if (opts.count < 1) throw ConfigError("build_dataset: count must be >= 1");
  if (!(opts.intensity_min >= 0.0 && opts.intensity_max <= 1.0 && opts.intensity_min <= opts.intensity_max))
    throw ConfigError("build_dataset: intensity range must satisfy 0 <= min <= max <= 1");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());
  DatasetManifest m;
  m.root = out_dir;
  m.rows.resize(static_cast<std::size_t>(opts.count));
  parallel_for(m.rows.size(), [&](std::size_t i) {
    ManifestRow& row = m.rows[i];
    auto [degraded, clean] = synth_pair(opts, i, &row);
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.png", i);
    row.clean = std::string("clean_") + name;
    row.degraded = std::string("degraded_") + name;
    save_image(clean, out_dir / row.clean);
    save_image(degraded, out_dir / row.degraded);
  });
  m.save(out_dir / "manifest.csv");
  return m;
}

}  // namespace glpge
