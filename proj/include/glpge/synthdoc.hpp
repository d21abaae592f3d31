#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glpge/image.hpp"
#include "glpge/rng.hpp"

namespace glpge {

enum class DegradeKind { kShadow, kWrinkle, kColorCast, kBleedThrough, kBlur, kNoise };

/// Pipeline order.
inline constexpr std::array<DegradeKind, 6> kDegradeOrder = {
    DegradeKind::kShadow, DegradeKind::kWrinkle, DegradeKind::kColorCast,
    DegradeKind::kBleedThrough, DegradeKind::kBlur, DegradeKind::kNoise};

std::string to_string(DegradeKind kind);
DegradeKind parse_degrade_kind(const std::string& name);

struct DegradeConfig {
  double intensity = 0.5;
  std::uint64_t seed = 0;
  bool shadow = true;
  bool wrinkle = true;
  bool color_cast = true;
  bool bleed_through = true;
  bool blur = true;
  bool noise = true;

  [[nodiscard]] bool enabled(DegradeKind kind) const;

  friend bool operator==(const DegradeConfig&, const DegradeConfig&) = default;
};

/// Clean synthetic page: light background, rows of glyph-like strokes, occasional
/// bold heading rows and one colored accent block.
ImageBuffer render_document(std::uint64_t seed, int h, int w);

/// One degradation at `strength` in [0, 1]; strength 0 returns the input as is.
///   shadow        multiply by a smooth map in [1 - 0.6 s, 1]
///   wrinkle       add low-frequency ripples of amplitude 0.15 s
///   color_cast    per-channel gain in [1 - 0.25 s, 1 + 0.25 s]
///   bleed_through img * (1 - w + w * back), back = blurred mirror, w = 0.3 s
///   blur          Gaussian, sigma 2 s, reflective borders
///   noise         additive Gaussian, sigma 0.08 s
/// Every result is clamped to [0, 1].
ImageBuffer degrade_stage(const ImageBuffer& img, DegradeKind kind, double strength, Rng& rng);

/// Separable Gaussian blur with mirrored borders.
ImageBuffer gaussian_blur(const ImageBuffer& img, double sigma);

/// Enabled stages in kDegradeOrder, each with a strength drawn from
/// [0.5 I, I] on its own stream of the seed.
ImageBuffer degrade(const ImageBuffer& img, const DegradeConfig& cfg);

struct ManifestRow {
  std::string degraded;
  std::string clean;
  std::uint64_t seed = 0;
  double intensity = 0.0;
  int width = 0;
  int height = 0;
};

/// Paired dataset listing; relative paths resolve against `root`.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRow> rows;

  [[nodiscard]] std::filesystem::path resolve(const std::string& p) const;
  void save(const std::filesystem::path& csv) const;
  static DatasetManifest load(const std::filesystem::path& csv);
};

inline constexpr const char* kManifestHeader = "degraded,clean,seed,intensity,width,height";

struct SynthOptions {
  int count = 4;
  int size = 128;
  double intensity_min = 0.5;
  double intensity_max = 0.5;
  std::uint64_t seed = 0;
  /// Template for the per-sample stage toggles.
  DegradeConfig stages;

  friend bool operator==(const SynthOptions&, const SynthOptions&) = default;
};

/// Writes clean_NNNNN.png / degraded_NNNNN.png pairs plus manifest.csv into
/// out_dir. Sample i depends only on (seed, i).
DatasetManifest build_dataset(const SynthOptions& opts, const std::filesystem::path& out_dir);

/// Pair i of a dataset generated in memory with the same derivation as build_dataset.
std::pair<ImageBuffer, ImageBuffer> synth_pair(const SynthOptions& opts, std::size_t index,
                                               ManifestRow* row = nullptr);

}  // namespace glpge
