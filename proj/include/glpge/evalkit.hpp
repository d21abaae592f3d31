#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "glpge/dblrnet.hpp"
#include "glpge/gppnet.hpp"
#include "glpge/image.hpp"
#include "glpge/synthdoc.hpp"

namespace glpge {

/// Cap returned when the MSE falls below kPsnrFloor (unit dynamic range).
inline constexpr double kPsnrCap = 99.0;
inline constexpr double kPsnrFloor = 1e-9;

double psnr(const ImageBuffer& a, const ImageBuffer& b);

/// Gaussian-window SSIM (11 taps, sigma 1.5, valid windows), averaged over
/// channels. Computed in double precision.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

struct SpectralProfile {
  double dc_fraction = 0.0;
  /// |fu| >= 0.25 cycles/px and |fv| < 0.25: energy from horizontal variation.
  double horiz_band = 0.0;
  /// |fv| >= 0.25 and |fu| < 0.25.
  double vert_band = 0.0;
  /// max(|fu|, |fv|) >= 0.25.
  double high_freq = 0.0;
  /// Sum of |F|^2 over the full spectrum (unnormalized DFT).
  double total_energy = 0.0;
};

/// Power spectrum fractions of the gray image.
SpectralProfile spectral_profile(const ImageBuffer& img);

struct ImageMetrics {
  std::string name;
  double ssim = 0.0;
  double psnr = 0.0;
  bool has_spectrum = false;
  SpectralProfile spectrum;
};

struct MetricReport {
  std::vector<ImageMetrics> rows;

  [[nodiscard]] double mean_ssim() const;
  [[nodiscard]] double mean_psnr() const;
  [[nodiscard]] double median_ssim() const;
  [[nodiscard]] double median_psnr() const;

  /// {"rows": [...], "summary": {...}} with keys sorted.
  [[nodiscard]] std::string to_json() const;
  /// Per-image rows, a blank line, then `statistic,ssim,psnr` summary rows.
  [[nodiscard]] std::string to_csv() const;
  void save(const std::filesystem::path& path) const;
};

double median(std::vector<double> v);

using Enhancer = std::function<ImageBuffer(const ImageBuffer&)>;

struct EvalOptions {
  bool spectrum = false;
  bool parallel = true;
};

/// Runs `enhancer` on every degraded image and scores it against the clean one.
/// The enhancer must be safe to call from several threads when `parallel` is on.
MetricReport evaluate_pairs(const DatasetManifest& manifest, const Enhancer& enhancer,
                            const EvalOptions& opts = {});

struct FlopRecord {
  std::string scope;
  std::string op;
  std::int64_t flops = 0;
};

struct FlopBreakdown {
  /// One record per op invocation, in execution order.
  std::vector<FlopRecord> records;
  /// Totals keyed by scope ("backbone", "fusion", "smooth", "coeff",
  /// "coeff.resample", "refine"; unscoped ops go to "other").
  std::map<std::string, std::int64_t> scopes;
  std::int64_t total = 0;

  [[nodiscard]] std::int64_t scope(const std::string& name) const;
  /// coeff + coeff.resample.
  [[nodiscard]] std::int64_t coeff_path() const;
  [[nodiscard]] std::string to_json() const;
};

/// Shape-only forward pass with FLOP tallying. h and w must suit the model
/// (DB-LRNet: divisible by multiple(k)).
FlopBreakdown count_flops(const Gppnet<float>& model, int h, int w);
FlopBreakdown count_flops(const Dblrnet<float>& model, int h, int w, int k = 1);
FlopBreakdown count_flops(const Gppnet<float>& gpp, const Dblrnet<float>& dblr, int h, int w, int k = 1);
/// Arbitrary graph builder run under meta mode.
FlopBreakdown count_flops(const std::function<void()>& forward);

}  // namespace glpge
