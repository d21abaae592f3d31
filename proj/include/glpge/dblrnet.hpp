#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glpge/diff/layers.hpp"
#include "glpge/image.hpp"

namespace glpge {

enum class RefineMode { kParametric, kDirect };

std::string to_string(RefineMode m);
RefineMode parse_refine_mode(const std::string& name);

struct DblrnetConfig {
  /// Node widths per grid level (level 0 is the finest); the grid depth is
  /// widths.size().
  std::vector<int> widths = {8, 16, 32, 128, 256};
  /// Dense-block growth rate per level.
  std::vector<int> growth = {4, 8, 16, 32, 128};
  /// 3x3 conv layers per dense block, per level.
  std::vector<int> layers = {2, 2, 3, 3, 6};
  int smooth_width = 16;
  /// Amplitude of the random part of the smooth-branch init, relative to the
  /// fan-in bound; the deterministic part is a centre-tap identity.
  double smooth_jitter = 0.05;
  /// Replaces the smooth branch by the identity (h(x) = x).
  bool bypass_smooth = false;
  RefineMode refine = RefineMode::kParametric;
  std::uint64_t seed = 2;

  [[nodiscard]] int depth() const { return static_cast<int>(widths.size()); }
  /// Extents the coefficient branch input must be divisible by at factor k.
  [[nodiscard]] int multiple(int k) const { return 2 * k * (1 << (depth() - 1)); }

  /// Reduced grid used for gradient checks on 16 x 16 inputs.
  static DblrnetConfig micro();

  friend bool operator==(const DblrnetConfig&, const DblrnetConfig&) = default;
};

template <typename T>
struct CoefficientMaps {
  diff::Tensor<T> alpha;
  diff::Tensor<T> beta;
};

template <typename T>
struct DenseBlock {
  std::vector<diff::Conv2d<T>> layers;
  diff::Conv2d<T> transition;

  diff::Tensor<T> operator()(const diff::Tensor<T>& x) const;
};

/// Smoothing branch h plus a nested U-Net of dense blocks predicting per-pixel
/// gain/offset maps (alpha, beta), combined as clamp(alpha * h(x) + beta).
template <typename T>
class Dblrnet {
 public:
  explicit Dblrnet(const DblrnetConfig& cfg);

  [[nodiscard]] diff::Tensor<T> smooth(const diff::Tensor<T>& x) const;
  /// Maps at the input extent; the nested U-Net runs at 1/(2k) resolution.
  [[nodiscard]] CoefficientMaps<T> coefficients(const diff::Tensor<T>& x, int k) const;
  [[nodiscard]] diff::Tensor<T> refine(const diff::Tensor<T>& x, int k) const;
  [[nodiscard]] diff::Tensor<T> refine(const diff::Tensor<T>& x, int k, CoefficientMaps<T>* maps) const;
  /// Direct prediction head: features -> 12 channels -> pixel_shuffle(2).
  [[nodiscard]] diff::Tensor<T> direct(const diff::Tensor<T>& x) const;

  [[nodiscard]] const DblrnetConfig& config() const { return cfg_; }
  [[nodiscard]] diff::ParamStore<T>& store() { return store_; }
  [[nodiscard]] const diff::ParamStore<T>& store() const { return store_; }

  /// Heads back to the alpha = 1, beta = 0 start point.
  void reset_heads();

  [[nodiscard]] diff::Conv2d<T>& alpha_head() { return alpha_; }
  [[nodiscard]] diff::Conv2d<T>& beta_head() { return beta_; }
  [[nodiscard]] diff::Conv2d<T>& direct_head() { return direct_; }
  [[nodiscard]] std::vector<diff::Conv2d<T>>& smooth_layers() { return smooth_; }

 private:
  [[nodiscard]] diff::Tensor<T> features(const diff::Tensor<T>& x) const;

  DblrnetConfig cfg_;
  diff::ParamStore<T> store_;
  std::vector<diff::Conv2d<T>> smooth_;
  // nodes_[i][j] is grid node X^{i,j}, i + j < depth.
  std::vector<std::vector<DenseBlock<T>>> nodes_;
  diff::Conv2d<T> alpha_;
  diff::Conv2d<T> beta_;
  diff::Conv2d<T> direct_;
};

ImageBuffer smooth_branch(const Dblrnet<float>& model, const ImageBuffer& img);
/// alpha and beta as 3-channel images (values not clamped).
std::pair<ImageBuffer, ImageBuffer> coeff_branch(const Dblrnet<float>& model, const ImageBuffer& img, int k);
ImageBuffer enhance_local(const Dblrnet<float>& model, const ImageBuffer& img, int k);
ImageBuffer direct_predict(const Dblrnet<float>& model, const ImageBuffer& img);

}  // namespace glpge
