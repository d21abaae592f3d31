#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "glpge/diff/layers.hpp"
#include "glpge/filters.hpp"
#include "glpge/image.hpp"

namespace glpge {

enum class FusionStrategy { kConcatenation, kCascading, kAdditive };

std::string to_string(FusionStrategy s);
FusionStrategy parse_fusion(const std::string& name);

struct GppnetConfig {
  /// Output width of each of the five 3-conv stages; the first conv of every
  /// stage has stride 2.
  std::array<int, 5> widths = {16, 32, 64, 128, 128};
  int head_hidden = 64;
  int input_side = 224;
  std::uint64_t seed = 1;

  friend bool operator==(const GppnetConfig&, const GppnetConfig&) = default;
};

/// Global parameter network: 15-conv backbone over a fixed thumbnail, three
/// tanh heads (brightness, contrast, saturation) and a 1x1 fusion conv.
///
/// The fusion conv reads concat(b1, b2 - b1, b3 - b1) of the three filtered
/// images. It starts as [I, I/3, I/3], which equals the channel-group average
/// (b1 + b2 + b3) / 3 and maps three identical branches to that image exactly.
template <typename T>
class Gppnet {
 public:
  explicit Gppnet(const GppnetConfig& cfg);

  /// N x 3 x H x W in [0,1] -> the three head outputs, each N x 1 x 1 x 1.
  [[nodiscard]] std::array<diff::Tensor<T>, 3> predict(const diff::Tensor<T>& x) const;

  /// Filters x with `p` at the input resolution and fuses the branches.
  [[nodiscard]] diff::Tensor<T> apply(const diff::Tensor<T>& x, const std::array<diff::Tensor<T>, 3>& p,
                                      FusionStrategy strategy) const;

  /// Fusion of already filtered branches (concatenation or additive).
  [[nodiscard]] diff::Tensor<T> fuse(const std::array<diff::Tensor<T>, 3>& branches,
                                     FusionStrategy strategy) const;

  [[nodiscard]] diff::Tensor<T> enhance(const diff::Tensor<T>& x, FusionStrategy strategy) const {
    return apply(x, predict(x), strategy);
  }

  [[nodiscard]] const GppnetConfig& config() const { return cfg_; }
  [[nodiscard]] diff::ParamStore<T>& store() { return store_; }
  [[nodiscard]] const diff::ParamStore<T>& store() const { return store_; }

  /// Sets the fusion conv back to its averaging start point.
  void reset_fusion();
  /// Zeroes the last layer of every head so all parameters read 0.
  void zero_heads();

 private:
  GppnetConfig cfg_;
  diff::ParamStore<T> store_;
  std::vector<diff::Conv2d<T>> backbone_;
  std::array<diff::Linear<T>, 3> hidden_;
  std::array<diff::Linear<T>, 3> out_;
  diff::Conv2d<T> fusion_;
};

ParamSet predict_params(const Gppnet<float>& model, const ImageBuffer& img);

/// Fuses three filtered images; cascading ignores `branches` and filters
/// `source` sequentially with `params`.
ImageBuffer fuse(const Gppnet<float>& model, const std::array<ImageBuffer, 3>& branches,
                 FusionStrategy strategy, const ImageBuffer& source, const ParamSet& params);

/// I_g at the input resolution.
ImageBuffer enhance_global(const Gppnet<float>& model, const ImageBuffer& img,
                           FusionStrategy strategy);
ImageBuffer enhance_global(const Gppnet<float>& model, const ImageBuffer& img,
                           FusionStrategy strategy, const ParamSet& forced);

}  // namespace glpge
