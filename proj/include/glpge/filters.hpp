#pragma once

#include <array>
#include <string>

#include "glpge/diff/tensor.hpp"
#include "glpge/image.hpp"

namespace glpge {

/// Global enhancement scalars, each in (-1, 1).
struct ParamSet {
  float brightness = 0.0F;
  float contrast = 0.0F;
  float saturation = 0.0F;

  [[nodiscard]] std::array<float, 3> values() const { return {brightness, contrast, saturation}; }
  friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

enum class FilterKind { kBrightness, kContrast, kSaturation };

inline constexpr std::array<FilterKind, 3> kFilterKinds = {
    FilterKind::kBrightness, FilterKind::kContrast, FilterKind::kSaturation};

std::string to_string(FilterKind kind);
FilterKind parse_filter_kind(const std::string& name);

/// Differentiable filter on an N x 3 x H x W batch; `p` is N x 1 x 1 x 1.
///   brightness: clamp(v (1 + p))
///   contrast:   clamp(v (1 + p) - mu p), mu the per-image mean luma
///   saturation: clamp(v (1 + p) - g p), g the per-pixel luma
/// The forms are algebraically (v - m)(1 + p) + m written so that p = 0
/// reproduces v bit-exactly.
template <typename T>
diff::Tensor<T> apply_filter(const diff::Tensor<T>& x, FilterKind kind, const diff::Tensor<T>& p);

/// Image-level filter; p must lie in (-1, 1).
ImageBuffer apply_filter(const ImageBuffer& img, FilterKind kind, float p);

}  // namespace glpge
