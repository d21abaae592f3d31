#pragma once

#include <span>
#include <vector>

#include "glpge/diff/tensor.hpp"

namespace glpge::diff {

// Every op below registers a backward rule. Shape violations raise
// glpge::InvalidShape, bad scalar arguments glpge::InvalidArgument.

/// 2-D cross-correlation. `w` is Cout x Cin x k x k, `b` is 1 x Cout x 1 x 1
/// (or undefined for no bias). Output extent floor((H + 2*pad - k)/stride) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int pad);

/// Fully connected layer over the flattened per-sample features.
/// `w` is out x in x 1 x 1, `b` is 1 x out x 1 x 1. Output N x out x 1 x 1.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope = T(0.2));
template <typename T>
Tensor<T> tanh(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// Clamp to [0, 1]; zero gradient outside.
template <typename T>
Tensor<T> clamp01(const Tensor<T>& x);
template <typename T>
Tensor<T> abs(const Tensor<T>& x);
template <typename T>
Tensor<T> square(const Tensor<T>& x);
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value);

// Binary ops broadcast per extent: each operand extent must equal the other
// or be 1.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts);
template <typename T>
Tensor<T> concat_channels(std::initializer_list<Tensor<T>> parts) {
  std::vector<Tensor<T>> v(parts);
  return concat_channels<T>(std::span<const Tensor<T>>(v));
}

/// N x C x H x W -> N x C x 1 x 1 spatial mean.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);
/// Mean over all elements -> 1x1x1x1.
template <typename T>
Tensor<T> mean(const Tensor<T>& x);
template <typename T>
Tensor<T> sum(const Tensor<T>& x);

/// 2x2 max pooling, stride 2 (H and W must be even).
template <typename T>
Tensor<T> max_pool2(const Tensor<T>& x);

/// (C, H, W) -> (C*r*r, H/r, W/r); sub-pixel offset (dy, dx) of input channel
/// c lands in output channel c*r*r + dy*r + dx.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r);
/// Exact inverse of pixel_unshuffle.
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r);

/// Bilinear resampling with half-pixel centers (no corner alignment):
/// source coordinate = (dst + 0.5) * in / out - 0.5, clamped to the image.
/// Interpolation uses the lerp form a + f * (b - a), so constant inputs stay
/// bit-exactly constant.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int scale);

/// Rec.601 luma of a 3-channel tensor -> N x 1 x H x W.
template <typename T>
Tensor<T> luminance(const Tensor<T>& x);

/// Spatial window [y0, y0+h) x [x0, x0+w) of every channel.
template <typename T>
Tensor<T> crop(const Tensor<T>& x, int y0, int x0, int h, int w);

/// Converts values (no graph edge) between precisions.
template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  std::vector<To> values(x.data().begin(), x.data().end());
  return Tensor<To>::from(x.shape(), std::move(values), x.requires_grad());
}

// Rec.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

}  // namespace glpge::diff
