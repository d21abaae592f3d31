#pragma once

// Straightforward reference implementations used to cross-check the
// optimized kernels. Everything here is written for clarity, in double.

#include <algorithm>
#include <cmath>
#include <vector>

#include "glpge/diff/tensor.hpp"
#include "glpge/rng.hpp"

namespace oracle {

using glpge::diff::Shape;
using glpge::diff::Tensor;

template <typename T>
Tensor<T> random_tensor(Shape s, glpge::Rng& rng, double lo = 0.0, double hi = 1.0) {
  std::vector<T> v(s.numel());
  for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
  return Tensor<T>::from(s, std::move(v));
}

inline std::vector<double> conv2d(const std::vector<double>& x, Shape xs, const std::vector<double>& w, Shape ws,
                                  const std::vector<double>& b, int stride, int pad, Shape* out_shape) {
  const int ho = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int wo = (xs.w + 2 * pad - ws.w) / stride + 1;
  *out_shape = {xs.n, ws.n, ho, wo};
  std::vector<double> y(out_shape->numel(), 0.0);
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.n; ++co)
      for (int oy = 0; oy < ho; ++oy)
        for (int ox = 0; ox < wo; ++ox) {
          double acc = b.empty() ? 0.0 : b[co];
          for (int ci = 0; ci < xs.c; ++ci)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                const int iy = oy * stride - pad + ky;
                const int ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += x[((n * xs.c + ci) * xs.h + iy) * xs.w + ix] * w[((co * ws.c + ci) * ws.h + ky) * ws.w + kx];
              }
          y[((n * ws.n + co) * ho + oy) * wo + ox] = acc;
        }
  return y;
}

// Half-pixel-center bilinear sample of a single plane, evaluated directly.
inline double bilinear_at(const std::vector<double>& p, int h, int w, int oh, int ow, int y, int x) {
  auto coord = [](int o, int in, int out) {
    double s = (o + 0.5) * in / out - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(in - 1));
  };
  const double sy = coord(y, h, oh);
  const double sx = coord(x, w, ow);
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = sy - y0;
  const double fx = sx - x0;
  return (1 - fy) * ((1 - fx) * p[y0 * w + x0] + fx * p[y0 * w + x1]) +
         fy * ((1 - fx) * p[y1 * w + x0] + fx * p[y1 * w + x1]);
}

// SSIM by explicit 2-D window sums over every valid position.
inline double ssim_bruteforce(const std::vector<double>& a, const std::vector<double>& b, Shape s) {
  const int win = 11;
  const double sigma = 1.5;
  double g[11];
  double gs = 0.0;
  for (int i = 0; i < win; ++i) {
    g[i] = std::exp(-((i - 5) * (i - 5)) / (2 * sigma * sigma));
    gs += g[i];
  }
  for (double& v : g) v /= gs;
  const double c1 = 1e-4;
  const double c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const double* pa = a.data() + static_cast<std::size_t>(nc) * s.h * s.w;
    const double* pb = b.data() + static_cast<std::size_t>(nc) * s.h * s.w;
    for (int y = 0; y + win <= s.h; ++y)
      for (int x = 0; x + win <= s.w; ++x) {
        double mx = 0, my = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double wt = g[i] * g[j];
            mx += wt * pa[(y + i) * s.w + x + j];
            my += wt * pb[(y + i) * s.w + x + j];
          }
        double vx = 0, vy = 0, cxy = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const double wt = g[i] * g[j];
            const double dx = pa[(y + i) * s.w + x + j] - mx;
            const double dy = pb[(y + i) * s.w + x + j] - my;
            vx += wt * dx * dx;
            vy += wt * dy * dy;
            cxy += wt * dx * dy;
          }
        total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        ++count;
      }
  }
  return total / count;
}

}  // namespace oracle
