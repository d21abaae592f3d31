#include <algorithm>
#include <cmath>
#include <vector>

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge::diff {

namespace {

template <typename T>
struct Tap {
  int i0;
  int i1;
  T frac;
};

// Half-pixel-center source taps for one axis.
template <typename T>
std::vector<Tap<T>> make_taps(int in, int out) {
  std::vector<Tap<T>> taps(out);
  const double ratio = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double src = std::clamp((o + 0.5) * ratio - 0.5, 0.0, static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, static_cast<T>(src - i0)};
  }
  return taps;
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
  if (!x.defined()) throw InvalidArgument("resize_bilinear: undefined tensor");
  if (out_h < 1 || out_w < 1) throw InvalidArgument("resize_bilinear: target extent must be >= 1");
  const Shape s = x.shape();
  const Shape os{s.n, s.c, out_h, out_w};
  auto ty = make_taps<T>(s.h, out_h);
  auto tx = make_taps<T>(s.w, out_w);
  auto out = make_result<T>(os, "resize_bilinear", {x.node_ptr()}, [s, ty, tx](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const Shape& o = self.shape;
    std::size_t k = 0;
    for (int nc = 0; nc < o.n * o.c; ++nc) {
      T* plane = gi + static_cast<std::size_t>(nc) * s.plane();
      for (int y = 0; y < o.h; ++y) {
        const auto& vy = ty[y];
        T* r0 = plane + static_cast<std::size_t>(vy.i0) * s.w;
        T* r1 = plane + static_cast<std::size_t>(vy.i1) * s.w;
        for (int xx = 0; xx < o.w; ++xx, ++k) {
          const auto& vx = tx[xx];
          const T g = self.grad[k];
          const T gt = g * (T(1) - vy.frac);
          const T gb = g * vy.frac;
          r0[vx.i0] += gt * (T(1) - vx.frac);
          r0[vx.i1] += gt * vx.frac;
          r1[vx.i0] += gb * (T(1) - vx.frac);
          r1[vx.i1] += gb * vx.frac;
        }
      }
    }
  });
  tally_flops("resize_bilinear", static_cast<std::int64_t>(os.numel()));
  if (meta_mode()) return out;
  T* po = out.node()->data.data();
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const T* plane = x.data().data() + static_cast<std::size_t>(nc) * s.plane();
    for (int y = 0; y < out_h; ++y) {
      const auto& vy = ty[y];
      const T* r0 = plane + static_cast<std::size_t>(vy.i0) * s.w;
      const T* r1 = plane + static_cast<std::size_t>(vy.i1) * s.w;
      for (int xx = 0; xx < out_w; ++xx) {
        const auto& vx = tx[xx];
        const T top = r0[vx.i0] + vx.frac * (r0[vx.i1] - r0[vx.i0]);
        const T bot = r1[vx.i0] + vx.frac * (r1[vx.i1] - r1[vx.i0]);
        *po++ = top + vy.frac * (bot - top);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int scale) {
  if (scale < 1) throw InvalidArgument("upsample_bilinear: scale must be >= 1");
  return resize_bilinear(x, x.shape().h * scale, x.shape().w * scale);
}

template Tensor<float> resize_bilinear(const Tensor<float>&, int, int);
template Tensor<double> resize_bilinear(const Tensor<double>&, int, int);
template Tensor<float> upsample_bilinear(const Tensor<float>&, int);
template Tensor<double> upsample_bilinear(const Tensor<double>&, int);

}  // namespace glpge::diff
