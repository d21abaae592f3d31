#include <algorithm>
#include <vector>

#include "blas.hpp"
#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge::diff {

namespace {

// Upper bound on im2col scratch, in elements. Large images are processed in
// bands of output rows so the scratch never exceeds this.
constexpr std::size_t kColBudget = std::size_t{1} << 17;

struct ConvGeom {
  int cin, h, w;
  int cout, k, stride, pad;
  int ho, wo;

  [[nodiscard]] int patch() const { return cin * k * k; }
  [[nodiscard]] bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  [[nodiscard]] int band_rows() const {
    const std::size_t per_row = static_cast<std::size_t>(patch()) * wo;
    return static_cast<int>(std::clamp<std::size_t>(kColBudget / std::max<std::size_t>(per_row, 1),
                                                    1, static_cast<std::size_t>(ho)));
  }
  // Output columns ox whose input column ox*stride - pad + kx is inside [0, w).
  [[nodiscard]] std::pair<int, int> valid_cols(int kx) const {
    const int off = kx - pad;
    int lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
    int hi = (w - 1 - off) < 0 ? 0 : (w - 1 - off) / stride + 1;
    return {std::min(lo, wo), std::clamp(hi, 0, wo)};
  }
};

template <typename T>
void im2col(const ConvGeom& g, const T* x, int row0, int rows, T* col) {
  const std::size_t band = static_cast<std::size_t>(rows) * g.wo;
  for (int c = 0; c < g.cin; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        T* dst = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * band;
        const auto [lo, hi] = g.valid_cols(kx);
        for (int r = 0; r < rows; ++r) {
          T* d = dst + static_cast<std::size_t>(r) * g.wo;
          const int iy = (row0 + r) * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h || lo >= hi) {
            std::fill(d, d + g.wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          const int off = kx - g.pad;
          std::fill(d, d + lo, T(0));
          if (g.stride == 1) {
            std::copy(src + (lo + off), src + (hi + off), d + lo);
          } else {
            for (int ox = lo; ox < hi; ++ox) d[ox] = src[ox * g.stride + off];
          }
          std::fill(d + hi, d + g.wo, T(0));
        }
      }
}

template <typename T>
void col2im(const ConvGeom& g, const T* col, int row0, int rows, T* x) {
  const std::size_t band = static_cast<std::size_t>(rows) * g.wo;
  for (int c = 0; c < g.cin; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const T* src_band = col + static_cast<std::size_t>((c * g.k + ky) * g.k + kx) * band;
        const auto [lo, hi] = g.valid_cols(kx);
        for (int r = 0; r < rows; ++r) {
          const int iy = (row0 + r) * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.h) continue;
          const T* s = src_band + static_cast<std::size_t>(r) * g.wo;
          T* dst = x + (static_cast<std::size_t>(c) * g.h + iy) * g.w;
          const int off = kx - g.pad;
          if (g.stride == 1) {
            T* d = dst + off;
            for (int ox = lo; ox < hi; ++ox) d[ox] += s[ox];
          } else {
            for (int ox = lo; ox < hi; ++ox) dst[ox * g.stride + off] += s[ox];
          }
        }
      }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                 int pad) {
  if (!x.defined() || !w.defined()) throw InvalidArgument("conv2d: undefined tensor");
  const Shape xs = x.shape();
  const Shape ws = w.shape();
  if (stride < 1) throw InvalidArgument("conv2d: stride must be >= 1");
  if (pad < 0) throw InvalidArgument("conv2d: pad must be >= 0");
  if (ws.h != ws.w) throw InvalidShape("conv2d: kernel must be square, got " + ws.str());
  if (xs.c != ws.c)
    throw InvalidShape("conv2d: input " + xs.str() + " has " + std::to_string(xs.c) +
                       " channels, kernel " + ws.str() + " expects " + std::to_string(ws.c));
  if (b.defined() && static_cast<int>(b.numel()) != ws.n)
    throw InvalidShape("conv2d: bias " + b.shape().str() + " for " + std::to_string(ws.n) +
                       " output channels");
  ConvGeom g{xs.c, xs.h, xs.w, ws.n, ws.h, stride, pad, 0, 0};
  if (xs.h + 2 * pad < g.k || xs.w + 2 * pad < g.k)
    throw InvalidShape("conv2d: input " + xs.str() + " smaller than kernel " + ws.str());
  g.ho = (xs.h + 2 * pad - g.k) / stride + 1;
  g.wo = (xs.w + 2 * pad - g.k) / stride + 1;
  const int batch = xs.n;
  const Shape os{batch, g.cout, g.ho, g.wo};
  const std::size_t in_plane = static_cast<std::size_t>(g.h) * g.w;
  const std::size_t out_plane = static_cast<std::size_t>(g.ho) * g.wo;

  auto out = make_result<T>(
      os, "conv2d", {x.node_ptr(), w.node_ptr(), b.defined() ? b.node_ptr() : nullptr},
      [g, batch, in_plane, out_plane](Node<T>& self) {
        Node<T>& nx = *self.inputs[0];
        Node<T>& nw = *self.inputs[1];
        Node<T>* nb = self.inputs[2].get();
        const T* gy = self.grad.data();
        const int kdim = g.patch();
        if (nb != nullptr && nb->requires_grad) {
          T* gb = nb->grad_buffer();
          for (int n = 0; n < batch; ++n)
            for (int c = 0; c < g.cout; ++c) {
              const T* p = gy + (static_cast<std::size_t>(n) * g.cout + c) * out_plane;
              double acc = 0.0;
              for (std::size_t i = 0; i < out_plane; ++i) acc += p[i];
              gb[c] += static_cast<T>(acc);
            }
        }
        const bool need_w = nw.requires_grad;
        const bool need_x = nx.requires_grad;
        if (!need_w && !need_x) return;
        T* gw = need_w ? nw.grad_buffer() : nullptr;
        T* gx = need_x ? nx.grad_buffer() : nullptr;
        const T* wd = nw.data.data();
        if (g.pointwise()) {
          const int hw = static_cast<int>(out_plane);
          for (int n = 0; n < batch; ++n) {
            const T* gyn = gy + static_cast<std::size_t>(n) * g.cout * out_plane;
            const T* xn = nx.data.data() + static_cast<std::size_t>(n) * g.cin * in_plane;
            if (need_w) blas::gemm(false, true, g.cout, g.cin, hw, T(1), gyn, hw, xn, hw, T(1), gw, g.cin);
            if (need_x)
              blas::gemm(true, false, g.cin, hw, g.cout, T(1), wd, g.cin, gyn, hw, T(1),
                         gx + static_cast<std::size_t>(n) * g.cin * in_plane, hw);
          }
          return;
        }
        const int band_rows = g.band_rows();
        std::vector<T> col(static_cast<std::size_t>(kdim) * band_rows * g.wo);
        std::vector<T> dcol(need_x ? col.size() : 0);
        for (int n = 0; n < batch; ++n) {
          const T* xn = nx.data.data() + static_cast<std::size_t>(n) * g.cin * in_plane;
          const T* gyn = gy + static_cast<std::size_t>(n) * g.cout * out_plane;
          for (int row0 = 0; row0 < g.ho; row0 += band_rows) {
            const int rows = std::min(band_rows, g.ho - row0);
            const int cols = rows * g.wo;
            const T* gyb = gyn + static_cast<std::size_t>(row0) * g.wo;
            if (need_w) {
              im2col(g, xn, row0, rows, col.data());
              blas::gemm(false, true, g.cout, kdim, cols, T(1), gyb, static_cast<int>(out_plane),
                         col.data(), cols, T(1), gw, kdim);
            }
            if (need_x) {
              blas::gemm(true, false, kdim, cols, g.cout, T(1), wd, kdim, gyb,
                         static_cast<int>(out_plane), T(0), dcol.data(), cols);
              col2im(g, dcol.data(), row0, rows, gx + static_cast<std::size_t>(n) * g.cin * in_plane);
            }
          }
        }
      });
  tally_flops("conv2d", 2LL * g.k * g.k * g.cin * g.cout * g.ho * g.wo * batch);
  if (meta_mode()) return out;

  T* po = out.node()->data.data();
  const T* wd = w.data().data();
  const int kdim = g.patch();
  if (g.pointwise()) {
    const int hw = static_cast<int>(out_plane);
    for (int n = 0; n < batch; ++n)
      blas::gemm(false, false, g.cout, hw, g.cin, T(1), wd, g.cin,
                 x.data().data() + static_cast<std::size_t>(n) * g.cin * in_plane, hw, T(0),
                 po + static_cast<std::size_t>(n) * g.cout * out_plane, hw);
  } else {
    const int band_rows = g.band_rows();
    std::vector<T> col(static_cast<std::size_t>(kdim) * band_rows * g.wo);
    for (int n = 0; n < batch; ++n) {
      const T* xn = x.data().data() + static_cast<std::size_t>(n) * g.cin * in_plane;
      T* on = po + static_cast<std::size_t>(n) * g.cout * out_plane;
      for (int row0 = 0; row0 < g.ho; row0 += band_rows) {
        const int rows = std::min(band_rows, g.ho - row0);
        im2col(g, xn, row0, rows, col.data());
        blas::gemm(false, false, g.cout, rows * g.wo, kdim, T(1), wd, kdim, col.data(),
                   rows * g.wo, T(0), on + static_cast<std::size_t>(row0) * g.wo,
                   static_cast<int>(out_plane));
      }
    }
  }
  if (b.defined()) {
    const T* bd = b.data().data();
    for (int n = 0; n < batch; ++n)
      for (int c = 0; c < g.cout; ++c) {
        T* p = po + (static_cast<std::size_t>(n) * g.cout + c) * out_plane;
        const T bias = bd[c];
        for (std::size_t i = 0; i < out_plane; ++i) p[i] += bias;
      }
  }
  return out;
}

template Tensor<float> conv2d(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                              int, int);
template Tensor<double> conv2d(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&, int, int);

}  // namespace glpge::diff
