#include "glpge/diff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "glpge/errors.hpp"

namespace glpge::diff {

namespace {

template <typename T>
void require_defined(const Tensor<T>& x, const char* op) {
  if (!x.defined()) throw InvalidArgument(std::string(op) + ": undefined tensor");
}

template <typename T>
std::int64_t elems(const Shape& s) {
  return static_cast<std::int64_t>(s.numel());
}

// Elementwise unary op with a derivative expressed through input and output.
template <typename T, typename Fwd, typename Deriv>
Tensor<T> unary(const Tensor<T>& x, const char* op, Fwd fwd, Deriv deriv) {
  require_defined(x, op);
  auto out = make_result<T>(x.shape(), op, {x.node_ptr()}, [deriv](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const std::size_t n = self.data.size();
    for (std::size_t i = 0; i < n; ++i) gi[i] += self.grad[i] * deriv(in.data[i], self.data[i]);
  });
  tally_flops(op, elems<T>(x.shape()));
  if (meta_mode()) return out;
  const auto src = x.data();
  auto& dst = out.node()->data;
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = fwd(src[i]);
  return out;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  auto dim = [&](int x, int y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw InvalidShape(std::string(op) + ": cannot broadcast " + a.str() + " with " + b.str());
  };
  return {dim(a.n, b.n), dim(a.c, b.c), dim(a.h, b.h), dim(a.w, b.w)};
}

struct Strides {
  std::size_t n, c, h, w;
};

// Strides of `s` when iterated over the broadcast shape `out` (0 on
// broadcast extents).
Strides broadcast_strides(const Shape& s, const Shape& out) {
  const std::size_t sw = 1;
  const std::size_t sh = static_cast<std::size_t>(s.w);
  const std::size_t sc = sh * s.h;
  const std::size_t sn = sc * s.c;
  return {s.n == out.n ? sn : 0, s.c == out.c ? sc : 0, s.h == out.h ? sh : 0,
          s.w == out.w ? sw : 0};
}

template <typename F>
void for_each_broadcast(const Shape& out, const Strides& sa, const Strides& sb, F f) {
  std::size_t o = 0;
  for (int n = 0; n < out.n; ++n)
    for (int c = 0; c < out.c; ++c)
      for (int h = 0; h < out.h; ++h) {
        const std::size_t ia = n * sa.n + c * sa.c + h * sa.h;
        const std::size_t ib = n * sb.n + c * sb.c + h * sb.h;
        for (int w = 0; w < out.w; ++w, ++o) f(o, ia + w * sa.w, ib + w * sb.w);
      }
}

enum class BinOp { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, BinOp kind, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  const Shape os = broadcast_shape(a.shape(), b.shape(), op);
  const Strides sa = broadcast_strides(a.shape(), os);
  const Strides sb = broadcast_strides(b.shape(), os);
  const bool same = a.shape() == os && b.shape() == os;
  auto out = make_result<T>(os, op, {a.node_ptr(), b.node_ptr()},
                            [kind, sa, sb, same, os](Node<T>& self) {
    Node<T>& na = *self.inputs[0];
    Node<T>& nb = *self.inputs[1];
    const T* g = self.grad.data();
    if (na.requires_grad) {
      T* ga = na.grad_buffer();
      if (same && kind != BinOp::kMul) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += g[i];
      } else {
        for_each_broadcast(os, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
          ga[ia] += kind == BinOp::kMul ? g[o] * nb.data[ib] : g[o];
        });
      }
    }
    if (nb.requires_grad) {
      T* gb = nb.grad_buffer();
      for_each_broadcast(os, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
        switch (kind) {
          case BinOp::kAdd: gb[ib] += g[o]; break;
          case BinOp::kSub: gb[ib] -= g[o]; break;
          case BinOp::kMul: gb[ib] += g[o] * na.data[ia]; break;
        }
      });
    }
  });
  tally_flops(op, elems<T>(os));
  if (meta_mode()) return out;
  const T* pa = a.data().data();
  const T* pb = b.data().data();
  T* po = out.node()->data.data();
  auto apply = [kind](T x, T y) {
    switch (kind) {
      case BinOp::kAdd: return x + y;
      case BinOp::kSub: return x - y;
      case BinOp::kMul: return x * y;
    }
    return T(0);
  };
  if (same) {
    for (std::size_t i = 0; i < os.numel(); ++i) po[i] = apply(pa[i], pb[i]);
  } else {
    for_each_broadcast(os, sa, sb, [&](std::size_t o, std::size_t ia, std::size_t ib) {
      po[o] = apply(pa[ia], pb[ib]);
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_defined(x, "linear");
  const Shape xs = x.shape();
  const int in = xs.c * xs.h * xs.w;
  const int out_f = w.shape().n;
  if (w.shape().c * w.shape().h * w.shape().w != in)
    throw InvalidShape("linear: weight " + w.shape().str() + " does not accept input " + xs.str());
  if (b.defined() && static_cast<int>(b.numel()) != out_f)
    throw InvalidShape("linear: bias " + b.shape().str() + " for " + std::to_string(out_f) +
                       " outputs");
  const int batch = xs.n;
  auto out = make_result<T>({batch, out_f, 1, 1}, "linear",
                            {x.node_ptr(), w.node_ptr(), b.defined() ? b.node_ptr() : nullptr},
                            [batch, in, out_f](Node<T>& self) {
    Node<T>& nx = *self.inputs[0];
    Node<T>& nw = *self.inputs[1];
    Node<T>* nb = self.inputs[2].get();
    const T* g = self.grad.data();
    if (nx.requires_grad) {
      T* gx = nx.grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int o = 0; o < out_f; ++o) {
          const T go = g[n * out_f + o];
          const T* wr = nw.data.data() + static_cast<std::size_t>(o) * in;
          T* gxr = gx + static_cast<std::size_t>(n) * in;
          for (int i = 0; i < in; ++i) gxr[i] += go * wr[i];
        }
    }
    if (nw.requires_grad) {
      T* gw = nw.grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int o = 0; o < out_f; ++o) {
          const T go = g[n * out_f + o];
          const T* xr = nx.data.data() + static_cast<std::size_t>(n) * in;
          T* gwr = gw + static_cast<std::size_t>(o) * in;
          for (int i = 0; i < in; ++i) gwr[i] += go * xr[i];
        }
    }
    if (nb != nullptr && nb->requires_grad) {
      T* gb = nb->grad_buffer();
      for (int n = 0; n < batch; ++n)
        for (int o = 0; o < out_f; ++o) gb[o] += g[n * out_f + o];
    }
  });
  tally_flops("linear", 2LL * in * out_f * batch);
  if (meta_mode()) return out;
  T* po = out.node()->data.data();
  const T* px = x.data().data();
  const T* pw = w.data().data();
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < out_f; ++o) {
      double acc = b.defined() ? static_cast<double>(b.data()[o]) : 0.0;
      const T* wr = pw + static_cast<std::size_t>(o) * in;
      const T* xr = px + static_cast<std::size_t>(n) * in;
      for (int i = 0; i < in; ++i) acc += static_cast<double>(wr[i]) * xr[i];
      po[n * out_f + o] = static_cast<T>(acc);
    }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  if (auto* kt = active_kink_trace(); kt != nullptr && !x.is_meta())
    for (T v : x.data()) kt->note(v > T(0));
  return unary(x, "relu", [](T v) { return v > T(0) ? v : T(0); },
               [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  if (auto* kt = active_kink_trace(); kt != nullptr && !x.is_meta())
    for (T v : x.data()) kt->note(v > T(0));
  return unary(x, "leaky_relu", [slope](T v) { return v > T(0) ? v : v * slope; },
               [slope](T v, T) { return v > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  return unary(x, "tanh", [](T v) { return std::tanh(v); },
               [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(x, "sigmoid", [](T v) { return T(1) / (T(1) + std::exp(-v)); },
               [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
  if (auto* kt = active_kink_trace(); kt != nullptr && !x.is_meta())
    for (T v : x.data()) kt->note(v < T(0) ? 0 : (v > T(1) ? 2 : 1));
  return unary(x, "clamp01", [](T v) { return std::clamp(v, T(0), T(1)); },
               [](T v, T) { return (v >= T(0) && v <= T(1)) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
  if (auto* kt = active_kink_trace(); kt != nullptr && !x.is_meta())
    for (T v : x.data()) kt->note(v >= T(0));
  return unary(x, "abs", [](T v) { return std::abs(v); },
               [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return unary(x, "square", [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T factor) {
  return unary(x, "scale", [factor](T v) { return v * factor; },
               [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T value) {
  return unary(x, "add_scalar", [value](T v) { return v + value; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kAdd, "add");
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kSub, "sub");
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, BinOp::kMul, "mul");
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw InvalidArgument("concat_channels: no inputs");
  const Shape first = parts[0].shape();
  int channels = 0;
  std::vector<NodePtr<T>> inputs;
  std::vector<int> widths;
  for (const auto& p : parts) {
    require_defined(p, "concat_channels");
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w)
      throw InvalidShape("concat_channels: " + s.str() + " does not match " + first.str());
    channels += s.c;
    widths.push_back(s.c);
    inputs.push_back(p.node_ptr());
  }
  const Shape os{first.n, channels, first.h, first.w};
  const std::size_t plane = first.plane();
  auto out = make_result<T>(os, "concat_channels", inputs, [widths, plane, channels](Node<T>& self) {
    const int batch = self.shape.n;
    int offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      Node<T>& in = *self.inputs[k];
      if (in.requires_grad) {
        T* gi = in.grad_buffer();
        const std::size_t len = widths[k] * plane;
        for (int n = 0; n < batch; ++n) {
          const T* src = self.grad.data() + (static_cast<std::size_t>(n) * channels + offset) * plane;
          T* dst = gi + n * len;
          for (std::size_t i = 0; i < len; ++i) dst[i] += src[i];
        }
      }
      offset += widths[k];
    }
  });
  tally_flops("concat_channels", elems<T>(os));
  if (meta_mode()) return out;
  T* po = out.node()->data.data();
  for (int n = 0; n < first.n; ++n) {
    for (const auto& p : parts) {
      const std::size_t len = p.shape().c * plane;
      const T* src = p.data().data() + n * len;
      po = std::copy(src, src + len, po);
    }
  }
  return out;
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_defined(x, "global_avg_pool");
  const Shape s = x.shape();
  const std::size_t plane = s.plane();
  auto out = make_result<T>({s.n, s.c, 1, 1}, "global_avg_pool", {x.node_ptr()},
                            [plane](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const T inv = T(1) / static_cast<T>(plane);
    for (std::size_t k = 0; k < self.grad.size(); ++k) {
      const T g = self.grad[k] * inv;
      for (std::size_t i = 0; i < plane; ++i) gi[k * plane + i] += g;
    }
  });
  tally_flops("global_avg_pool", static_cast<std::int64_t>(s.n) * s.c);
  if (meta_mode()) return out;
  const T* px = x.data().data();
  T* po = out.node()->data.data();
  for (std::size_t k = 0; k < static_cast<std::size_t>(s.n) * s.c; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < plane; ++i) acc += px[k * plane + i];
    po[k] = static_cast<T>(acc / static_cast<double>(plane));
  }
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  require_defined(x, "sum");
  auto out = make_result<T>({1, 1, 1, 1}, "sum", {x.node_ptr()}, [](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const T g = self.grad[0];
    for (std::size_t i = 0; i < in.data.size(); ++i) gi[i] += g;
  });
  tally_flops("sum", 1);
  if (meta_mode()) return out;
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  out.node()->data[0] = static_cast<T>(acc);
  return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  require_defined(x, "mean");
  const std::size_t count = x.numel();
  auto out = make_result<T>({1, 1, 1, 1}, "mean", {x.node_ptr()}, [count](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const T g = self.grad[0] / static_cast<T>(count);
    for (std::size_t i = 0; i < in.data.size(); ++i) gi[i] += g;
  });
  tally_flops("mean", 1);
  if (meta_mode()) return out;
  double acc = 0.0;
  for (T v : x.data()) acc += v;
  out.node()->data[0] = static_cast<T>(acc / static_cast<double>(count));
  return out;
}

template <typename T>
Tensor<T> max_pool2(const Tensor<T>& x) {
  require_defined(x, "max_pool2");
  const Shape s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0)
    throw InvalidShape("max_pool2: extents must be even, got " + s.str());
  const Shape os{s.n, s.c, s.h / 2, s.w / 2};
  // Argmax offsets are recomputed in backward from the saved input.
  auto out = make_result<T>(os, "max_pool2", {x.node_ptr()}, [s, os](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    std::size_t o = 0;
    for (int nc = 0; nc < s.n * s.c; ++nc) {
      const T* plane = in.data.data() + static_cast<std::size_t>(nc) * s.plane();
      T* gplane = gi + static_cast<std::size_t>(nc) * s.plane();
      for (int y = 0; y < os.h; ++y)
        for (int xx = 0; xx < os.w; ++xx, ++o) {
          std::size_t best = static_cast<std::size_t>(2 * y) * s.w + 2 * xx;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const std::size_t idx = static_cast<std::size_t>(2 * y + dy) * s.w + 2 * xx + dx;
              if (plane[idx] > plane[best]) best = idx;
            }
          gplane[best] += self.grad[o];
        }
    }
  });
  tally_flops("max_pool2", elems<T>(os));
  if (meta_mode()) return out;
  KinkTrace* kt = active_kink_trace();
  T* po = out.node()->data.data();
  std::size_t o = 0;
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const T* plane = x.data().data() + static_cast<std::size_t>(nc) * s.plane();
    for (int y = 0; y < os.h; ++y)
      for (int xx = 0; xx < os.w; ++xx, ++o) {
        std::size_t best = static_cast<std::size_t>(2 * y) * s.w + 2 * xx;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t idx = static_cast<std::size_t>(2 * y + dy) * s.w + 2 * xx + dx;
            if (plane[idx] > plane[best]) best = idx;
          }
        po[o] = plane[best];
        if (kt != nullptr) kt->note(best);
      }
  }
  return out;
}

namespace {

// Index map shared by shuffle and unshuffle: position of the unshuffled
// element (n, c*r*r + dy*r + dx, y, x) in the shuffled tensor.
template <typename F>
void for_each_unshuffle(const Shape& big, int r, F f) {
  const int oh = big.h / r;
  const int ow = big.w / r;
  const int oc = big.c * r * r;
  std::size_t small_idx = 0;
  for (int n = 0; n < big.n; ++n)
    for (int k = 0; k < oc; ++k) {
      const int c = k / (r * r);
      const int dy = (k / r) % r;
      const int dx = k % r;
      for (int y = 0; y < oh; ++y) {
        const std::size_t row =
            ((static_cast<std::size_t>(n) * big.c + c) * big.h + (y * r + dy)) * big.w;
        for (int x = 0; x < ow; ++x, ++small_idx) f(small_idx, row + x * r + dx);
      }
    }
}

}  // namespace

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  require_defined(x, "pixel_unshuffle");
  const Shape s = x.shape();
  if (r < 1) throw InvalidArgument("pixel_unshuffle: factor must be >= 1");
  if (s.h % r != 0 || s.w % r != 0)
    throw InvalidShape("pixel_unshuffle: " + s.str() + " not divisible by " + std::to_string(r));
  const Shape os{s.n, s.c * r * r, s.h / r, s.w / r};
  auto out = make_result<T>(os, "pixel_unshuffle", {x.node_ptr()}, [s, r](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    for_each_unshuffle(s, r, [&](std::size_t small, std::size_t big) { gi[big] += self.grad[small]; });
  });
  tally_flops("pixel_unshuffle", elems<T>(os));
  if (meta_mode()) return out;
  const T* px = x.data().data();
  T* po = out.node()->data.data();
  for_each_unshuffle(s, r, [&](std::size_t small, std::size_t big) { po[small] = px[big]; });
  return out;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  require_defined(x, "pixel_shuffle");
  const Shape s = x.shape();
  if (r < 1) throw InvalidArgument("pixel_shuffle: factor must be >= 1");
  if (s.c % (r * r) != 0)
    throw InvalidShape("pixel_shuffle: channels of " + s.str() + " not divisible by " +
                       std::to_string(r * r));
  const Shape os{s.n, s.c / (r * r), s.h * r, s.w * r};
  auto out = make_result<T>(os, "pixel_shuffle", {x.node_ptr()}, [os, r](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    for_each_unshuffle(os, r, [&](std::size_t small, std::size_t big) { gi[small] += self.grad[big]; });
  });
  tally_flops("pixel_shuffle", elems<T>(os));
  if (meta_mode()) return out;
  const T* px = x.data().data();
  T* po = out.node()->data.data();
  for_each_unshuffle(os, r, [&](std::size_t small, std::size_t big) { po[big] = px[small]; });
  return out;
}

template <typename T>
Tensor<T> luminance(const Tensor<T>& x) {
  require_defined(x, "luminance");
  const Shape s = x.shape();
  if (s.c != 3) throw InvalidShape("luminance: expected 3 channels, got " + s.str());
  const Shape os{s.n, 1, s.h, s.w};
  const std::size_t plane = s.plane();
  const T wr = static_cast<T>(kLumaR);
  const T wg = static_cast<T>(kLumaG);
  const T wb = static_cast<T>(kLumaB);
  auto out = make_result<T>(os, "luminance", {x.node_ptr()}, [plane, wr, wg, wb](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    for (int n = 0; n < self.shape.n; ++n) {
      T* base = gi + static_cast<std::size_t>(n) * 3 * plane;
      const T* g = self.grad.data() + n * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        base[i] += wr * g[i];
        base[plane + i] += wg * g[i];
        base[2 * plane + i] += wb * g[i];
      }
    }
  });
  tally_flops("luminance", elems<T>(os));
  if (meta_mode()) return out;
  const T* px = x.data().data();
  T* po = out.node()->data.data();
  for (int n = 0; n < s.n; ++n) {
    const T* base = px + static_cast<std::size_t>(n) * 3 * plane;
    for (std::size_t i = 0; i < plane; ++i)
      po[n * plane + i] = wr * base[i] + wg * base[plane + i] + wb * base[2 * plane + i];
  }
  return out;
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, int y0, int x0, int h, int w) {
  require_defined(x, "crop");
  const Shape s = x.shape();
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > s.h || x0 + w > s.w)
    throw InvalidShape("crop: window out of bounds for " + s.str());
  const Shape os{s.n, s.c, h, w};
  auto out = make_result<T>(os, "crop", {x.node_ptr()}, [s, y0, x0](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    if (!in.requires_grad) return;
    T* gi = in.grad_buffer();
    const Shape& o = self.shape;
    std::size_t k = 0;
    for (int nc = 0; nc < o.n * o.c; ++nc)
      for (int y = 0; y < o.h; ++y) {
        T* row = gi + (static_cast<std::size_t>(nc) * s.h + y0 + y) * s.w + x0;
        for (int xx = 0; xx < o.w; ++xx, ++k) row[xx] += self.grad[k];
      }
  });
  tally_flops("crop", elems<T>(os));
  if (meta_mode()) return out;
  T* po = out.node()->data.data();
  for (int nc = 0; nc < s.n * s.c; ++nc)
    for (int y = 0; y < h; ++y) {
      const T* row = x.data().data() + (static_cast<std::size_t>(nc) * s.h + y0 + y) * s.w + x0;
      po = std::copy(row, row + w, po);
    }
  return out;
}

#define GLPGE_INSTANTIATE(T)                                                          \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> relu(const Tensor<T>&);                                          \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                 \
  template Tensor<T> tanh(const Tensor<T>&);                                          \
  template Tensor<T> sigmoid(const Tensor<T>&);                                       \
  template Tensor<T> clamp01(const Tensor<T>&);                                       \
  template Tensor<T> abs(const Tensor<T>&);                                           \
  template Tensor<T> square(const Tensor<T>&);                                        \
  template Tensor<T> scale(const Tensor<T>&, T);                                      \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                 \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                     \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                               \
  template Tensor<T> mean(const Tensor<T>&);                                          \
  template Tensor<T> sum(const Tensor<T>&);                                           \
  template Tensor<T> max_pool2(const Tensor<T>&);                                     \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, int);                          \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, int);                            \
  template Tensor<T> luminance(const Tensor<T>&);                                     \
  template Tensor<T> crop(const Tensor<T>&, int, int, int, int);

GLPGE_INSTANTIATE(float)
GLPGE_INSTANTIATE(double)

#undef GLPGE_INSTANTIATE

}  // namespace glpge::diff
