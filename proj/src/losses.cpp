#include "glpge/losses.hpp"

#include <cmath>

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge {

using diff::Shape;
using diff::Tensor;

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape()))
    throw InvalidShape("l1_loss: " + a.shape().str() + " vs " + b.shape().str());
  return diff::mean(diff::abs(diff::sub(a, b)));
}

std::array<double, kSsimWindow> ssim_taps() {
  std::array<double, kSsimWindow> g{};
  double total = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

namespace {

constexpr int kWin = kSsimWindow;

// Valid separable Gaussian filter of an h x w plane -> (h-10) x (w-10).
void gauss_valid(const double* src, int h, int w, const std::array<double, kWin>& g,
                 std::vector<double>& tmp, double* dst) {
  const int wo = w - kWin + 1;
  const int ho = h - kWin + 1;
  tmp.resize(static_cast<std::size_t>(h) * wo);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wo; ++x) {
      double acc = 0.0;
      const double* row = src + static_cast<std::size_t>(y) * w + x;
      for (int k = 0; k < kWin; ++k) acc += g[k] * row[k];
      tmp[static_cast<std::size_t>(y) * wo + x] = acc;
    }
  for (int y = 0; y < ho; ++y)
    for (int x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * tmp[static_cast<std::size_t>(y + k) * wo + x];
      dst[static_cast<std::size_t>(y) * wo + x] = acc;
    }
}

// Adjoint of gauss_valid: scatters an (h-10) x (w-10) map back onto h x w.
void gauss_valid_adjoint(const double* src, int h, int w, const std::array<double, kWin>& g,
                         std::vector<double>& tmp, double* dst) {
  const int wo = w - kWin + 1;
  const int ho = h - kWin + 1;
  tmp.assign(static_cast<std::size_t>(h) * wo, 0.0);
  for (int y = 0; y < ho; ++y)
    for (int x = 0; x < wo; ++x) {
      const double v = src[static_cast<std::size_t>(y) * wo + x];
      for (int k = 0; k < kWin; ++k) tmp[static_cast<std::size_t>(y + k) * wo + x] += g[k] * v;
    }
  std::fill(dst, dst + static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wo; ++x) {
      const double v = tmp[static_cast<std::size_t>(y) * wo + x];
      double* row = dst + static_cast<std::size_t>(y) * w + x;
      for (int k = 0; k < kWin; ++k) row[k] += g[k] * v;
    }
}

struct SsimStats {
  std::vector<double> mx, my, exx, eyy, exy;
};

// Windowed first and second moments of one plane pair. x*x and x*y go through
// the same product and filter, so identical planes give exactly equal
// variance and covariance.
template <typename T>
SsimStats plane_stats(const T* a, const T* b, int h, int w, const std::array<double, kWin>& g) {
  const std::size_t n = static_cast<std::size_t>(h) * w;
  const std::size_t no = static_cast<std::size_t>(h - kWin + 1) * (w - kWin + 1);
  std::vector<double> x(n), y(n), buf(n), tmp;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = a[i];
    y[i] = b[i];
  }
  SsimStats s;
  for (auto* v : {&s.mx, &s.my, &s.exx, &s.eyy, &s.exy}) v->resize(no);
  gauss_valid(x.data(), h, w, g, tmp, s.mx.data());
  gauss_valid(y.data(), h, w, g, tmp, s.my.data());
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * x[i];
  gauss_valid(buf.data(), h, w, g, tmp, s.exx.data());
  for (std::size_t i = 0; i < n; ++i) buf[i] = y[i] * y[i];
  gauss_valid(buf.data(), h, w, g, tmp, s.eyy.data());
  for (std::size_t i = 0; i < n; ++i) buf[i] = x[i] * y[i];
  gauss_valid(buf.data(), h, w, g, tmp, s.exy.data());
  return s;
}

}  // namespace

template <typename T>
Tensor<T> ssim_index(const Tensor<T>& a, const Tensor<T>& b) {
  if (!(a.shape() == b.shape()))
    throw InvalidShape("ssim: " + a.shape().str() + " vs " + b.shape().str());
  const Shape s = a.shape();
  if (s.h < kWin || s.w < kWin)
    throw InvalidArgument("ssim: extents of " + s.str() + " are smaller than the 11x11 window");
  const int ho = s.h - kWin + 1;
  const int wo = s.w - kWin + 1;
  const std::size_t no = static_cast<std::size_t>(ho) * wo;
  const double count = static_cast<double>(no) * s.n * s.c;

  auto out = diff::make_result<T>({1, 1, 1, 1}, "ssim", {a.node_ptr(), b.node_ptr()}, [s, no, count](diff::Node<T>& self) {
    diff::Node<T>& na = *self.inputs[0];
    diff::Node<T>& nb = *self.inputs[1];
    if (!na.requires_grad && !nb.requires_grad) return;
    const auto g = ssim_taps();
    const double up = static_cast<double>(self.grad[0]) / count;
    const std::size_t plane = s.plane();
    std::vector<double> dmx(no), dmy(no), dexx(no), deyy(no), dexy(no), back(plane), tmp;
    T* ga = na.requires_grad ? na.grad_buffer() : nullptr;
    T* gb = nb.requires_grad ? nb.grad_buffer() : nullptr;
    for (int nc = 0; nc < s.n * s.c; ++nc) {
      const T* pa = na.data.data() + nc * plane;
      const T* pb = nb.data.data() + nc * plane;
      const SsimStats st = plane_stats(pa, pb, s.h, s.w, g);
      for (std::size_t i = 0; i < no; ++i) {
        const double mx = st.mx[i], my = st.my[i];
        const double sxx = st.exx[i] - mx * mx;
        const double syy = st.eyy[i] - my * my;
        const double sxy = st.exy[i] - mx * my;
        const double a1 = 2.0 * (mx * my) + kSsimC1;
        const double a2 = 2.0 * sxy + kSsimC2;
        const double b1 = mx * mx + my * my + kSsimC1;
        const double b2 = sxx + syy + kSsimC2;
        const double ssim = (a1 * a2) / (b1 * b2);
        dexy[i] = up * 2.0 * a1 / (b1 * b2);
        dexx[i] = -up * ssim / b2;
        deyy[i] = dexx[i];
        dmx[i] = up * ssim * (2.0 * my / a1 - 2.0 * my / a2 - 2.0 * mx / b1 + 2.0 * mx / b2);
        dmy[i] = up * ssim * (2.0 * mx / a1 - 2.0 * mx / a2 - 2.0 * my / b1 + 2.0 * my / b2);
      }
      std::vector<double> gmx(plane), gmy(plane), gxx(plane), gyy(plane), gxy(plane);
      gauss_valid_adjoint(dmx.data(), s.h, s.w, g, tmp, gmx.data());
      gauss_valid_adjoint(dmy.data(), s.h, s.w, g, tmp, gmy.data());
      gauss_valid_adjoint(dexx.data(), s.h, s.w, g, tmp, gxx.data());
      gauss_valid_adjoint(deyy.data(), s.h, s.w, g, tmp, gyy.data());
      gauss_valid_adjoint(dexy.data(), s.h, s.w, g, tmp, gxy.data());
      for (std::size_t i = 0; i < plane; ++i) {
        const double x = pa[i], y = pb[i];
        if (ga != nullptr) ga[nc * plane + i] += static_cast<T>(gmx[i] + 2.0 * x * gxx[i] + y * gxy[i]);
        if (gb != nullptr) gb[nc * plane + i] += static_cast<T>(gmy[i] + 2.0 * y * gyy[i] + x * gxy[i]);
      }
    }
  });
  diff::tally_flops("ssim", 1);
  if (diff::meta_mode()) return out;
  const auto g = ssim_taps();
  double total = 0.0;
  const std::size_t plane = s.plane();
  for (int nc = 0; nc < s.n * s.c; ++nc) {
    const SsimStats st = plane_stats(a.data().data() + nc * plane, b.data().data() + nc * plane, s.h, s.w, g);
    for (std::size_t i = 0; i < no; ++i) {
      const double mx = st.mx[i], my = st.my[i];
      const double sxx = st.exx[i] - mx * mx;
      const double syy = st.eyy[i] - my * my;
      const double sxy = st.exy[i] - mx * my;
      const double a1 = 2.0 * (mx * my) + kSsimC1;
      const double a2 = 2.0 * sxy + kSsimC2;
      const double b1 = mx * mx + my * my + kSsimC1;
      const double b2 = sxx + syy + kSsimC2;
      total += (a1 * a2) / (b1 * b2);
    }
  }
  out.node()->data[0] = static_cast<T>(total / count);
  return out;
}

template <typename T>
Tensor<T> ssim_loss(const Tensor<T>& a, const Tensor<T>& b) {
  return diff::add_scalar(diff::scale(ssim_index(a, b), T(-1)), T(1));
}

template <typename T>
Tensor<T> tv_loss(const Tensor<T>& x) {
  const Shape s = x.shape();
  if (s.h < 2 || s.w < 2) throw InvalidArgument("tv_loss: extents must be >= 2, got " + s.str());
  const Tensor<T> dh = diff::sub(diff::crop(x, 1, 0, s.h - 1, s.w), diff::crop(x, 0, 0, s.h - 1, s.w));
  const Tensor<T> dw = diff::sub(diff::crop(x, 0, 1, s.h, s.w - 1), diff::crop(x, 0, 0, s.h, s.w - 1));
  return diff::add(diff::mean(diff::square(dh)), diff::mean(diff::square(dw)));
}

template <typename T>
Tensor<T> smoothness_reg(const Tensor<T>& alpha, const Tensor<T>& beta) {
  return diff::add(tv_loss(alpha), tv_loss(beta));
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg) {
  if (cfg.widths.empty()) throw ConfigError("discriminator: needs at least one feature layer");
  Rng rng = Rng(cfg.seed).stream(0x6469);
  int cin = 3;
  for (std::size_t l = 0; l < cfg.widths.size(); ++l) {
    if (cfg.widths[l] < 1) throw ConfigError("discriminator: widths must be positive");
    const int stride = l + 1 < cfg.widths.size() ? 2 : 1;
    convs_.push_back(diff::Conv2d<T>::make(store_, "disc." + std::to_string(l), "disc", cin, cfg.widths[l], 4,
                                           stride, 1, rng));
    cin = cfg.widths[l];
  }
  convs_.push_back(diff::Conv2d<T>::make(store_, "disc.score", "disc", cin, 1, 4, 1, 1, rng));
}

template <typename T>
Tensor<T> Discriminator<T>::operator()(const Tensor<T>& x) const {
  diff::FlopScope scope("disc");
  Tensor<T> h = x;
  for (std::size_t l = 0; l < convs_.size(); ++l) {
    h = convs_[l](h);
    if (l + 1 < convs_.size()) h = diff::leaky_relu(h);
  }
  return h;
}

template <typename T>
int Discriminator<T>::receptive_field() const {
  int rf = 1;
  for (auto it = convs_.rbegin(); it != convs_.rend(); ++it) {
    const int k = static_cast<int>(it->weight.shape().h);
    rf = (rf - 1) * it->stride + k;
  }
  return rf;
}

template <typename T>
Tensor<T> lsgan_d_loss(const Tensor<T>& d_real, const Tensor<T>& d_fake) {
  const Tensor<T> r = diff::mean(diff::square(diff::add_scalar(d_real, T(-1))));
  const Tensor<T> f = diff::mean(diff::square(d_fake));
  return diff::scale(diff::add(r, f), T(0.5));
}

template <typename T>
Tensor<T> lsgan_g_loss(const Tensor<T>& d_fake) {
  return diff::mean(diff::square(diff::add_scalar(d_fake, T(-1))));
}

template <typename T>
AdversarialLosses<T> adversarial_losses(const Discriminator<T>& disc, const Tensor<T>& real, const Tensor<T>& fake) {
  if (!(real.shape() == fake.shape()))
    throw InvalidShape("adversarial_losses: " + real.shape().str() + " vs " + fake.shape().str());
  AdversarialLosses<T> out;
  out.d_loss = lsgan_d_loss(disc(real.detach()), disc(fake.detach()));
  out.g_loss = lsgan_g_loss(disc(fake));
  return out;
}

template <typename T>
CompositeLoss<T> composite_loss(const LossWeights& w, const LossParts<T>& p) {
  const auto lambda = w.values();
  CompositeLoss<T> out;
  Tensor<T> total;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const Tensor<T>& part = p.parts[i];
    if (!part.defined()) continue;
    if (!part.shape().is_scalar()) throw InvalidShape(std::string("composite_loss: part ") + kLossNames[i] + " is not scalar");
    if (!part.is_meta()) out.components[i] = static_cast<double>(part.item());
    if (lambda[i] == 0.0) continue;
    const Tensor<T> term = diff::scale(part, static_cast<T>(lambda[i]));
    total = total.defined() ? diff::add(total, term) : term;
  }
  out.total = total.defined() ? total : Tensor<T>::scalar(T(0));
  return out;
}

double composite_value(const LossWeights& w, const std::array<double, 5>& parts) {
  const auto lambda = w.values();
  double total = 0.0;
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (lambda[i] != 0.0) total += lambda[i] * parts[i];
  return total;
}

#define GLPGE_LOSSES(T)                                                                      \
  template Tensor<T> l1_loss(const Tensor<T>&, const Tensor<T>&);                            \
  template Tensor<T> ssim_index(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> ssim_loss(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> tv_loss(const Tensor<T>&);                                              \
  template Tensor<T> smoothness_reg(const Tensor<T>&, const Tensor<T>&);                     \
  template class Discriminator<T>;                                                           \
  template Tensor<T> lsgan_d_loss(const Tensor<T>&, const Tensor<T>&);                       \
  template Tensor<T> lsgan_g_loss(const Tensor<T>&);                                         \
  template AdversarialLosses<T> adversarial_losses(const Discriminator<T>&, const Tensor<T>&, \
                                                   const Tensor<T>&);                        \
  template CompositeLoss<T> composite_loss(const LossWeights&, const LossParts<T>&);

GLPGE_LOSSES(float)
GLPGE_LOSSES(double)

}  // namespace glpge
