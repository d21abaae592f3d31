#include "glpge/dblrnet.hpp"

#include <algorithm>
#include <cmath>

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge {

using diff::Tensor;

std::string to_string(RefineMode m) { return m == RefineMode::kDirect ? "direct" : "parametric"; }

RefineMode parse_refine_mode(const std::string& name) {
  if (name == "parametric") return RefineMode::kParametric;
  if (name == "direct") return RefineMode::kDirect;
  throw ConfigError("unknown refine mode '" + name + "'");
}

DblrnetConfig DblrnetConfig::micro() {
  DblrnetConfig c;
  c.widths = {8, 8, 8};
  c.growth = {4, 4, 4};
  c.layers = {2, 2, 2};
  c.smooth_width = 8;
  return c;
}

template <typename T>
Tensor<T> DenseBlock<T>::operator()(const Tensor<T>& x) const {
  std::vector<Tensor<T>> feats{x};
  for (const auto& conv : layers) {
    const Tensor<T> in = feats.size() == 1 ? x : diff::concat_channels<T>(feats);
    feats.push_back(diff::leaky_relu(conv(in)));
  }
  return diff::leaky_relu(transition(diff::concat_channels<T>(feats)));
}

template <typename T>
Dblrnet<T>::Dblrnet(const DblrnetConfig& cfg) : cfg_(cfg) {
  const int depth = cfg.depth();
  if (depth < 1 || cfg.growth.size() != cfg.widths.size() || cfg.layers.size() != cfg.widths.size())
    throw ConfigError("dblrnet: widths, growth and layers need one entry per level");
  for (int i = 0; i < depth; ++i)
    if (cfg.widths[i] < 1 || cfg.growth[i] < 1 || cfg.layers[i] < 1)
      throw ConfigError("dblrnet: widths, growth rates and layer counts must be positive");
  if (cfg.smooth_width < 1) throw ConfigError("dblrnet: smooth width must be positive");

  Rng root(cfg.seed);
  Rng rng = root.stream(0x736D);
  const int sw = cfg.smooth_width;
  const int widths[4] = {3, sw, sw, 3};
  for (int l = 0; l < 3; ++l) {
    auto conv = diff::Conv2d<T>::make(store_, "dblr.smooth." + std::to_string(l), "smooth",
                                      widths[l], widths[l + 1], 3, 1, 1, rng);
    auto w = conv.weight.mutable_data();
    for (auto& v : w) v = static_cast<T>(v * cfg.smooth_jitter);
    for (int c = 0; c < 3; ++c) w[((c * widths[l]) + c) * 9 + 4] += T(1);
    smooth_.push_back(conv);
  }

  rng = root.stream(0x636F);
  nodes_.resize(depth);
  for (int j = 0; j < depth; ++j)
    for (int i = 0; i + j < depth; ++i) {
      int cin = 0;
      if (j == 0)
        cin = i == 0 ? 12 : cfg.widths[i - 1];
      else
        cin = cfg.widths[i] * j + cfg.widths[i + 1];
      const std::string base = "dblr.node." + std::to_string(i) + "." + std::to_string(j);
      DenseBlock<T> block;
      int c = cin;
      for (int l = 0; l < cfg.layers[i]; ++l) {
        block.layers.push_back(diff::Conv2d<T>::make(store_, base + ".conv" + std::to_string(l), "coeff",
                                                     c, cfg.growth[i], 3, 1, 1, rng));
        c += cfg.growth[i];
      }
      block.transition = diff::Conv2d<T>::make(store_, base + ".transition", "coeff", c, cfg.widths[i],
                                               1, 1, 0, rng);
      nodes_[i].push_back(std::move(block));
    }
  alpha_ = diff::Conv2d<T>::make(store_, "dblr.head.alpha", "coeff", cfg.widths[0], 3, 1, 1, 0, rng);
  beta_ = diff::Conv2d<T>::make(store_, "dblr.head.beta", "coeff", cfg.widths[0], 3, 1, 1, 0, rng);
  direct_ = diff::Conv2d<T>::make(store_, "dblr.head.direct", "direct", cfg.widths[0], 12, 1, 1, 0, rng);
  reset_heads();
}

template <typename T>
void Dblrnet<T>::reset_heads() {
  for (auto* head : {&alpha_, &beta_}) {
    auto w = head->weight.mutable_data();
    std::fill(w.begin(), w.end(), T(0));
  }
  std::fill(alpha_.bias.mutable_data().begin(), alpha_.bias.mutable_data().end(), T(1));
  std::fill(beta_.bias.mutable_data().begin(), beta_.bias.mutable_data().end(), T(0));
}

template <typename T>
Tensor<T> Dblrnet<T>::smooth(const Tensor<T>& x) const {
  diff::FlopScope scope("smooth");
  if (cfg_.bypass_smooth) return x;
  Tensor<T> h = x;
  for (std::size_t l = 0; l < smooth_.size(); ++l) {
    h = smooth_[l](h);
    if (l + 1 < smooth_.size()) h = diff::leaky_relu(h);
  }
  return diff::clamp01(h);
}

template <typename T>
Tensor<T> Dblrnet<T>::features(const Tensor<T>& x) const {
  const int depth = cfg_.depth();
  const diff::Shape s = x.shape();
  const int m = 2 * (1 << (depth - 1));
  if (s.c != 3 || s.h % m != 0 || s.w % m != 0)
    throw InvalidShape("dblrnet: input " + s.str() + " must have 3 channels and extents divisible by " +
                       std::to_string(m));
  std::vector<std::vector<Tensor<T>>> X(depth);
  X[0].push_back(nodes_[0][0](diff::pixel_unshuffle(x, 2)));
  for (int i = 1; i < depth; ++i) X[i].push_back(nodes_[i][0](diff::max_pool2(X[i - 1][0])));
  for (int j = 1; j < depth; ++j)
    for (int i = 0; i + j < depth; ++i) {
      std::vector<Tensor<T>> parts(X[i].begin(), X[i].begin() + j);
      parts.push_back(diff::upsample_bilinear(X[i + 1][j - 1], 2));
      X[i].push_back(nodes_[i][j](diff::concat_channels<T>(parts)));
    }
  return X[0][depth - 1];
}

template <typename T>
CoefficientMaps<T> Dblrnet<T>::coefficients(const Tensor<T>& x, int k) const {
  if (k < 1) throw InvalidArgument("coeff_branch: down factor must be >= 1");
  const diff::Shape s = x.shape();
  if (s.h % (2 * k) != 0 || s.w % (2 * k) != 0)
    throw InvalidShape("coeff_branch: extents of " + s.str() + " not divisible by " + std::to_string(2 * k));
  Tensor<T> small = x;
  if (k > 1) {
    diff::FlopScope scope("coeff.resample");
    small = diff::resize_bilinear(x, s.h / k, s.w / k);
  }
  CoefficientMaps<T> maps;
  {
    diff::FlopScope scope("coeff");
    const Tensor<T> feat = features(small);
    maps.alpha = alpha_(feat);
    maps.beta = beta_(feat);
  }
  diff::FlopScope scope("coeff.resample");
  maps.alpha = diff::resize_bilinear(maps.alpha, s.h, s.w);
  maps.beta = diff::resize_bilinear(maps.beta, s.h, s.w);
  return maps;
}

template <typename T>
Tensor<T> Dblrnet<T>::refine(const Tensor<T>& x, int k) const {
  return refine(x, k, nullptr);
}

template <typename T>
Tensor<T> Dblrnet<T>::refine(const Tensor<T>& x, int k, CoefficientMaps<T>* maps_out) const {
  if (cfg_.refine == RefineMode::kDirect) return direct(x);
  const Tensor<T> h = smooth(x);
  CoefficientMaps<T> maps = coefficients(x, k);
  diff::FlopScope scope("refine");
  Tensor<T> y = diff::clamp01(diff::add(diff::mul(maps.alpha, h), maps.beta));
  if (maps_out != nullptr) *maps_out = std::move(maps);
  return y;
}

template <typename T>
Tensor<T> Dblrnet<T>::direct(const Tensor<T>& x) const {
  diff::FlopScope scope("coeff");
  return diff::clamp01(diff::pixel_shuffle(direct_(features(x)), 2));
}

template struct DenseBlock<float>;
template struct DenseBlock<double>;
template class Dblrnet<float>;
template class Dblrnet<double>;

ImageBuffer smooth_branch(const Dblrnet<float>& model, const ImageBuffer& img) {
  diff::NoGradGuard no_grad;
  return from_tensor(model.smooth(to_tensor(img)));
}

std::pair<ImageBuffer, ImageBuffer> coeff_branch(const Dblrnet<float>& model, const ImageBuffer& img, int k) {
  diff::NoGradGuard no_grad;
  const auto maps = model.coefficients(to_tensor(img), k);
  return {from_tensor(maps.alpha), from_tensor(maps.beta)};
}

ImageBuffer enhance_local(const Dblrnet<float>& model, const ImageBuffer& img, int k) {
  diff::NoGradGuard no_grad;
  const auto x = to_tensor(img);
  const auto h = model.smooth(x);
  const auto maps = model.coefficients(x, k);
  return from_tensor(diff::clamp01(diff::add(diff::mul(maps.alpha, h), maps.beta)));
}

ImageBuffer direct_predict(const Dblrnet<float>& model, const ImageBuffer& img) {
  diff::NoGradGuard no_grad;
  return from_tensor(model.direct(to_tensor(img)));
}

}  // namespace glpge
