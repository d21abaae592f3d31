#include "glpge/gppnet.hpp"

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge {

using diff::Tensor;

std::string to_string(FusionStrategy s) {
  switch (s) {
    case FusionStrategy::kConcatenation:
      return "concatenation";
    case FusionStrategy::kCascading:
      return "cascading";
    case FusionStrategy::kAdditive:
      return "additive";
  }
  return "?";
}

FusionStrategy parse_fusion(const std::string& name) {
  for (auto s : {FusionStrategy::kConcatenation, FusionStrategy::kCascading, FusionStrategy::kAdditive})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown fusion strategy '" + name + "'");
}

template <typename T>
Gppnet<T>::Gppnet(const GppnetConfig& cfg) : cfg_(cfg) {
  for (const int w : cfg.widths)
    if (w < 1) throw ConfigError("gppnet: channel widths must be positive");
  if (cfg.head_hidden < 1) throw ConfigError("gppnet: head width must be positive");
  if (cfg.input_side < 1) throw ConfigError("gppnet: input side must be positive");
  Rng rng = Rng(cfg.seed).stream(0x6770);
  int cin = 3;
  for (int stage = 0; stage < 5; ++stage)
    for (int j = 0; j < 3; ++j) {
      const std::string name = "gpp.backbone." + std::to_string(stage * 3 + j);
      backbone_.push_back(diff::Conv2d<T>::make(store_, name, "backbone", cin, cfg.widths[stage], 3,
                                                j == 0 ? 2 : 1, 1, rng));
      cin = cfg.widths[stage];
    }
  for (int h = 0; h < 3; ++h) {
    const std::string name = "gpp.head." + to_string(kFilterKinds[h]);
    hidden_[h] = diff::Linear<T>::make(store_, name + ".0", "head", cin, cfg.head_hidden, rng);
    out_[h] = diff::Linear<T>::make(store_, name + ".1", "head", cfg.head_hidden, 1, rng);
  }
  fusion_ = diff::Conv2d<T>::make(store_, "gpp.fusion", "fusion", 9, 3, 1, 1, 0, rng);
  zero_heads();
  reset_fusion();
}

template <typename T>
void Gppnet<T>::zero_heads() {
  for (auto& o : out_) {
    std::fill(o.weight.mutable_data().begin(), o.weight.mutable_data().end(), T(0));
    std::fill(o.bias.mutable_data().begin(), o.bias.mutable_data().end(), T(0));
  }
}

template <typename T>
void Gppnet<T>::reset_fusion() {
  auto w = fusion_.weight.mutable_data();
  std::fill(w.begin(), w.end(), T(0));
  for (int c = 0; c < 3; ++c) {
    w[c * 9 + c] = T(1);
    w[c * 9 + 3 + c] = T(1) / T(3);
    w[c * 9 + 6 + c] = T(1) / T(3);
  }
  std::fill(fusion_.bias.mutable_data().begin(), fusion_.bias.mutable_data().end(), T(0));
}

template <typename T>
std::array<Tensor<T>, 3> Gppnet<T>::predict(const Tensor<T>& x) const {
  if (x.shape().c != 3) throw InvalidShape("gppnet: expected 3-channel input, got " + x.shape().str());
  diff::FlopScope scope("backbone");
  Tensor<T> h = diff::resize_bilinear(x, cfg_.input_side, cfg_.input_side);
  for (const auto& conv : backbone_) h = diff::leaky_relu(conv(h));
  const Tensor<T> feat = diff::global_avg_pool(h);
  std::array<Tensor<T>, 3> p;
  for (int k = 0; k < 3; ++k) p[k] = diff::tanh(out_[k](diff::leaky_relu(hidden_[k](feat))));
  return p;
}

template <typename T>
Tensor<T> Gppnet<T>::fuse(const std::array<Tensor<T>, 3>& b, FusionStrategy strategy) const {
  diff::FlopScope scope("fusion");
  for (int k = 1; k < 3; ++k)
    if (!(b[k].shape() == b[0].shape())) throw InvalidShape("fuse: branch extents differ");
  const Tensor<T> d2 = diff::sub(b[1], b[0]);
  const Tensor<T> d3 = diff::sub(b[2], b[0]);
  switch (strategy) {
    case FusionStrategy::kConcatenation:
      return diff::clamp01(fusion_(diff::concat_channels<T>({b[0], d2, d3})));
    case FusionStrategy::kAdditive:
      return diff::clamp01(diff::add(b[0], diff::scale(diff::add(d2, d3), T(1) / T(3))));
    case FusionStrategy::kCascading:
      break;
  }
  throw ConfigError("fuse: cascading has no branch fusion");
}

template <typename T>
Tensor<T> Gppnet<T>::apply(const Tensor<T>& x, const std::array<Tensor<T>, 3>& p,
                           FusionStrategy strategy) const {
  diff::FlopScope scope("fusion");
  if (strategy == FusionStrategy::kCascading) {
    Tensor<T> y = x;
    for (int k = 0; k < 3; ++k) y = apply_filter(y, kFilterKinds[k], p[k]);
    return y;
  }
  std::array<Tensor<T>, 3> branches;
  for (int k = 0; k < 3; ++k) branches[k] = apply_filter(x, kFilterKinds[k], p[k]);
  return fuse(branches, strategy);
}

template class Gppnet<float>;
template class Gppnet<double>;

namespace {

std::array<Tensor<float>, 3> param_tensors(const ParamSet& p) {
  const auto v = p.values();
  return {Tensor<float>::full({1, 1, 1, 1}, v[0]), Tensor<float>::full({1, 1, 1, 1}, v[1]),
          Tensor<float>::full({1, 1, 1, 1}, v[2])};
}

}  // namespace

ParamSet predict_params(const Gppnet<float>& model, const ImageBuffer& img) {
  diff::NoGradGuard no_grad;
  const auto p = model.predict(to_tensor(to_rgb(img)));
  return {p[0].item(), p[1].item(), p[2].item()};
}

ImageBuffer fuse(const Gppnet<float>& model, const std::array<ImageBuffer, 3>& branches,
                 FusionStrategy strategy, const ImageBuffer& source, const ParamSet& params) {
  diff::NoGradGuard no_grad;
  if (strategy == FusionStrategy::kCascading)
    return from_tensor(model.apply(to_tensor(source), param_tensors(params), strategy));
  return from_tensor(model.fuse({to_tensor(branches[0]), to_tensor(branches[1]), to_tensor(branches[2])},
                                strategy));
}

ImageBuffer enhance_global(const Gppnet<float>& model, const ImageBuffer& img, FusionStrategy strategy) {
  diff::NoGradGuard no_grad;
  const auto x = to_tensor(to_rgb(img));
  return from_tensor(model.enhance(x, strategy));
}

ImageBuffer enhance_global(const Gppnet<float>& model, const ImageBuffer& img, FusionStrategy strategy,
                           const ParamSet& forced) {
  diff::NoGradGuard no_grad;
  return from_tensor(model.apply(to_tensor(to_rgb(img)), param_tensors(forced), strategy));
}

}  // namespace glpge
