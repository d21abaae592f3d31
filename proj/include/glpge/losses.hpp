#pragma once

#include <array>
#include <string>
#include <vector>

#include "glpge/diff/layers.hpp"
#include "glpge/diff/tensor.hpp"

namespace glpge {

struct LossWeights {
  double l1 = 1.0;
  double ssim = 0.5;
  double tv = 0.01;
  double gan = 0.05;
  double reg = 0.01;

  [[nodiscard]] std::array<double, 5> values() const { return {l1, ssim, tv, gan, reg}; }
  /// Same weights with the adversarial term removed.
  [[nodiscard]] LossWeights finetune() const {
    LossWeights w = *this;
    w.gan = 0.0;
    return w;
  }
  friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

inline constexpr std::array<const char*, 5> kLossNames = {"l1", "ssim", "tv", "gan", "reg"};

template <typename T>
diff::Tensor<T> l1_loss(const diff::Tensor<T>& a, const diff::Tensor<T>& b);

/// Mean SSIM over all valid 11 x 11 windows (Gaussian, sigma 1.5), all
/// channels and samples. C1 = 0.01^2, C2 = 0.03^2 on a unit range.
template <typename T>
diff::Tensor<T> ssim_index(const diff::Tensor<T>& a, const diff::Tensor<T>& b);
template <typename T>
diff::Tensor<T> ssim_loss(const diff::Tensor<T>& a, const diff::Tensor<T>& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Normalized 1-D Gaussian taps of the SSIM window.
std::array<double, kSsimWindow> ssim_taps();

/// mean(dh^2) + mean(dw^2) over forward differences in each direction.
template <typename T>
diff::Tensor<T> tv_loss(const diff::Tensor<T>& x);

template <typename T>
diff::Tensor<T> smoothness_reg(const diff::Tensor<T>& alpha, const diff::Tensor<T>& beta);

struct DiscriminatorConfig {
  std::vector<int> widths = {16, 32, 64, 128};
  std::uint64_t seed = 3;

  friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

/// Patch discriminator: 4x4 convs with strides 2, 2, 2, 1 and a final 4x4
/// stride-1 scoring conv (70 x 70 receptive field), leaky_relu in between.
template <typename T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& cfg);

  /// N x 3 x H x W -> N x 1 x h x w score map.
  [[nodiscard]] diff::Tensor<T> operator()(const diff::Tensor<T>& x) const;

  [[nodiscard]] int receptive_field() const;
  [[nodiscard]] diff::ParamStore<T>& store() { return store_; }
  [[nodiscard]] const diff::ParamStore<T>& store() const { return store_; }

 private:
  diff::ParamStore<T> store_;
  std::vector<diff::Conv2d<T>> convs_;
};

template <typename T>
struct AdversarialLosses {
  diff::Tensor<T> d_loss;
  diff::Tensor<T> g_loss;
};

/// Least-squares objectives. d_loss sees detached copies of both inputs; g_loss
/// flows into `fake` only.
template <typename T>
AdversarialLosses<T> adversarial_losses(const Discriminator<T>& disc, const diff::Tensor<T>& real,
                                        const diff::Tensor<T>& fake);
/// Same objectives on precomputed score maps.
template <typename T>
diff::Tensor<T> lsgan_d_loss(const diff::Tensor<T>& d_real, const diff::Tensor<T>& d_fake);
template <typename T>
diff::Tensor<T> lsgan_g_loss(const diff::Tensor<T>& d_fake);

/// Unweighted parts in the order of kLossNames; undefined parts count as 0.
template <typename T>
struct LossParts {
  std::array<diff::Tensor<T>, 5> parts;
};

template <typename T>
struct CompositeLoss {
  diff::Tensor<T> total;
  std::array<double, 5> components{};  // unweighted, 0 where absent
};

/// Exact weighted sum. Terms with weight 0 are left out of the graph.
template <typename T>
CompositeLoss<T> composite_loss(const LossWeights& w, const LossParts<T>& parts);

/// Scalar arithmetic version used for logging and probes.
double composite_value(const LossWeights& w, const std::array<double, 5>& parts);

}  // namespace glpge
