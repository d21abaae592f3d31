#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glpge/diff/tensor.hpp"

namespace glpge::diff {

struct AdamHyper {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double eps = 1e-8;

  friend bool operator==(const AdamHyper&, const AdamHyper&) = default;
};

/// Moments of one parameter array.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  AdamHyper hyper;
};

/// One bias-corrected Adam update in place. An empty state is sized on first
/// use; otherwise all three lengths must agree.
void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state);
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Adam over a fixed list of parameter tensors. Gradients are never cleared
/// implicitly: call zero_grad() before accumulating the next step's loss.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamHyper hyper = {});

  void zero_grad();
  /// Parameters without a gradient buffer are treated as zero-gradient.
  void step();

  [[nodiscard]] std::int64_t steps() const { return steps_; }
  [[nodiscard]] const std::vector<AdamState>& states() const { return states_; }

 private:
  std::vector<Tensor<T>> params_;
  std::vector<AdamState> states_;
  std::int64_t steps_ = 0;
};

}  // namespace glpge::diff
