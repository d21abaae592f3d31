#include "glpge/diff/adam.hpp"

#include <cmath>
#include <string>

#include "glpge/errors.hpp"

namespace glpge::diff {

namespace {

template <typename T>
void step_impl(std::span<T> params, std::span<const T> grads, AdamState& s) {
  if (grads.size() != params.size())
    throw InvalidShape("adam_step: " + std::to_string(params.size()) + " parameters but " +
                       std::to_string(grads.size()) + " gradients");
  if (s.m.empty() && s.v.empty() && s.t == 0) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  if (s.m.size() != params.size() || s.v.size() != params.size())
    throw InvalidShape("adam_step: state length does not match parameter length");
  ++s.t;
  const auto& h = s.hyper;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = h.beta1 * s.m[i] + (1.0 - h.beta1) * g;
    s.v[i] = h.beta2 * s.v[i] + (1.0 - h.beta2) * g * g;
    const double mh = s.m[i] / c1;
    const double vh = s.v[i] / c2;
    params[i] = static_cast<T>(params[i] - h.lr * mh / (std::sqrt(vh) + h.eps));
  }
}

}  // namespace

void adam_step(std::span<float> params, std::span<const float> grads, AdamState& state) {
  step_impl(params, grads, state);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  step_impl(params, grads, state);
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamHyper hyper) : params_(std::move(params)) {
  states_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    states_[i].hyper = hyper;
    states_[i].m.assign(params_[i].numel(), 0.0);
    states_[i].v.assign(params_[i].numel(), 0.0);
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

template <typename T>
void Adam<T>::step() {
  std::vector<T> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    std::span<const T> g = p.grad();
    if (g.empty()) {
      zeros.assign(p.numel(), T(0));
      g = zeros;
    }
    adam_step(p.mutable_data(), g, states_[i]);
  }
  ++steps_;
}

template class Adam<float>;
template class Adam<double>;

}  // namespace glpge::diff
