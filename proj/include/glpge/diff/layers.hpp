#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glpge/diff/ops.hpp"
#include "glpge/diff/tensor.hpp"
#include "glpge/rng.hpp"

namespace glpge::diff {

/// Static description of one learnable layer, used for counting and audits.
struct LayerInfo {
  std::string name;
  std::string kind;  // "conv" or "linear"
  std::string group;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;

  [[nodiscard]] std::int64_t param_count() const {
    return static_cast<std::int64_t>(kernel) * kernel * in_channels * out_channels + out_channels;
  }
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;
};

/// Ordered owner of named parameters plus the layer registry of a model.
template <typename T>
class ParamStore {
 public:
  Tensor<T> add(const std::string& name, Shape shape);

  [[nodiscard]] const std::vector<NamedParam<T>>& params() const { return params_; }
  [[nodiscard]] std::vector<NamedParam<T>>& params() { return params_; }
  [[nodiscard]] const std::vector<LayerInfo>& layers() const { return layers_; }
  void register_layer(LayerInfo info) { layers_.push_back(std::move(info)); }

  [[nodiscard]] Tensor<T> find(const std::string& name) const;
  [[nodiscard]] std::int64_t count() const;
  [[nodiscard]] std::vector<Tensor<T>> tensors() const;

  void set_requires_grad(bool flag);
  void zero_grad();

  /// FNV-1a over the raw bytes of every parameter, in registration order.
  [[nodiscard]] std::uint64_t hash() const;

  /// Copies values by name from another store (shapes must agree).
  template <typename U>
  void copy_from(const ParamStore<U>& other);

 private:
  std::vector<NamedParam<T>> params_;
  std::vector<LayerInfo> layers_;
};

/// Uniform in +-sqrt(6 / fan_in).
template <typename T>
void fan_in_uniform(Tensor<T>& t, int fan_in, Rng& rng);

template <typename T>
struct Conv2d {
  Tensor<T> weight;
  Tensor<T> bias;
  int stride = 1;
  int pad = 0;

  static Conv2d make(ParamStore<T>& store, const std::string& name, const std::string& group,
                     int cin, int cout, int kernel, int stride, int pad, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, stride, pad); }
};

template <typename T>
struct Linear {
  Tensor<T> weight;
  Tensor<T> bias;

  static Linear make(ParamStore<T>& store, const std::string& name, const std::string& group,
                     int in, int out, Rng& rng);

  Tensor<T> operator()(const Tensor<T>& x) const { return linear(x, weight, bias); }
};

template <typename T>
template <typename U>
void ParamStore<T>::copy_from(const ParamStore<U>& other) {
  for (auto& p : params_) {
    const Tensor<U> src = other.find(p.name);
    if (!(src.shape() == p.tensor.shape()))
      throw InvalidShape("parameter " + p.name + ": shape " + src.shape().str() +
                         " does not match " + p.tensor.shape().str());
    auto dst = p.tensor.mutable_data();
    const auto s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<T>(s[i]);
  }
}

}  // namespace glpge::diff
