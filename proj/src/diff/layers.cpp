#include "glpge/diff/layers.hpp"

#include <cmath>
#include <cstring>

#include "glpge/errors.hpp"

namespace glpge::diff {

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, Shape shape) {
  for (const auto& p : params_)
    if (p.name == name) throw ConfigError("duplicate parameter name " + name);
  auto t = Tensor<T>::zeros(shape, true);
  params_.push_back({name, t});
  return t;
}

template <typename T>
Tensor<T> ParamStore<T>::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p.tensor;
  throw ConfigError("unknown parameter " + name);
}

template <typename T>
std::int64_t ParamStore<T>::count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += static_cast<std::int64_t>(p.tensor.numel());
  return n;
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::tensors() const {
  std::vector<Tensor<T>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.tensor);
  return out;
}

template <typename T>
void ParamStore<T>::set_requires_grad(bool flag) {
  for (auto& p : params_) p.tensor.set_requires_grad(flag);
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

template <typename T>
std::uint64_t ParamStore<T>::hash() const {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& p : params_) {
    const auto d = p.tensor.data();
    const auto* bytes = reinterpret_cast<const unsigned char*>(d.data());
    for (std::size_t i = 0; i < d.size_bytes(); ++i) {
      h ^= bytes[i];
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

template <typename T>
void fan_in_uniform(Tensor<T>& t, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / std::max(fan_in, 1));
  for (T& v : t.mutable_data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

template <typename T>
Conv2d<T> Conv2d<T>::make(ParamStore<T>& store, const std::string& name, const std::string& group,
                          int cin, int cout, int kernel, int stride, int pad, Rng& rng) {
  if (cin < 1 || cout < 1 || kernel < 1)
    throw ConfigError("layer " + name + ": channel widths and kernel must be positive");
  Conv2d c;
  c.weight = store.add(name + ".weight", {cout, cin, kernel, kernel});
  c.bias = store.add(name + ".bias", {1, cout, 1, 1});
  c.stride = stride;
  c.pad = pad;
  fan_in_uniform(c.weight, cin * kernel * kernel, rng);
  store.register_layer({name, "conv", group, cin, cout, kernel, stride, pad});
  return c;
}

template <typename T>
Linear<T> Linear<T>::make(ParamStore<T>& store, const std::string& name, const std::string& group,
                          int in, int out, Rng& rng) {
  if (in < 1 || out < 1) throw ConfigError("layer " + name + ": widths must be positive");
  Linear l;
  l.weight = store.add(name + ".weight", {out, in, 1, 1});
  l.bias = store.add(name + ".bias", {1, out, 1, 1});
  fan_in_uniform(l.weight, in, rng);
  store.register_layer({name, "linear", group, in, out, 1, 1, 0});
  return l;
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct Linear<float>;
template struct Linear<double>;
template void fan_in_uniform(Tensor<float>&, int, Rng&);
template void fan_in_uniform(Tensor<double>&, int, Rng&);

}  // namespace glpge::diff
