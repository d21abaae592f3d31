#include "glpge/filters.hpp"

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge {

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::kBrightness:
      return "brightness";
    case FilterKind::kContrast:
      return "contrast";
    case FilterKind::kSaturation:
      return "saturation";
  }
  return "?";
}

FilterKind parse_filter_kind(const std::string& name) {
  for (const FilterKind k : kFilterKinds)
    if (to_string(k) == name) return k;
  throw ConfigError("unknown filter kind '" + name + "'");
}

template <typename T>
diff::Tensor<T> apply_filter(const diff::Tensor<T>& x, FilterKind kind, const diff::Tensor<T>& p) {
  using namespace diff;
  const Shape s = x.shape();
  if (s.c != 3 && s.c != 1) throw InvalidShape("apply_filter: expected 1 or 3 channels, got " + s.str());
  if (!(p.shape() == Shape{s.n, 1, 1, 1}))
    throw InvalidShape("apply_filter: parameter shape " + p.shape().str() + " for batch " + s.str());
  const Tensor<T> gain = mul(x, add_scalar(p, T(1)));
  switch (kind) {
    case FilterKind::kBrightness:
      return clamp01(gain);
    case FilterKind::kContrast: {
      const Tensor<T> mu = global_avg_pool(s.c == 3 ? luminance(x) : x);
      return clamp01(sub(gain, mul(mu, p)));
    }
    case FilterKind::kSaturation: {
      const Tensor<T> g = s.c == 3 ? luminance(x) : x;
      return clamp01(sub(gain, mul(g, p)));
    }
  }
  throw ConfigError("apply_filter: invalid filter kind");
}

ImageBuffer apply_filter(const ImageBuffer& img, FilterKind kind, float p) {
  if (!(p > -1.0F && p < 1.0F))
    throw InvalidArgument("apply_filter: parameter " + std::to_string(p) + " outside (-1, 1)");
  diff::NoGradGuard no_grad;
  const auto pt = diff::Tensor<float>::full({1, 1, 1, 1}, p);
  return from_tensor(apply_filter(to_tensor(img), kind, pt));
}

template diff::Tensor<float> apply_filter(const diff::Tensor<float>&, FilterKind,
                                          const diff::Tensor<float>&);
template diff::Tensor<double> apply_filter(const diff::Tensor<double>&, FilterKind,
                                           const diff::Tensor<double>&);

}  // namespace glpge
