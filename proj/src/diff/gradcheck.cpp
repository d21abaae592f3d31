#include "glpge/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "glpge/rng.hpp"

namespace glpge::diff {

namespace {

struct Eval {
  double value;
  std::uint64_t kinks;
};

Eval evaluate(const std::function<Tensor<double>()>& loss) {
  NoGradGuard no_grad;
  KinkTrace trace;
  const double v = loss().item();
  return {v, trace.hash()};
}

}  // namespace

GradCheckResult grad_check(const std::function<Tensor<double>()>& loss,
                           const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options) {
  for (auto t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  std::uint64_t base_kinks = 0;
  {
    KinkTrace trace;
    loss().backward();
    base_kinks = trace.hash();
  }

  GradCheckResult result;
  Rng rng(options.seed);
  for (auto t : inputs) {
    const std::size_t n = t.numel();
    std::vector<std::size_t> picks(n);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    const auto want = static_cast<std::size_t>(std::max(options.probes_per_tensor, 1));
    if (n > want) {
      for (std::size_t i = 0; i < want; ++i) std::swap(picks[i], picks[i + rng.below(n - i)]);
      picks.resize(want);
    }
    const std::vector<double> analytic =
        t.has_grad() ? std::vector<double>(t.grad().begin(), t.grad().end())
                     : std::vector<double>(n, 0.0);
    auto data = t.mutable_data();
    for (const std::size_t i : picks) {
      const double orig = data[i];
      data[i] = orig + options.eps;
      const Eval plus = evaluate(loss);
      data[i] = orig - options.eps;
      const Eval minus = evaluate(loss);
      data[i] = orig;
      if (plus.kinks != base_kinks || minus.kinks != base_kinks) {
        ++result.skipped;
        continue;
      }
      const double numeric = (plus.value - minus.value) / (2.0 * options.eps);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      result.max_rel_error = std::max(result.max_rel_error, std::abs(a - numeric) / denom);
      ++result.probes;
    }
  }
  return result;
}

}  // namespace glpge::diff
