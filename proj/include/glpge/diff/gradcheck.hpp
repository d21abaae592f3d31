#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "glpge/diff/tensor.hpp"

namespace glpge::diff {

struct GradCheckOptions {
  double eps = 1e-3;
  /// Entries probed per tensor; tensors at most this large are probed fully.
  int probes_per_tensor = 24;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  int probes = 0;
  /// Probes whose +-eps evaluations straddled a kink.
  int skipped = 0;
};

/// Compares the analytic gradient of `loss` w.r.t. every tensor in `inputs`
/// with central differences. Error per entry is
/// |a - n| / max(|a|, |n|, 1e-8). Probes where the perturbed evaluations take
/// a different branch at some relu/clamp/abs/max-pool than the unperturbed
/// one are skipped.
GradCheckResult grad_check(const std::function<Tensor<double>()>& loss,
                           const std::vector<Tensor<double>>& inputs,
                           const GradCheckOptions& options = {});

}  // namespace glpge::diff
