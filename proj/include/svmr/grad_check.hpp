#pragma once

#include "svmr/tensor.hpp"

#include <functional>
#include <string>

namespace svmr::nn {

/// A scalar function of a ParamSet with an analytic gradient. Inputs that
/// should be checked are simply extra blocks in the ParamSet.
struct DifferentiableFn {
  std::function<double(const ParamSet&)> value;
  std::function<ParamSet(const ParamSet&)> gradient;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  Index worst_index = -1;
  Index checked = 0;
};

/// Compares the analytic gradient to central differences at every scalar of
/// `point`. Error per scalar is |analytic - numeric| / max(1, |numeric|).
/// eps must lie in [1e-6, 1e-3].
GradCheckResult grad_check(const DifferentiableFn& fn, const ParamSet& point, double eps);

}  // namespace svmr::nn
