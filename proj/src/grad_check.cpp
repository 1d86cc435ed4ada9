#include "svmr/grad_check.hpp"

#include "svmr/error.hpp"

#include <cmath>

namespace svmr::nn {

GradCheckResult grad_check(const DifferentiableFn& fn, const ParamSet& point, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-3)) config_error("grad_check: eps must lie in [1e-6, 1e-3]");
  if (!point.all_finite()) numeric_error("grad_check: non-finite input");
  const ParamSet analytic = fn.gradient(point);
  if (!same_shapes(analytic, point)) data_error("grad_check: gradient shape differs from input");
  if (!analytic.all_finite()) numeric_error("grad_check: non-finite analytic gradient");

  GradCheckResult result;
  ParamSet probe = point;
  for (std::size_t b = 0; b < probe.entries().size(); ++b) {
    Matrix& block = probe.entries()[b].second;
    const Matrix& grad = analytic.entries()[b].second;
    for (Index i = 0; i < block.size(); ++i) {
      const double saved = block.data()[i];
      block.data()[i] = saved + eps;
      const double up = fn.value(probe);
      block.data()[i] = saved - eps;
      const double down = fn.value(probe);
      block.data()[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) numeric_error("grad_check: non-finite function value");
      const double numeric = (up - down) / (2.0 * eps);
      const double err = std::abs(grad.data()[i] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.checked;
      if (err > result.max_rel_error || result.worst_index < 0) {
        result.max_rel_error = err;
        result.worst_block = probe.entries()[b].first;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace svmr::nn
