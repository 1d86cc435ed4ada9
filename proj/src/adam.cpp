#include "svmr/adam.hpp"

#include "svmr/error.hpp"

#include <cmath>

namespace svmr::nn {

Adam::Adam(const ParamSet& like, AdamConfig config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void Adam::step(ParamSet& params, const ParamSet& grads) {
  if (!same_shapes(params, grads) || !same_shapes(params, m_)) data_error("Adam::step: shape mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t b = 0; b < params.entries().size(); ++b) {
    Matrix& p = params.entries()[b].second;
    const Matrix& g = grads.entries()[b].second;
    Matrix& m = m_.entries()[b].second;
    Matrix& v = v_.entries()[b].second;
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.array() -= config_.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace svmr::nn
