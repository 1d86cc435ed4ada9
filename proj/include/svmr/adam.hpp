#pragma once

#include "svmr/tensor.hpp"

namespace svmr::nn {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(const ParamSet& like, AdamConfig config);
  void step(ParamSet& params, const ParamSet& grads);
  long steps() const { return t_; }

 private:
  AdamConfig config_;
  ParamSet m_, v_;
  long t_ = 0;
};

}  // namespace svmr::nn
