#pragma once

#include <cstdint>
#include <vector>

#include "contactdyn/num/params.hpp"

namespace contactdyn::num {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

//! Adaptive-moment optimizer over the trainable entries of a ParameterSet.
class Adam {
 public:
  Adam(const ParameterSet& params, AdamConfig config);

  //! Applies one update from `params.grad(i)`; gradients are left untouched.
  void step(ParameterSet& params);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr);
  const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
  const Tensor& second_moment(std::size_t i) const { return v_.at(i); }

 private:
  AdamConfig config_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t steps_ = 0;
};

}  // namespace contactdyn::num
