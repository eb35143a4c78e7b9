#include "contactdyn/num/optimizer.hpp"

#include <cmath>

#include "contactdyn/error.hpp"

namespace contactdyn::num {

Adam::Adam(const ParameterSet& params, AdamConfig config) : config_(config) {
  if (!(config.learning_rate > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_.emplace_back(params.value(i).shape());
    v_.emplace_back(params.value(i).shape());
  }
}

void Adam::set_learning_rate(double lr) {
  if (!(lr > 0.0)) fail(ErrorCode::kInvalidArgument, "learning rate must be positive");
  config_.learning_rate = lr;
}

void Adam::step(ParameterSet& params) {
  if (params.size() != m_.size()) fail(ErrorCode::kShape, "optimizer: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.value(i).shape() != m_[i].shape() || params.grad(i).shape() != m_[i].shape()) {
      fail(ErrorCode::kShape, "optimizer: shape mismatch for " + params.name(i));
    }
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params.trainable(i)) continue;
    Tensor& p = params.value(i);
    const Tensor& g = params.grad(i);
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * g[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * g[k] * g[k];
      p[k] -= config_.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + config_.epsilon);
    }
  }
}

}  // namespace contactdyn::num
