#include "contactdyn/model/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "contactdyn/error.hpp"

namespace contactdyn::model {

std::string to_string(ScheduleKind k) { return k == ScheduleKind::kLinear ? "linear" : "cosine"; }

ScheduleKind schedule_from_string(const std::string& s) {
  if (s == "linear") return ScheduleKind::kLinear;
  if (s == "cosine") return ScheduleKind::kCosine;
  fail(ErrorCode::kConfig, "unknown noise schedule '" + s + "'");
}

NoiseSchedule::NoiseSchedule(int steps, ScheduleKind kind, double beta_start, double beta_end) : steps_(steps) {
  if (steps < 2) fail(ErrorCode::kConfig, "diffusion needs at least 2 steps");
  beta_.assign(static_cast<std::size_t>(steps) + 1, 0.0);
  alpha_bar_.assign(static_cast<std::size_t>(steps) + 1, 1.0);
  if (kind == ScheduleKind::kLinear) {
    if (!(beta_start > 0.0 && beta_end < 1.0 && beta_start <= beta_end)) {
      fail(ErrorCode::kConfig, "linear schedule needs 0 < beta_start <= beta_end < 1");
    }
    for (int t = 1; t <= steps; ++t) {
      beta_[t] = beta_start + (beta_end - beta_start) * (t - 1) / (steps - 1);
    }
  } else {
    constexpr double s = 0.008;
    auto f = [&](double t) {
      const double c = std::cos((t / steps + s) / (1.0 + s) * std::numbers::pi / 2.0);
      return c * c;
    };
    for (int t = 1; t <= steps; ++t) beta_[t] = std::clamp(1.0 - f(t) / f(t - 1), 1e-8, 0.999);
  }
  for (int t = 1; t <= steps; ++t) alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > steps_) fail(ErrorCode::kInvalidArgument, "diffusion step " + std::to_string(t) + " out of range");
  return beta_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps_) fail(ErrorCode::kInvalidArgument, "diffusion step " + std::to_string(t) + " out of range");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::posterior_variance(int t) const {
  return (1.0 - alpha_bar(t - 1)) / (1.0 - alpha_bar(t)) * beta(t);
}

num::Tensor forward_diffuse(const num::Tensor& x0, int t, const num::Tensor& eps, const NoiseSchedule& schedule) {
  if (x0.shape() != eps.shape()) fail(ErrorCode::kShape, "forward_diffuse: noise shape differs from x0");
  const double ab = schedule.alpha_bar(t);
  const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
  num::Tensor xt(x0.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) xt[i] = a * x0[i] + b * eps[i];
  return xt;
}

std::vector<double> timestep_embedding(double t, int dim) {
  if (dim < 2 || dim % 2) fail(ErrorCode::kConfig, "timestep embedding dimension must be even");
  const int half = dim / 2;
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * k / half);
    e[static_cast<std::size_t>(k)] = std::sin(t * freq);
    e[static_cast<std::size_t>(k + half)] = std::cos(t * freq);
  }
  return e;
}

}  // namespace contactdyn::model
