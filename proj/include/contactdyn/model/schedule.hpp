#pragma once

#include <string>
#include <vector>

#include "contactdyn/num/tensor.hpp"

namespace contactdyn::model {

enum class ScheduleKind { kLinear, kCosine };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_from_string(const std::string& s);

//! DDPM variance schedule with steps t = 1..T; alpha_bar(0) = 1.
class NoiseSchedule {
 public:
  NoiseSchedule(int steps, ScheduleKind kind = ScheduleKind::kLinear, double beta_start = 1e-4,
                double beta_end = 0.02);

  int steps() const { return steps_; }
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const;
  //! beta~_t = (1 - alpha_bar_{t-1}) / (1 - alpha_bar_t) * beta_t
  double posterior_variance(int t) const;

 private:
  int steps_;
  std::vector<double> beta_;       // index t, beta_[0] unused
  std::vector<double> alpha_bar_;  // index t, alpha_bar_[0] = 1
};

//! x_t = sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps, for 0 <= t <= T.
num::Tensor forward_diffuse(const num::Tensor& x0, int t, const num::Tensor& eps, const NoiseSchedule& schedule);

//! Sinusoidal embedding of diffusion step t, `dim` even.
std::vector<double> timestep_embedding(double t, int dim);

}  // namespace contactdyn::model
