#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "shapetask/autodiff.hpp"

namespace shapetask {

// Bias-corrected Adam moments, one pair per parameter, in parameter order.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step = 0;  // t
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// Applies one bias-corrected Adam update to every parameter from its grad.
// Moments are lazily initialized to zeros on the first call. Throws
// NumericalError naming the parameter if its gradient is non-finite.
void adam_step(std::span<ad::Parameter> params, AdamState& state, double lr);

struct DecaySchedule {
  double lr0 = 0.001;
  double factor = 0.5;
  int interval = 20;  // epochs per decay step
};

// lr0 × factor^floor(epoch / interval).
double lr_schedule(int epoch, const DecaySchedule& schedule);

}  // namespace shapetask
