#include "shapetask/optimizer.hpp"

#include <cmath>

namespace shapetask {

void adam_step(std::span<ad::Parameter> params, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw InvalidArgumentError("adam_step: lr must be positive");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.emplace_back(p.value.shape());
      state.second_moment.emplace_back(p.value.shape());
    }
  }
  if (state.first_moment.size() != params.size())
    throw InvalidArgumentError("adam_step: state does not match parameter list");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (size_t i = 0; i < params.size(); ++i) {
    ad::Parameter& p = params[i];
    if (!p.grad.same_shape(p.value))
      throw InvalidShapeError("adam_step: grad shape mismatch for '" + p.name + "'");
    if (!p.grad.all_finite())
      throw NumericalError("adam_step: non-finite gradient for parameter '" + p.name + "'");
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::int64_t j = 0; j < p.value.numel(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p.value[j] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double lr_schedule(int epoch, const DecaySchedule& schedule) {
  if (epoch < 0) throw InvalidArgumentError("lr_schedule: epoch must be nonnegative");
  return schedule.lr0 * std::pow(schedule.factor, static_cast<double>(epoch / schedule.interval));
}

}  // namespace shapetask
