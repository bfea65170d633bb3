#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gtan/tensor.hpp"

namespace gtan {

struct AdamOptions {
  double learning_rate = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment accumulators for a fixed list of parameters.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::span<const Tensor* const> params, AdamOptions options);

  const AdamOptions& options() const noexcept { return options_; }
  std::int64_t step() const noexcept { return step_; }
  const std::vector<Tensor>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor>& second_moment() const noexcept { return v_; }

  // Bias-corrected Adam update of `params` in place.
  void apply(std::span<Tensor* const> params, std::span<const Tensor> grads);

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

inline void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads,
                      AdamState& state) {
  state.apply(params, grads);
}

// Rescales `grads` so their joint L2 norm is at most `max_norm`; returns the
// norm before clipping.
double clip_global_norm(std::span<Tensor> grads, double max_norm);

}  // namespace gtan
