#include "gtan/adam.hpp"

#include <cmath>
#include <string>

#include "gtan/error.hpp"

namespace gtan {

AdamState::AdamState(std::span<const Tensor* const> params, AdamOptions options)
    : options_(options) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor* p : params) {
    m_.emplace_back(p->rows(), p->cols());
    v_.emplace_back(p->rows(), p->cols());
  }
}

void AdamState::apply(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    fail(ErrorKind::Dimension, "adam: state tracks " + std::to_string(m_.size()) +
                                   " parameters, given " + std::to_string(params.size()) +
                                   " parameters and " + std::to_string(grads.size()) +
                                   " gradients");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->same_shape(m_[k]) || !grads[k].same_shape(m_[k])) {
      fail(ErrorKind::Dimension, "adam: parameter " + std::to_string(k) + " is " +
                                     params[k]->shape_string() + ", gradient " +
                                     grads[k].shape_string() + ", state " + m_[k].shape_string());
    }
  }
  ++step_;
  const auto [lr, b1, b2, eps] = options_;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const Tensor& g = grads[k];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

double clip_global_norm(std::span<Tensor> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads) {
    for (double v : g.values()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads) {
      for (double& v : g.values()) v *= factor;
    }
  }
  return norm;
}

}  // namespace gtan
