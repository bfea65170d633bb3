#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "gtan/autodiff.hpp"
#include "gtan/corpus.hpp"
#include "gtan/tensor.hpp"

namespace gtan::test {

inline Tensor random_tensor(std::mt19937_64& rng, std::size_t rows, std::size_t cols,
                            double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

// Builds a scalar loss from parameter leaves, one per input tensor.
using LossFn = std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double eval_loss(const LossFn& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i) vars.push_back(tape.parameter(inputs[i], i));
  return f(tape, vars).value().item();
}

inline std::vector<Tensor> analytic_grads(const LossFn& f, const std::vector<Tensor>& inputs) {
  ad::Tape tape;
  std::vector<ad::Var> vars;
  std::vector<const Tensor*> slots;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    vars.push_back(tape.parameter(inputs[i], i));
    slots.push_back(&inputs[i]);
  }
  return tape.backward(f(tape, vars), slots);
}

// Largest relative error between backward() and central differences with
// step h, relative to max(|a|, |n|, floor).
inline double max_grad_error(const LossFn& f, std::vector<Tensor> inputs, double h = 1e-5,
                             double floor = 1e-6) {
  const std::vector<Tensor> grads = analytic_grads(f, inputs);
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    for (std::size_t k = 0; k < inputs[i].size(); ++k) {
      const double saved = inputs[i][k];
      inputs[i][k] = saved + h;
      const double up = eval_loss(f, inputs);
      inputs[i][k] = saved - h;
      const double down = eval_loss(f, inputs);
      inputs[i][k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = grads[i][k];
      const double err =
          std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), floor});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Weighted sum so every output element gets a distinct upstream gradient.
inline ad::Var weighted_sum(ad::Tape& tape, ad::Var x, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(x, tape.constant(random_tensor(rng, x.rows(), x.cols()))));
}

inline corpus::Answer answer(std::string id, std::vector<std::size_t> tokens, std::string who,
                             std::int64_t votes) {
  return corpus::Answer{std::move(id), std::move(tokens), std::move(who), votes, std::nullopt};
}

}  // namespace gtan::test
