#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "gtan/tensor.hpp"

// Define-by-run reverse-mode automatic differentiation.
//
// A Tape records every operation of one forward pass. Values are immutable
// once recorded. Leaves are constants or parameters; a parameter leaf carries
// a slot number and backward() returns one gradient per slot. A tape is
// single-threaded; independent tapes may share read-only parameter tensors.
namespace gtan::ad {

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using BackwardFn = std::function<void(Tape&, std::size_t self)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Records a leaf that aliases `value`; the caller keeps it alive.
  Var constant_ref(const Tensor& value);
  // Tracked leaf aliasing `value`. Several leaves may share one slot.
  Var parameter(const Tensor& value, std::size_t slot);

  // Gradients of a 1x1 loss for every slot; `slots[k]` supplies the shape of
  // slot k. Slots that do not reach the loss receive zeros.
  std::vector<Tensor> backward(Var loss, std::span<const Tensor* const> slots);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Op plumbing.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient accumulator of node `id`, zero-initialized on first use.
  Tensor& grad(std::size_t id);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::ptrdiff_t slot = -1;
    BackwardFn backward;
  };

  Var push(Node node);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

enum class ElementwiseKind { Mul, Add, Sub };
enum class ActivationKind { Relu, Sigmoid, Tanh };
enum class ReduceKind { Sum, MeanRows };

Var matmul(Var a, Var b);
// x * w^T, plus a broadcast 1 x out bias row when given.
Var linear(Var x, Var w);
Var linear(Var x, Var w, Var bias);
// Joins tensors side by side: cols add up, rows must agree.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Stacks tensors vertically: rows add up, cols must agree.
Var stack_rows(std::span<const Var> parts);
Var stack_rows(std::initializer_list<Var> parts);
Var slice_rows(Var x, std::size_t begin, std::size_t end);
Var slice_cols(Var x, std::size_t begin, std::size_t end);
Var elementwise(Var a, Var b, ElementwiseKind kind);
inline Var add(Var a, Var b) { return elementwise(a, b, ElementwiseKind::Add); }
inline Var sub(Var a, Var b) { return elementwise(a, b, ElementwiseKind::Sub); }
inline Var mul(Var a, Var b) { return elementwise(a, b, ElementwiseKind::Mul); }
Var scale(Var x, double factor);
Var add_scalar(Var x, double offset);
Var activation(Var x, ActivationKind kind);
inline Var relu(Var x) { return activation(x, ActivationKind::Relu); }
inline Var sigmoid(Var x) { return activation(x, ActivationKind::Sigmoid); }
inline Var tanh(Var x) { return activation(x, ActivationKind::Tanh); }
// Softmax of a 1 x n row, computed with max subtraction.
Var softmax(Var x);
Var reduce(Var x, ReduceKind kind);
inline Var sum(Var x) { return reduce(x, ReduceKind::Sum); }
inline Var mean_rows(Var x) { return reduce(x, ReduceKind::MeanRows); }
// Gathers rows of `table`; the gradient scatter-adds back.
Var lookup(Var table, std::span<const std::size_t> indices);
Var transpose(Var x);
// Broadcasts a 1 x c row to n x c.
Var repeat_rows(Var x, std::size_t n);

}  // namespace gtan::ad
