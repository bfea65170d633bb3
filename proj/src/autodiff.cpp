#include "gtan/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtan/error.hpp"
#include "gtan/kernels.hpp"

namespace gtan::ad {

namespace {

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    fail(ErrorKind::Contract, "operands recorded on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) fail(ErrorKind::Contract, "operation on an unrecorded variable");
  return *a.tape();
}

Tape& tape_of(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::Dimension, "operation on an empty list of tensors");
  Tape& tape = tape_of(parts.front());
  for (const Var& p : parts) {
    if (p.tape() != &tape) fail(ErrorKind::Contract, "operands recorded on different tapes");
  }
  return tape;
}

void add_into(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Tensor& Var::value() const {
  if (tape_ == nullptr) fail(ErrorKind::Contract, "value() of an unrecorded variable");
  return tape_->value(id_);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  return push(std::move(node));
}

Var Tape::constant_ref(const Tensor& value) {
  Node node;
  node.external = &value;
  return push(std::move(node));
}

Var Tape::parameter(const Tensor& value, std::size_t slot) {
  Node node;
  node.external = &value;
  node.requires_grad = true;
  node.slot = static_cast<std::ptrdiff_t>(slot);
  return push(std::move(node));
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) fail(ErrorKind::Contract, "input recorded on a different tape");
    if (nodes_[in.id()].requires_grad) node.requires_grad = true;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return push(std::move(node));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.external != nullptr ? *node.external : node.owned;
}

Tensor& Tape::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (!node.has_grad) {
    const Tensor& v = value(id);
    node.grad = Tensor(v.rows(), v.cols());
    node.has_grad = true;
  }
  return node.grad;
}

std::vector<Tensor> Tape::backward(Var loss, std::span<const Tensor* const> slots) {
  if (loss.tape() != this) fail(ErrorKind::Contract, "loss recorded on a different tape");
  const Tensor& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    fail(ErrorKind::Contract, "backward needs a 1x1 loss, got " + lv.shape_string());
  }
  if (backward_done_) fail(ErrorKind::Contract, "backward called twice on one tape");
  backward_done_ = true;

  std::vector<Tensor> grads;
  grads.reserve(slots.size());
  for (const Tensor* s : slots) grads.emplace_back(s->rows(), s->cols());

  if (!nodes_[loss.id()].requires_grad) return grads;
  grad(loss.id())[0] = 1.0;
  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& node = nodes_[k];
    if (!node.has_grad || !node.requires_grad) continue;
    if (node.backward) {
      node.backward(*this, k);
    } else if (node.slot >= 0) {
      const auto slot = static_cast<std::size_t>(node.slot);
      if (slot >= grads.size()) {
        fail(ErrorKind::Index, "parameter slot " + std::to_string(slot) + " out of range");
      }
      if (!grads[slot].same_shape(node.grad)) {
        fail(ErrorKind::Dimension, "slot " + std::to_string(slot) + " declared " +
                                       grads[slot].shape_string() + " but recorded " +
                                       node.grad.shape_string());
      }
      add_into(grads[slot], node.grad);
    }
  }
  return grads;
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    fail(ErrorKind::Dimension,
         "matmul: cannot multiply " + av.shape_string() + " by " + bv.shape_string());
  }
  Tensor out(av.rows(), bv.cols());
  kernels::matmul(av, bv, out, false);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) kernels::matmul_nt(g, t.value(ib), t.grad(ia), true);
    if (t.requires_grad(ib)) kernels::matmul_tn(t.value(ia), g, t.grad(ib), true);
  });
}

Var linear(Var x, Var w) {
  Tape& tape = same_tape(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.cols() != wv.cols()) {
    fail(ErrorKind::Dimension,
         "linear: input " + xv.shape_string() + " does not match weight " + wv.shape_string());
  }
  Tensor out(xv.rows(), wv.rows());
  kernels::matmul_nt(xv, wv, out, false);
  const std::size_t ix = x.id(), iw = w.id();
  return tape.record(std::move(out), {x, w}, [ix, iw](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) kernels::matmul(g, t.value(iw), t.grad(ix), true);
    if (t.requires_grad(iw)) kernels::matmul_tn(g, t.value(ix), t.grad(iw), true);
  });
}

Var linear(Var x, Var w, Var bias) {
  Tape& tape = same_tape(x, w);
  same_tape(x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = bias.value();
  if (xv.cols() != wv.cols()) {
    fail(ErrorKind::Dimension,
         "linear: input " + xv.shape_string() + " does not match weight " + wv.shape_string());
  }
  if (bv.rows() != 1 || bv.cols() != wv.rows()) {
    fail(ErrorKind::Dimension,
         "linear: bias " + bv.shape_string() + " does not match weight " + wv.shape_string());
  }
  Tensor out(xv.rows(), wv.rows());
  kernels::matmul_nt(xv, wv, out, false);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  const std::size_t ix = x.id(), iw = w.id(), ib = bias.id();
  return tape.record(std::move(out), {x, w, bias}, [ix, iw, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ix)) kernels::matmul(g, t.value(iw), t.grad(ix), true);
    if (t.requires_grad(iw)) kernels::matmul_tn(g, t.value(ix), t.grad(iw), true);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
      }
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat(std::span<const Var> parts) {
  Tape& tape = tape_of(parts);
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      fail(ErrorKind::Dimension, "concat: row count mismatch " + parts.front().value().shape_string() +
                                     " vs " + p.value().shape_string());
    }
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    }
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += v.cols();
  }
  return tape.record(std::move(out), parts,
                     [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (!t.requires_grad(ids[k])) continue;
                         Tensor& gp = t.grad(ids[k]);
                         for (std::size_t r = 0; r < gp.rows(); ++r) {
                           auto src = g.row(r).subspan(offsets[k], gp.cols());
                           auto dst = gp.row(r);
                           for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                         }
                       }
                     });
}

Var stack_rows(std::initializer_list<Var> parts) {
  return stack_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var stack_rows(std::span<const Var> parts) {
  Tape& tape = tape_of(parts);
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) {
      fail(ErrorKind::Dimension, "stack_rows: column count mismatch " +
                                     parts.front().value().shape_string() + " vs " +
                                     p.value().shape_string());
    }
    rows += p.rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    values.insert(values.end(), v.values().begin(), v.values().end());
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += v.size();
  }
  return tape.record(Tensor(rows, cols, std::move(values)), parts,
                     [ids = std::move(ids), offsets = std::move(offsets)](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (!t.requires_grad(ids[k])) continue;
                         Tensor& gp = t.grad(ids[k]);
                         const double* src = g.data() + offsets[k];
                         double* dst = gp.data();
                         for (std::size_t i = 0; i < gp.size(); ++i) dst[i] += src[i];
                       }
                     });
}

Var slice_rows(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (begin > end || end > xv.rows()) {
    fail(ErrorKind::Index, "slice_rows: range [" + std::to_string(begin) + ", " +
                               std::to_string(end) + ") outside " + xv.shape_string());
  }
  const std::size_t cols = xv.cols();
  std::vector<double> values(xv.values().begin() + begin * cols, xv.values().begin() + end * cols);
  const std::size_t ix = x.id();
  return tape.record(Tensor(end - begin, cols, std::move(values)), {x},
                     [ix, begin](Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       Tensor& gx = t.grad(ix);
                       double* dst = gx.data() + begin * gx.cols();
                       for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                     });
}

Var slice_cols(Var x, std::size_t begin, std::size_t end) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (begin > end || end > xv.cols()) {
    fail(ErrorKind::Index, "slice_cols: range [" + std::to_string(begin) + ", " +
                               std::to_string(end) + ") outside " + xv.shape_string());
  }
  Tensor out(xv.rows(), end - begin);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto src = xv.row(r);
    std::copy(src.begin() + begin, src.begin() + end, out.row(r).begin());
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix, begin](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto src = g.row(r);
      auto dst = gx.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[begin + c] += src[c];
    }
  });
}

Var elementwise(Var a, Var b, ElementwiseKind kind) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) {
    fail(ErrorKind::Dimension,
         "elementwise: shape mismatch " + av.shape_string() + " vs " + bv.shape_string());
  }
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (kind) {
      case ElementwiseKind::Mul: out[i] = av[i] * bv[i]; break;
      case ElementwiseKind::Add: out[i] = av[i] + bv[i]; break;
      case ElementwiseKind::Sub: out[i] = av[i] - bv[i]; break;
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {a, b}, [ia, ib, kind](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      if (kind == ElementwiseKind::Mul) {
        const Tensor& bv = t.value(ib);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
      } else {
        add_into(ga, g);
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      if (kind == ElementwiseKind::Mul) {
        const Tensor& av = t.value(ia);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
      } else if (kind == ElementwiseKind::Add) {
        add_into(gb, g);
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
    }
  });
}

Var scale(Var x, double factor) {
  Tape& tape = tape_of(x);
  Tensor out = x.value();
  for (double& v : out.values()) v *= factor;
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
  });
}

Var add_scalar(Var x, double offset) {
  Tape& tape = tape_of(x);
  Tensor out = x.value();
  for (double& v : out.values()) v += offset;
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    add_into(t.grad(ix), t.grad(self));
  });
}

Var activation(Var x, ActivationKind kind) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (!xv.all_finite()) fail(ErrorKind::NonFinite, "activation input is not finite");
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    switch (kind) {
      case ActivationKind::Relu: out[i] = xv[i] > 0.0 ? xv[i] : 0.0; break;
      case ActivationKind::Sigmoid: out[i] = stable_sigmoid(xv[i]); break;
      case ActivationKind::Tanh: out[i] = std::tanh(xv[i]); break;
    }
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix, kind](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) {
      switch (kind) {
        case ActivationKind::Relu: gx[i] += y[i] > 0.0 ? g[i] : 0.0; break;
        case ActivationKind::Sigmoid: gx[i] += g[i] * y[i] * (1.0 - y[i]); break;
        case ActivationKind::Tanh: gx[i] += g[i] * (1.0 - y[i] * y[i]); break;
      }
    }
  });
}

Var softmax(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.rows() != 1 || xv.cols() == 0) {
    fail(ErrorKind::Dimension, "softmax expects a nonempty 1 x n row, got " + xv.shape_string());
  }
  const double peak = *std::max_element(xv.values().begin(), xv.values().end());
  Tensor out(1, xv.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(xv[i] - peak);
    total += out[i];
  }
  for (double& v : out.values()) v /= total;
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    Tensor& gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - dot);
  });
}

Var reduce(Var x, ReduceKind kind) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.empty()) fail(ErrorKind::Dimension, "reduce over empty tensor " + xv.shape_string());
  const std::size_t ix = x.id();
  if (kind == ReduceKind::Sum) {
    double total = 0.0;
    for (double v : xv.values()) total += v;
    return tape.record(Tensor::scalar(total), {x}, [ix](Tape& t, std::size_t self) {
      const double g = t.grad(self)[0];
      for (double& v : t.grad(ix).values()) v += g;
    });
  }
  Tensor out(1, xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    auto row = xv.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c];
  }
  const double inv = 1.0 / static_cast<double>(xv.rows());
  for (double& v : out.values()) v *= inv;
  return tape.record(std::move(out), {x}, [ix, inv](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      auto row = gx.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += g[c] * inv;
    }
  });
}

Var lookup(Var table, std::span<const std::size_t> indices) {
  Tape& tape = tape_of(table);
  const Tensor& tv = table.value();
  const std::size_t cols = tv.cols();
  std::vector<double> values;
  values.reserve(indices.size() * cols);
  for (std::size_t idx : indices) {
    if (idx >= tv.rows()) {
      fail(ErrorKind::Index, "lookup: index " + std::to_string(idx) + " out of range for table " +
                                 tv.shape_string());
    }
    values.insert(values.end(), tv.row(idx).begin(), tv.row(idx).end());
  }
  const std::size_t it = table.id();
  return tape.record(Tensor(indices.size(), cols, std::move(values)), {table},
                     [it, idx = std::vector<std::size_t>(indices.begin(), indices.end())](
                         Tape& t, std::size_t self) {
                       const Tensor& g = t.grad(self);
                       Tensor& gt = t.grad(it);
                       for (std::size_t k = 0; k < idx.size(); ++k) {
                         auto src = g.row(k);
                         auto dst = gt.row(idx[k]);
                         for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += src[c];
                       }
                     });
}

Var transpose(Var x) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  Tensor out(xv.cols(), xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out(c, r) = xv(r, c);
  }
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < gx.rows(); ++r) {
      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += g(c, r);
    }
  });
}

Var repeat_rows(Var x, std::size_t n) {
  Tape& tape = tape_of(x);
  const Tensor& xv = x.value();
  if (xv.rows() != 1) {
    fail(ErrorKind::Dimension, "repeat_rows expects a 1 x c row, got " + xv.shape_string());
  }
  Tensor out(n, xv.cols());
  for (std::size_t r = 0; r < n; ++r) std::copy(xv.values().begin(), xv.values().end(), out.row(r).begin());
  const std::size_t ix = x.id();
  return tape.record(std::move(out), {x}, [ix](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ix);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      auto row = g.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) gx[c] += row[c];
    }
  });
}

}  // namespace gtan::ad
