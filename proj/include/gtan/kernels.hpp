#pragma once

#include "gtan/tensor.hpp"

// Dense matrix kernels used by the autodiff ops.
//
// `reference` holds straightforward serial loops kept as the ground truth for
// tests and benchmarks. The unqualified kernels are the production versions:
// cache-friendly loop orders with OpenMP row parallelism once the work is
// large enough to amortize a parallel region. Both write every output element
// with the same summation order per element, so results do not depend on the
// thread count.
namespace gtan::kernels {

namespace reference {
// out (+)= a * b
void matmul(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
// out (+)= a * b^T
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
// out (+)= a^T * b
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
}  // namespace reference

void matmul(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate);

// Multiply-add count above which the parallel kernels open an OpenMP region.
inline constexpr double kParallelWorkThreshold = 1 << 18;

// Number of threads OpenMP would use (1 when built without OpenMP).
int max_threads();

}  // namespace gtan::kernels
