#include "gtan/kernels.hpp"

#include <cstddef>
#include <vector>

#include "gtan/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gtan::kernels {

namespace {

void check(bool ok, const char* op, const Tensor& a, const Tensor& b, const Tensor& out) {
  if (!ok) {
    fail(ErrorKind::Dimension, std::string(op) + ": incompatible shapes " + a.shape_string() +
                                   ", " + b.shape_string() + " -> " + out.shape_string());
  }
}

using Index = std::ptrdiff_t;

// c[j] += a(p) * b[p][j] for p = 0..k-1, with a(p) = a[p * a_stride] and b
// rows n apart. Four p steps share one load and store of c[j]; each element
// still adds its terms in p order.
void accumulate_row(double* __restrict__ c, const double* a, std::size_t a_stride,
                    const double* __restrict__ b, std::size_t k, std::size_t n) {
  std::size_t p = 0;
  for (; p + 4 <= k; p += 4) {
    const double a0 = a[p * a_stride];
    const double a1 = a[(p + 1) * a_stride];
    const double a2 = a[(p + 2) * a_stride];
    const double a3 = a[(p + 3) * a_stride];
    const double* __restrict__ b0 = b + p * n;
    const double* __restrict__ b1 = b0 + n;
    const double* __restrict__ b2 = b1 + n;
    const double* __restrict__ b3 = b2 + n;
    for (std::size_t j = 0; j < n; ++j) {
      double v = c[j];
      v += a0 * b0[j];
      v += a1 * b1[j];
      v += a2 * b2[j];
      v += a3 * b3[j];
      c[j] = v;
    }
  }
  for (; p < k; ++p) {
    const double av = a[p * a_stride];
    const double* __restrict__ br = b + p * n;
    for (std::size_t j = 0; j < n; ++j) c[j] += av * br[j];
  }
}

}  // namespace

namespace reference {

void matmul(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.cols() == b.rows() && out.rows() == a.rows() && out.cols() == b.cols(), "matmul", a, b,
        out);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = accumulate ? out(i, j) : 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) sum += a(i, p) * b(p, j);
      out(i, j) = sum;
    }
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.cols() == b.cols() && out.rows() == a.rows() && out.cols() == b.rows(), "matmul_nt", a,
        b, out);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double sum = accumulate ? out(i, j) : 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) sum += a(i, p) * b(j, p);
      out(i, j) = sum;
    }
  }
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(), "matmul_tn", a,
        b, out);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double sum = accumulate ? out(i, j) : 0.0;
      for (std::size_t p = 0; p < a.rows(); ++p) sum += a(p, i) * b(p, j);
      out(i, j) = sum;
    }
  }
}

}  // namespace reference

void matmul(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.cols() == b.rows() && out.rows() == a.rows() && out.cols() == b.cols(), "matmul", a, b,
        out);
  const Index m = static_cast<Index>(a.rows());
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  const bool big = static_cast<double>(m) * k * n > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (Index i = 0; i < m; ++i) {
    double* c_row = C + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    }
    accumulate_row(c_row, A + i * k, 1, B, k, n);
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.cols() == b.cols() && out.rows() == a.rows() && out.cols() == b.rows(), "matmul_nt", a,
        b, out);
  const Index m = static_cast<Index>(a.rows());
  const std::size_t k = a.cols();
  const std::size_t n = b.rows();
  const double* A = a.data();
  double* C = out.data();
  if (m < 8) {
    // Too few rows to repay the transpose below.
    for (Index i = 0; i < m; ++i) {
      const double* a_row = A + i * k;
      double* c_row = C + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* b_row = b.data() + j * k;
        double sum = accumulate ? c_row[j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) sum += a_row[p] * b_row[p];
        c_row[j] = sum;
      }
    }
    return;
  }
  // Transposing b once turns the inner loop into a contiguous axpy that the
  // compiler vectorizes; each output still sums over p in order.
  std::vector<double> bt(k * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double* b_row = b.data() + j * k;
    for (std::size_t p = 0; p < k; ++p) bt[p * n + j] = b_row[p];
  }
  const double* B = bt.data();
  const bool big = static_cast<double>(m) * k * n > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (Index i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    }
    accumulate_row(c_row, a_row, 1, B, k, n);
  }
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& out, bool accumulate) {
  check(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols(), "matmul_tn", a,
        b, out);
  const std::size_t k = a.rows();
  const Index m = static_cast<Index>(a.cols());
  const std::size_t n = b.cols();
  const double* A = a.data();
  const double* B = b.data();
  double* C = out.data();
  const bool big = static_cast<double>(m) * k * n > kParallelWorkThreshold;
#pragma omp parallel for schedule(static) if (big)
  for (Index i = 0; i < m; ++i) {
    double* c_row = C + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    }
    accumulate_row(c_row, A + i, static_cast<std::size_t>(m), B, k, n);
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace gtan::kernels
