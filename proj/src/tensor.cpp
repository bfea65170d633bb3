#include "gtan/tensor.hpp"

#include <cmath>
#include <sstream>

#include "gtan/error.hpp"

namespace gtan {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension_error";
    case ErrorKind::Index: return "index_error";
    case ErrorKind::Contract: return "contract_error";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Parse: return "parse_error";
    case ErrorKind::EmptyCorpus: return "empty_corpus";
    case ErrorKind::Corpus: return "corpus_error";
    case ErrorKind::Checkpoint: return "checkpoint_error";
    case ErrorKind::Config: return "config_error";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::UnsupportedData: return "unsupported_data";
    case ErrorKind::Io: return "io_error";
  }
  return "error";
}

std::string shape_string(std::size_t rows, std::size_t cols) {
  std::ostringstream out;
  out << rows << "x" << cols;
  return out.str();
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    fail(ErrorKind::Dimension, "tensor of shape " + gtan::shape_string(rows, cols) + " given " +
                                   std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) fail(ErrorKind::Dimension, "ragged rows in tensor literal");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(values));
}

Tensor Tensor::row_vector(std::span<const double> values) {
  return Tensor(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

double Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    fail(ErrorKind::Contract, "item() on tensor of shape " + shape_string());
  }
  return values_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) {
  for (double& v : values_) v = value;
}

std::string Tensor::shape_string() const { return gtan::shape_string(rows_, cols_); }

}  // namespace gtan
