#include "latentflow/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "latentflow/error.hpp"
#include "latentflow/rng.hpp"

namespace latentflow {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require_same(const Tensor2& a, const Tensor2& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Tensor2 Tensor2::identity(std::size_t n) {
  Tensor2 out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor2 Tensor2::normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor2 out(rows, cols);
  for (double& v : out.data_) v = rng.normal();
  return out;
}

std::string Tensor2::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Tensor2 Tensor2::slice_rows(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) {
    throw ShapeError("row slice [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of " + shape_string());
  }
  return Tensor2(end - begin, cols_,
                 std::vector<double>(data_.begin() + begin * cols_, data_.begin() + end * cols_));
}

void Tensor2::set_rows(std::size_t begin, const Tensor2& block) {
  if (block.cols_ != cols_ || begin + block.rows_ > rows_) {
    throw ShapeError("set_rows: " + block.shape_string() + " at row " + std::to_string(begin) +
                     " into " + shape_string());
  }
  std::copy(block.data_.begin(), block.data_.end(), data_.begin() + begin * cols_);
}

bool Tensor2::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  Tensor2 out(a.rows(), b.cols());
  Eigen::Map<const RowMajor> ma(a.values().data(), a.rows(), a.cols());
  Eigen::Map<const RowMajor> mb(b.values().data(), b.rows(), b.cols());
  Eigen::Map<RowMajor> mo(out.values().data(), out.rows(), out.cols());
  mo.noalias() = ma * mb;
  return out;
}

Tensor2 operator+(const Tensor2& a, const Tensor2& b) {
  require_same(a, b, "add");
  Tensor2 out = a;
  out += b;
  return out;
}

Tensor2& operator+=(Tensor2& a, const Tensor2& b) {
  require_same(a, b, "add");
  auto dst = a.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return a;
}

Tensor2 operator-(const Tensor2& a, const Tensor2& b) {
  require_same(a, b, "sub");
  Tensor2 out = a;
  auto dst = out.values();
  auto src = b.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  return out;
}

Tensor2 operator*(double s, const Tensor2& a) {
  Tensor2 out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

Tensor2 concat_rows(const Tensor2& top, const Tensor2& bottom) {
  if (top.cols() != bottom.cols()) {
    throw ShapeError("concat_rows: " + top.shape_string() + " over " + bottom.shape_string());
  }
  Tensor2 out(top.rows() + bottom.rows(), top.cols());
  out.set_rows(0, top);
  out.set_rows(top.rows(), bottom);
  return out;
}

double max_abs_diff(const Tensor2& a, const Tensor2& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

double max_abs(const Tensor2& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double frobenius_norm(const Tensor2& a) { return norm2(a.values()); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimError("dot: length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace latentflow
