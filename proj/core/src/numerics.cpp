#include "drivesig/numerics.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "drivesig/errors.hpp"
#include "drivesig/rng.hpp"

namespace drivesig {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_eigen(const Matrix& m) {
  return ConstMap(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

MutMap as_eigen(Matrix& m) {
  return MutMap(m.values().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("Matrix: " + std::to_string(data_.size()) +
                     " values for shape " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite value in " +
                       m.shape_string() + " result");
  }
}

void gemm(const Matrix& a, bool transpose_a, const Matrix& b, bool transpose_b,
          Matrix& out, bool accumulate) {
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw ShapeError("gemm: inner dimensions differ: " + a.shape_string() +
                     (transpose_a ? "^T" : "") + " * " + b.shape_string() +
                     (transpose_b ? "^T" : ""));
  }
  if (out.rows() != m || out.cols() != n) {
    if (accumulate) {
      throw ShapeError("gemm: accumulator " + out.shape_string() +
                       " does not match product shape");
    }
    out = Matrix(m, n);
  }
  auto ea = as_eigen(a);
  auto eb = as_eigen(b);
  auto eo = as_eigen(out);
  if (!accumulate) eo.setZero();
  if (transpose_a && transpose_b) {
    eo.noalias() += ea.transpose() * eb.transpose();
  } else if (transpose_a) {
    eo.noalias() += ea.transpose() * eb;
  } else if (transpose_b) {
    eo.noalias() += ea * eb.transpose();
  } else {
    eo.noalias() += ea * eb;
  }
  require_finite(out, "gemm");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " +
                     b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  gemm(a, false, b, false, out);
  return out;
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix elementwise(ElementwiseKind kind, const Matrix& a) {
  Matrix out = a;
  switch (kind) {
    case ElementwiseKind::kSigmoid:
      for (double& v : out.values()) v = sigmoid(v);
      break;
    case ElementwiseKind::kTanh:
      for (double& v : out.values()) v = std::tanh(v);
      break;
    default:
      throw ShapeError("elementwise: binary kind called with one operand");
  }
  require_finite(out, "elementwise");
  return out;
}

Matrix elementwise(ElementwiseKind kind, const Matrix& a, const Matrix& b) {
  if (kind == ElementwiseKind::kSigmoid || kind == ElementwiseKind::kTanh) {
    throw ShapeError("elementwise: unary kind called with two operands");
  }
  require_same_shape(a, b, "elementwise");
  Matrix out = a;
  auto ov = out.values();
  auto bv = b.values();
  if (kind == ElementwiseKind::kAdd) {
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  } else {
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  }
  require_finite(out, "elementwise");
  return out;
}

Matrix sigmoid(const Matrix& a) { return elementwise(ElementwiseKind::kSigmoid, a); }
Matrix tanh(const Matrix& a) { return elementwise(ElementwiseKind::kTanh, a); }
Matrix add(const Matrix& a, const Matrix& b) {
  return elementwise(ElementwiseKind::kAdd, a, b);
}
Matrix hadamard(const Matrix& a, const Matrix& b) {
  return elementwise(ElementwiseKind::kHadamard, a, b);
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Matrix glorot_init(std::size_t rows, std::size_t cols, SeededRng& rng) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("glorot_init: zero dimension " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return m;
}

double max_abs(const Matrix& m) noexcept {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::abs(v));
  return best;
}

double squared_norm(const Matrix& m) noexcept {
  double s = 0.0;
  for (double v : m.values()) s += v * v;
  return s;
}

}  // namespace drivesig
