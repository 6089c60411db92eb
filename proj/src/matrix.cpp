#include "pnpgl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnpgl/error.hpp"

namespace pnpgl {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::frobenius_norm() const { return norm2(data_); }

double Matrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (!m.is_square()) return false;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double a = m(i, j);
      const double b = m(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) return false;
      if (std::abs(a - b) > rel_tol * std::max(1.0, std::abs(a))) return false;
    }
  }
  return true;
}

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (!m_.is_square())
    throw InvalidArgument("SymMatrix: matrix is " + std::to_string(m_.rows()) + "x" +
                          std::to_string(m_.cols()) + ", expected square");
  if (!is_symmetric(m_)) throw InvalidArgument("SymMatrix: matrix is not symmetric");
}

SymMatrix SymMatrix::from_upper(Matrix m) {
  if (!m.is_square()) throw InvalidArgument("SymMatrix::from_upper: matrix is not square");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return SymMatrix(std::move(m));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

namespace {
void require_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw InvalidArgument(std::string(op) + ": size mismatch (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
}
}  // namespace

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "add");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "subtract");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vector scaled(std::span<const double> a, double s) {
  Vector r(a.begin(), a.end());
  for (double& v : r) v *= s;
  return r;
}

void axpy(double s, std::span<const double> b, std::span<double> a) {
  require_same_size(a.size(), b.size(), "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

double distance(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_size(a.rows(), b.rows(), "add");
  require_same_size(a.cols(), b.cols(), "add");
  Matrix r = a;
  auto rd = r.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] += bd[i];
  return r;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_size(a.rows(), b.rows(), "subtract");
  require_same_size(a.cols(), b.cols(), "subtract");
  Matrix r = a;
  auto rd = r.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < rd.size(); ++i) rd[i] -= bd[i];
  return r;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix r = a;
  for (double& v : r.data()) v *= s;
  return r;
}

}  // namespace pnpgl
