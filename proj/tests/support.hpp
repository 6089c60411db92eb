#pragma once

// Helpers shared by the test binaries. The dense solvers here use Gaussian
// elimination with partial pivoting and never touch the library's spectral
// code, so they serve as independent oracles.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pnpgl/graph_filter.hpp"
#include "pnpgl/matrix.hpp"
#include "pnpgl/rng.hpp"

namespace testing {

using pnpgl::Matrix;
using pnpgl::SymMatrix;
using pnpgl::Vector;

inline Matrix mat(std::size_t rows, std::size_t cols, std::initializer_list<double> v) {
  if (v.size() != rows * cols) throw std::logic_error("mat: wrong number of entries");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (double x : v) m.data()[k++] = x;
  return m;
}

inline SymMatrix sym(std::size_t n, std::initializer_list<double> v) {
  return SymMatrix(mat(n, n, v));
}

inline Vector random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  pnpgl::CounterRng rng(seed);
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  pnpgl::CounterRng rng(seed);
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = rng.normal();
  return m;
}

inline SymMatrix random_symmetric(std::size_t n, std::uint64_t seed) {
  Matrix m = random_matrix(n, n, seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(j, i) = m(i, j);
  return SymMatrix(std::move(m));
}

// B^T B + n I
inline SymMatrix random_spd(std::size_t n, std::uint64_t seed) {
  const Matrix b = random_matrix(n, n, seed);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += b(k, i) * b(k, j);
      m(i, j) = s + (i == j ? static_cast<double>(n) : 0.0);
    }
  return SymMatrix::from_upper(std::move(m));
}

inline Vector mul(const Matrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
  return y;
}

inline Matrix mul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k)
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += a(i, k) * b(k, j);
  return c;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k)
    m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

// Gauss-Jordan inverse with partial pivoting.
inline Matrix inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    if (a(piv, c) == 0.0) throw std::runtime_error("inverse: singular matrix");
    for (std::size_t j = 0; j < n; ++j) {
      std::swap(a(c, j), a(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const double p = a(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      a(c, j) /= p;
      inv(c, j) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

inline Vector solve(const Matrix& a, const Vector& b) { return mul(inverse(a), b); }

// Random invertible filter: a Gaussian kernel on random points in the unit
// square plus `boost` on the diagonal, balanced by Sinkhorn. The boost keeps
// the kernel, and hence W, well away from singular.
inline pnpgl::GraphFilter random_invertible_filter(std::size_t n, std::uint64_t seed,
                                                   double boost = 1.0, double bandwidth = 0.3) {
  pnpgl::CounterRng rng(seed);
  std::vector<std::pair<double, double>> pts(n);
  for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
  Matrix k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[i].first - pts[j].first;
      const double dy = pts[i].second - pts[j].second;
      k(i, j) = std::exp(-(dx * dx + dy * dy) / (2.0 * bandwidth * bandwidth)) +
                (i == j ? boost : 0.0);
    }
  return pnpgl::sinkhorn(SymMatrix::from_upper(std::move(k)));
}

}  // namespace testing
