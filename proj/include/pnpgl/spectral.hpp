#pragma once

// Dense symmetric linear algebra: eigendecomposition, SPD solves, matrix
// square roots and truncated pseudo-inverses.

#include <cstddef>
#include <span>

#include "pnpgl/matrix.hpp"

namespace pnpgl {

// M = U diag(s) U^T with orthonormal columns in U and s sorted descending.
// Each eigenvector is signed so that its first entry with magnitude above
// 1e-12 is positive.
struct SpectralDecomp {
  Matrix U;
  Vector s;

  std::size_t size() const noexcept { return s.size(); }

  // U^T x
  Vector project(std::span<const double> x) const;
  // U c
  Vector synthesize(std::span<const double> c) const;
  // U diag(gains) U^T x
  Vector apply_gains(std::span<const double> gains, std::span<const double> x) const;
  Matrix reconstruct() const;

  double min_eigenvalue() const { return s.empty() ? 0.0 : s.back(); }
  double max_eigenvalue() const { return s.empty() ? 0.0 : s.front(); }
};

enum class EigenMethod {
  automatic,       // Jacobi up to kJacobiMaxSize, tridiagonal QL above
  jacobi,          // cyclic Jacobi, fixed row-by-row sweep order
  tridiagonal_ql,  // Householder reduction + implicit QL
};

inline constexpr std::size_t kJacobiMaxSize = 64;

SpectralDecomp eig_sym(const SymMatrix& m, EigenMethod method = EigenMethod::automatic);

// Cholesky factor L (lower triangular, M = L L^T). Factoring fails with
// NotPositiveDefinite when a pivot drops to 1e-10 * max|diag| or below.
class Cholesky {
 public:
  explicit Cholesky(const SymMatrix& m);

  Vector solve(std::span<const double> b) const;
  std::size_t size() const noexcept { return l_.rows(); }

 private:
  Matrix l_;
};

Vector solve_spd(const SymMatrix& m, std::span<const double> b);

// Principal square root of a PSD matrix. Eigenvalues in [-1e-6, 0) are
// treated as round-off and clamped to zero; anything lower is rejected.
SymMatrix sqrt_psd(const SymMatrix& m);
SymMatrix sqrt_psd(const SpectralDecomp& d);

// U1 diag(1/s1) U1^T over the r leading eigenpairs.
SymMatrix pinv_truncated(const SymMatrix& m, std::size_t r);
SymMatrix pinv_truncated(const SpectralDecomp& d, std::size_t r);

// |(1 - s)^{-1} - s (1 - s)^{-1} - 1|: the identity
// (I - W)^{-1} - (W^{-1} - I)^{-1} = I restricted to one eigenvalue s of W,
// with (W^{-1} - I)^{-1} written as W (I - W)^{-1}. Requires 0 < s < 1.
double duality_residual(double s);

}  // namespace pnpgl
