#include "pnpgl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "pnpgl/error.hpp"
#include "pnpgl/kernels.hpp"

namespace pnpgl {

namespace {

constexpr double kJacobiOffDiagTol = 1e-12;
constexpr int kJacobiMaxSweeps = 100;
constexpr int kQlMaxIterations = 60;

// Rows of `z` are eigenvectors. Sorts pairs descending (ties keep index order),
// fixes signs and returns U with eigenvectors in columns.
SpectralDecomp finalize(Matrix z, Vector evals) {
  const std::size_t n = evals.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return evals[a] > evals[b]; });

  SpectralDecomp out{Matrix(n, n), Vector(n)};
  for (std::size_t c = 0; c < n; ++c) {
    auto v = z.row(order[c]);
    double sign = 1.0;
    for (double e : v) {
      if (std::abs(e) > 1e-12) {
        sign = e > 0.0 ? 1.0 : -1.0;
        break;
      }
    }
    out.s[c] = evals[order[c]];
    for (std::size_t i = 0; i < n; ++i) out.U(i, c) = sign * v[i];
  }
  return out;
}

SpectralDecomp jacobi(const SymMatrix& m) {
  const std::size_t n = m.size();
  Matrix a = m.matrix();
  Matrix z = Matrix::identity(n);  // rows accumulate eigenvectors
  const double scale = a.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_norm() > kJacobiOffDiagTol * scale) {
    if (++sweep > kJacobiMaxSweeps)
      throw NumericalError("jacobi-convergence",
                           "eig_sym: Jacobi did not converge in " +
                               std::to_string(kJacobiMaxSweeps) + " sweeps");
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          a(k, p) = rp[k];
          a(k, q) = rq[k];
        }

        auto zp = z.row(p);
        auto zq = z.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double vp = zp[k];
          const double vq = zq[k];
          zp[k] = c * vp - s * vq;
          zq[k] = s * vp + c * vq;
        }
      }
    }
  }

  Vector evals(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
  return finalize(std::move(z), std::move(evals));
}

// Householder tridiagonalisation followed by implicit QL with shifts, after
// the EISPACK tred2/tql2 pair. `v` is row-major; on return its columns hold
// the Householder basis.
void tridiagonalize(Matrix& v, Vector& d, Vector& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0.0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k < i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k < i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// `z` holds the basis vectors as rows so each plane rotation touches two
// contiguous rows.
void implicit_ql(Matrix& z, Vector& d, Vector& e) {
  const std::size_t n = d.size();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > kQlMaxIterations)
          throw NumericalError("ql-convergence", "eig_sym: implicit QL did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t ii = m; ii-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[ii];
          h = c * p;
          r = std::hypot(p, e[ii]);
          e[ii + 1] = s * r;
          s = e[ii] / r;
          c = p / r;
          p = c * d[ii] - s * g;
          d[ii + 1] = h + s * (c * g + s * d[ii]);

          auto zi = z.row(ii);
          auto zi1 = z.row(ii + 1);
          for (std::size_t k = 0; k < n; ++k) {
            const double t = zi1[k];
            zi1[k] = s * zi[k] + c * t;
            zi[k] = c * zi[k] - s * t;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }
}

SpectralDecomp tridiagonal_ql(const SymMatrix& m) {
  const std::size_t n = m.size();
  Matrix v = m.matrix();
  Vector d(n);
  Vector e(n);
  tridiagonalize(v, d, e);
  Matrix z = v.transposed();
  implicit_ql(z, d, e);
  return finalize(std::move(z), std::move(d));
}

}  // namespace

Vector SpectralDecomp::project(std::span<const double> x) const {
  if (x.size() != U.rows()) throw InvalidArgument("SpectralDecomp::project: size mismatch");
  Vector c(U.cols(), 0.0);
  for (std::size_t i = 0; i < U.rows(); ++i) axpy(x[i], U.row(i), c);
  return c;
}

Vector SpectralDecomp::synthesize(std::span<const double> c) const {
  return kernels::matvec(U, c);
}

Vector SpectralDecomp::apply_gains(std::span<const double> gains,
                                   std::span<const double> x) const {
  if (gains.size() != U.cols())
    throw InvalidArgument("SpectralDecomp::apply_gains: gain count mismatch");
  Vector c = project(x);
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= gains[k];
  return synthesize(c);
}

Matrix SpectralDecomp::reconstruct() const { return kernels::scaled_outer(U, s); }

SpectralDecomp eig_sym(const SymMatrix& m, EigenMethod method) {
  if (m.size() == 0) return {};
  for (double v : m.matrix().data())
    if (!std::isfinite(v)) throw InvalidArgument("eig_sym: matrix has non-finite entries");
  if (method == EigenMethod::automatic)
    method = m.size() <= kJacobiMaxSize ? EigenMethod::jacobi : EigenMethod::tridiagonal_ql;
  return method == EigenMethod::jacobi ? jacobi(m) : tridiagonal_ql(m);
}

Cholesky::Cholesky(const SymMatrix& m) : l_(m.size(), m.size()) {
  const std::size_t n = m.size();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m(i, i)));
  const double tol = 1e-10 * max_diag;

  for (std::size_t j = 0; j < n; ++j) {
    auto lj = l_.row(j);
    double pivot = m(j, j) - dot(lj.first(j), lj.first(j));
    if (!(pivot > tol))
      throw NotPositiveDefinite("Cholesky: pivot " + std::to_string(j) + " is " +
                                std::to_string(pivot) + ", not above tolerance " +
                                std::to_string(tol));
    const double ljj = std::sqrt(pivot);
    lj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l_.row(i);
      li[j] = (m(i, j) - dot(li.first(j), lj.first(j))) / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = l_.rows();
  if (b.size() != n) throw InvalidArgument("Cholesky::solve: right-hand side size mismatch");
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    auto li = l_.row(i);
    y[i] = (y[i] - dot(li.first(i), std::span<const double>(y).first(i))) / li[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l_(k, ii) * y[k];
    y[ii] = s / l_(ii, ii);
  }
  return y;
}

Vector solve_spd(const SymMatrix& m, std::span<const double> b) {
  return Cholesky(m).solve(b);
}

SymMatrix sqrt_psd(const SpectralDecomp& d) {
  Vector root(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.s[i] < -1e-6)
      throw NumericalError("positive-semidefinite",
                           "sqrt_psd: eigenvalue " + std::to_string(d.s[i]) + " is below -1e-6");
    root[i] = d.s[i] > 0.0 ? std::sqrt(d.s[i]) : 0.0;
  }
  return SymMatrix(kernels::scaled_outer(d.U, root));
}

SymMatrix sqrt_psd(const SymMatrix& m) { return sqrt_psd(eig_sym(m)); }

SymMatrix pinv_truncated(const SpectralDecomp& d, std::size_t r) {
  if (r < 1 || r > d.size())
    throw InvalidArgument("pinv_truncated: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(d.size()) + "]");
  Vector inv(d.size(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    if (!(d.s[i] > 1e-12))
      throw SingularFilter("pinv_truncated: kept eigenvalue " + std::to_string(i) + " is " +
                           std::to_string(d.s[i]));
    inv[i] = 1.0 / d.s[i];
  }
  return SymMatrix(kernels::scaled_outer(d.U, inv));
}

SymMatrix pinv_truncated(const SymMatrix& m, std::size_t r) {
  return pinv_truncated(eig_sym(m), r);
}

double duality_residual(double s) {
  if (!(s > 0.0 && s < 1.0)) throw InvalidArgument("duality_residual: s must lie in (0, 1)");
  const double gap = 1.0 - s;
  return std::abs(1.0 / gap - s / gap - 1.0);
}

}  // namespace pnpgl
