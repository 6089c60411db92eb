#include "pnpgl/kernels.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pnpgl/error.hpp"

namespace pnpgl::kernels {

namespace {
int g_threads = 1;

template <typename Body>
void run_rows(std::size_t n, Exec exec, Body&& body) {
#ifdef _OPENMP
  if (exec == Exec::parallel && g_threads > 1) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8) num_threads(g_threads)
    for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) body(i);
}
}  // namespace

void set_thread_count(int n) { g_threads = n < 1 ? 1 : n; }

int thread_count() { return g_threads; }

void configure_threads_from_env() {
  const char* env = std::getenv("PNPGL_THREADS");
  if (env == nullptr) {
    set_thread_count(1);
    return;
  }
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  set_thread_count((end != env && *end == '\0' && v > 0) ? static_cast<int>(v) : 1);
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Exec exec) {
  run_rows(n, exec, body);
}

Vector matvec(const Matrix& a, std::span<const double> x, Exec exec) {
  if (a.cols() != x.size())
    throw InvalidArgument("matvec: matrix has " + std::to_string(a.cols()) +
                          " columns, vector has " + std::to_string(x.size()));
  Vector y(a.rows());
  run_rows(a.rows(), exec, [&](std::size_t i) { y[i] = dot(a.row(i), x); });
  return y;
}

Matrix matmul(const Matrix& a, const Matrix& b, Exec exec) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  run_rows(a.rows(), exec, [&](std::size_t i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < ci.size(); ++j) ci[j] += aik * bk[j];
    }
  });
  return c;
}

Matrix transpose_matmul(const Matrix& a, const Matrix& b, Exec exec) {
  if (a.rows() != b.rows()) throw InvalidArgument("transpose_matmul: row counts differ");
  return matmul(a.transposed(), b, exec);
}

Matrix scaled_outer(const Matrix& u, std::span<const double> d, Exec exec) {
  if (u.cols() != d.size()) throw InvalidArgument("scaled_outer: diagonal length mismatch");
  const std::size_t n = u.rows();
  Matrix r(n, n);
  run_rows(n, exec, [&](std::size_t i) {
    Vector ud(u.cols());
    auto ui = u.row(i);
    for (std::size_t k = 0; k < ud.size(); ++k) ud[k] = ui[k] * d[k];
    for (std::size_t j = i; j < n; ++j) r(i, j) = dot(ud, u.row(j));
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) r(i, j) = r(j, i);
  return r;
}

}  // namespace pnpgl::kernels
