#pragma once

// Data-parallel dense kernels. Every kernel takes an execution policy:
// Exec::parallel distributes independent output rows over OpenMP threads,
// Exec::serial runs the same arithmetic in a plain loop and is kept as the
// reference the parallel path is tested and benchmarked against. Each output
// element is produced by exactly one thread with a fixed summation order, so
// both policies return bit-identical results for any thread count.

#include <cstddef>
#include <functional>
#include <span>

#include "pnpgl/matrix.hpp"

namespace pnpgl::kernels {

enum class Exec { serial, parallel };

// Thread cap used by Exec::parallel. Defaults to 1.
void set_thread_count(int n);
int thread_count();

// Reads PNPGL_THREADS; absent or invalid leaves a single thread.
void configure_threads_from_env();

// Calls body(i) for i in [0, n).
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body,
                    Exec exec = Exec::parallel);

Vector matvec(const Matrix& a, std::span<const double> x, Exec exec = Exec::parallel);

// a * b
Matrix matmul(const Matrix& a, const Matrix& b, Exec exec = Exec::parallel);

// a^T * b
Matrix transpose_matmul(const Matrix& a, const Matrix& b, Exec exec = Exec::parallel);

// U * diag(d) * U^T, built from the upper triangle and mirrored so the result is
// exactly symmetric.
Matrix scaled_outer(const Matrix& u, std::span<const double> d, Exec exec = Exec::parallel);

}  // namespace pnpgl::kernels
