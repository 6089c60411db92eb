#pragma once

// Test signals, noise, forward models, patches, metrics and PGM I/O.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>

#include "pnpgl/matrix.hpp"

namespace pnpgl {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool two_d = false;

  static Shape line(std::size_t n) { return {1, n, false}; }
  static Shape grid(std::size_t rows, std::size_t cols) { return {rows, cols, true}; }
  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// 1D or 2D (row-major) array of finite real samples.
class Signal {
 public:
  Signal() = default;
  Signal(Shape shape, Vector data);

  static Signal line(Vector data);
  static Signal grid(std::size_t rows, std::size_t cols, Vector data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  const Vector& values() const noexcept { return data_; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  // Same shape, new samples.
  Signal with_values(Vector data) const { return Signal(shape_, std::move(data)); }

  friend bool operator==(const Signal&, const Signal&) = default;

 private:
  Shape shape_;
  Vector data_;
};

struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

// Linear operator A. The sampling mask is kept square (diagonal 0/1), so
// A^T A = A and the output has zeros at unsampled positions.
class ForwardModel {
 public:
  enum class Kind { identity, sampling_mask, dense };

  static ForwardModel identity(std::size_t n);
  static ForwardModel sampling_mask(Vector mask);
  static ForwardModel dense(Matrix a);

  Kind kind() const noexcept { return kind_; }
  std::size_t input_size() const noexcept { return n_in_; }
  std::size_t output_size() const noexcept { return n_out_; }
  const Vector& mask() const noexcept { return mask_; }
  const Matrix& matrix() const noexcept { return a_; }
  std::size_t sampled_count() const;

  Vector apply(std::span<const double> x) const;
  Vector apply_adjoint(std::span<const double> y) const;
  // A^T A as a dense matrix.
  SymMatrix normal_matrix() const;

 private:
  Kind kind_ = Kind::identity;
  std::size_t n_in_ = 0;
  std::size_t n_out_ = 0;
  Vector mask_;
  Matrix a_;
};

// Mask keeping exactly round(rate * n) positions, chosen uniformly at random.
ForwardModel random_sampling_mask(std::size_t n, double rate, std::uint64_t seed);

// Piecewise-smooth signal in [0, 1]: a few seeded low-frequency sinusoids plus
// two to four steps, rescaled to [0.1, 0.9]. Requires n >= 16.
Signal make_signal_1d(std::size_t n, std::uint64_t seed);

// Piecewise-smooth test image in [0, 1]: a shaded background with a few
// seeded discs and a rectangle.
Signal make_image(std::size_t rows, std::size_t cols, std::uint64_t seed);

// y = x + eta, eta ~ N(0, sigma^2 I) from CounterRng(seed).
Signal add_noise(const Signal& x, const NoiseModel& nm);

// Length-d (1D) or row-major d*d (2D) window centred at flat index i with
// reflect padding (the edge sample is not repeated).
Vector extract_patch(const Signal& x, std::size_t i, std::size_t d);

// Row i is extract_patch(x, i, d).
Matrix patch_matrix(const Signal& x, std::size_t d);

Signal apply_forward(const ForwardModel& a, const Signal& x);

// Inverse-distance (power 2) fill of the unsampled positions. Uses every
// sampled pixel when the signal has at most 4096 samples, otherwise the 64
// nearest sampled pixels.
Signal shepard_fill(const Signal& y, const ForwardModel& mask);

double mse(const Signal& a, const Signal& b);
// 10 log10(peak^2 / mse), 300 dB when the signals are identical.
double psnr(const Signal& a, const Signal& b, double peak = 1.0);

// P2/P5 with maxval 255. Samples map to [0, 1] on read; on write they are
// quantised with round-half-up and clamped to [0, 255].
Signal read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Signal& x, bool binary = true);
std::uint8_t quantize_sample(double v);

}  // namespace pnpgl
