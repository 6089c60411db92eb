#include "pnpgl/signals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

#include "pnpgl/error.hpp"
#include "pnpgl/io.hpp"
#include "pnpgl/kernels.hpp"
#include "pnpgl/rng.hpp"

namespace pnpgl {

namespace {

void require_same_shape(const Signal& a, const Signal& b, const char* op) {
  if (a.shape() != b.shape())
    throw InvalidArgument(std::string(op) + ": signal shapes differ");
}

// Maps j onto [0, n) by mirror reflection about the end samples.
std::size_t reflect(std::ptrdiff_t j, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  j %= period;
  if (j < 0) j += period;
  if (j >= static_cast<std::ptrdiff_t>(n)) j = period - j;
  return static_cast<std::size_t>(j);
}

void rescale_to(Vector& v, double lo, double hi) {
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  const double a = *mn;
  const double b = *mx;
  for (double& e : v) e = (b > a) ? lo + (hi - lo) * (e - a) / (b - a) : 0.5 * (lo + hi);
}

}  // namespace

Signal::Signal(Shape shape, Vector data) : shape_(shape), data_(std::move(data)) {
  if (shape_.size() != data_.size())
    throw InvalidArgument("Signal: shape holds " + std::to_string(shape_.size()) +
                          " samples but data has " + std::to_string(data_.size()));
  if (!shape_.two_d && shape_.rows != 1)
    throw InvalidArgument("Signal: a 1D shape must have one row");
  for (double v : data_)
    if (!std::isfinite(v)) throw InvalidArgument("Signal: non-finite sample");
}

Signal Signal::line(Vector data) {
  const std::size_t n = data.size();
  return Signal(Shape::line(n), std::move(data));
}

Signal Signal::grid(std::size_t rows, std::size_t cols, Vector data) {
  return Signal(Shape::grid(rows, cols), std::move(data));
}

// ---------------------------------------------------------------------------
// Forward models

ForwardModel ForwardModel::identity(std::size_t n) {
  ForwardModel f;
  f.kind_ = Kind::identity;
  f.n_in_ = f.n_out_ = n;
  return f;
}

ForwardModel ForwardModel::sampling_mask(Vector mask) {
  for (double m : mask)
    if (m != 0.0 && m != 1.0) throw InvalidArgument("sampling_mask: entries must be 0 or 1");
  ForwardModel f;
  f.kind_ = Kind::sampling_mask;
  f.n_in_ = f.n_out_ = mask.size();
  f.mask_ = std::move(mask);
  return f;
}

ForwardModel ForwardModel::dense(Matrix a) {
  ForwardModel f;
  f.kind_ = Kind::dense;
  f.n_in_ = a.cols();
  f.n_out_ = a.rows();
  f.a_ = std::move(a);
  return f;
}

std::size_t ForwardModel::sampled_count() const {
  if (kind_ != Kind::sampling_mask) return n_out_;
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), 1.0));
}

Vector ForwardModel::apply(std::span<const double> x) const {
  if (x.size() != n_in_)
    throw InvalidArgument("ForwardModel::apply: expected " + std::to_string(n_in_) +
                          " inputs, got " + std::to_string(x.size()));
  switch (kind_) {
    case Kind::identity:
      return Vector(x.begin(), x.end());
    case Kind::sampling_mask: {
      Vector y(x.size());
      for (std::size_t i = 0; i < y.size(); ++i) y[i] = mask_[i] * x[i];
      return y;
    }
    case Kind::dense:
      return kernels::matvec(a_, x);
  }
  return {};
}

Vector ForwardModel::apply_adjoint(std::span<const double> y) const {
  if (y.size() != n_out_)
    throw InvalidArgument("ForwardModel::apply_adjoint: expected " + std::to_string(n_out_) +
                          " inputs, got " + std::to_string(y.size()));
  switch (kind_) {
    case Kind::identity:
    case Kind::sampling_mask:
      return apply(y);
    case Kind::dense: {
      Vector x(n_in_, 0.0);
      for (std::size_t i = 0; i < n_out_; ++i) axpy(y[i], a_.row(i), x);
      return x;
    }
  }
  return {};
}

SymMatrix ForwardModel::normal_matrix() const {
  switch (kind_) {
    case Kind::identity:
      return SymMatrix(Matrix::identity(n_in_));
    case Kind::sampling_mask:
      return SymMatrix(Matrix::diagonal(mask_));
    case Kind::dense:
      return SymMatrix::from_upper(kernels::transpose_matmul(a_, a_));
  }
  return {};
}

ForwardModel random_sampling_mask(std::size_t n, double rate, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0))
    throw InvalidArgument("random_sampling_mask: rate must be in (0, 1]");
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(rate * static_cast<double>(n))));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed);
  for (std::size_t i = 0; i < keep; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  Vector mask(n, 0.0);
  for (std::size_t i = 0; i < keep; ++i) mask[idx[i]] = 1.0;
  return ForwardModel::sampling_mask(std::move(mask));
}

// ---------------------------------------------------------------------------
// Generators and noise

Signal make_signal_1d(std::size_t n, std::uint64_t seed) {
  if (n < 16) throw InvalidArgument("make_signal_1d: n must be at least 16");
  CounterRng rng(seed);
  const double len = static_cast<double>(n);

  Vector v(n, 0.0);
  for (int k = 0; k < 3; ++k) {
    const double cycles = 0.5 + 2.5 * rng.uniform();
    const double amp = 0.2 + 0.8 * rng.uniform();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    for (std::size_t i = 0; i < n; ++i)
      v[i] += amp * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(i) / len +
                             phase);
  }
  const int steps = 2 + static_cast<int>(rng.next_u64() % 3);
  for (int k = 0; k < steps; ++k) {
    const auto at = static_cast<std::size_t>((0.1 + 0.8 * rng.uniform()) * len);
    const double height = (rng.uniform() < 0.5 ? -1.0 : 1.0) * (0.5 + rng.uniform());
    for (std::size_t i = at; i < n; ++i) v[i] += height;
  }
  rescale_to(v, 0.1, 0.9);
  return Signal::line(std::move(v));
}

Signal make_image(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows < 4 || cols < 4) throw InvalidArgument("make_image: image must be at least 4x4");
  CounterRng rng(seed);
  const double gr = rng.uniform() - 0.5;
  const double gc = rng.uniform() - 0.5;
  Vector v(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      v[r * cols + c] = gr * static_cast<double>(r) / static_cast<double>(rows) +
                        gc * static_cast<double>(c) / static_cast<double>(cols);

  for (int k = 0; k < 3; ++k) {
    const double cr = rng.uniform() * static_cast<double>(rows);
    const double cc = rng.uniform() * static_cast<double>(cols);
    const double rad = (0.15 + 0.2 * rng.uniform()) * static_cast<double>(std::min(rows, cols));
    const double level = rng.uniform() < 0.5 ? -0.6 : 0.6;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (std::hypot(static_cast<double>(r) - cr, static_cast<double>(c) - cc) < rad)
          v[r * cols + c] += level;
  }
  const std::size_t r0 = rng.next_u64() % (rows / 2);
  const std::size_t c0 = rng.next_u64() % (cols / 2);
  for (std::size_t r = r0; r < r0 + rows / 3; ++r)
    for (std::size_t c = c0; c < c0 + cols / 3; ++c) v[r * cols + c] += 0.4;

  rescale_to(v, 0.1, 0.9);
  return Signal::grid(rows, cols, std::move(v));
}

Signal add_noise(const Signal& x, const NoiseModel& nm) {
  if (!(nm.sigma >= 0.0)) throw InvalidArgument("add_noise: sigma must be non-negative");
  if (nm.sigma == 0.0) return x;
  CounterRng rng(nm.seed);
  Vector y = x.values();
  for (double& v : y) v += nm.sigma * rng.normal();
  return x.with_values(std::move(y));
}

// ---------------------------------------------------------------------------
// Patches and forward application

Vector extract_patch(const Signal& x, std::size_t i, std::size_t d) {
  if (d % 2 == 0) throw InvalidArgument("extract_patch: patch size must be odd");
  if (i >= x.size())
    throw InvalidArgument("extract_patch: index " + std::to_string(i) + " outside signal of " +
                          std::to_string(x.size()) + " samples");
  const auto half = static_cast<std::ptrdiff_t>(d / 2);
  const Shape& sh = x.shape();
  if (!sh.two_d) {
    Vector p(d);
    for (std::ptrdiff_t k = -half; k <= half; ++k)
      p[static_cast<std::size_t>(k + half)] =
          x[reflect(static_cast<std::ptrdiff_t>(i) + k, sh.cols)];
    return p;
  }
  const auto r = static_cast<std::ptrdiff_t>(i / sh.cols);
  const auto c = static_cast<std::ptrdiff_t>(i % sh.cols);
  Vector p;
  p.reserve(d * d);
  for (std::ptrdiff_t dr = -half; dr <= half; ++dr) {
    const std::size_t rr = reflect(r + dr, sh.rows);
    for (std::ptrdiff_t dc = -half; dc <= half; ++dc)
      p.push_back(x[rr * sh.cols + reflect(c + dc, sh.cols)]);
  }
  return p;
}

Matrix patch_matrix(const Signal& x, std::size_t d) {
  const std::size_t width = x.shape().two_d ? d * d : d;
  Matrix p(x.size(), width);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Vector row = extract_patch(x, i, d);
    std::copy(row.begin(), row.end(), p.row(i).begin());
  }
  return p;
}

Signal apply_forward(const ForwardModel& a, const Signal& x) {
  Vector y = a.apply(x.values());
  if (a.kind() == ForwardModel::Kind::dense && a.output_size() != x.size())
    return Signal::line(std::move(y));
  return x.with_values(std::move(y));
}

// ---------------------------------------------------------------------------
// Shepard interpolation

Signal shepard_fill(const Signal& y, const ForwardModel& mask) {
  if (mask.kind() != ForwardModel::Kind::sampling_mask)
    throw InvalidArgument("shepard_fill: forward model must be a sampling mask");
  if (mask.input_size() != y.size())
    throw InvalidArgument("shepard_fill: mask and signal sizes differ");
  const Vector& m = mask.mask();
  std::vector<std::size_t> sampled;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i] == 1.0) sampled.push_back(i);
  if (sampled.empty()) throw InvalidArgument("shepard_fill: mask has no sampled pixels");

  const std::size_t cols = y.shape().cols;
  auto sq_dist = [cols](std::size_t a, std::size_t b) {
    const double dr = static_cast<double>(a / cols) - static_cast<double>(b / cols);
    const double dc = static_cast<double>(a % cols) - static_cast<double>(b % cols);
    return dr * dr + dc * dc;
  };
  constexpr std::size_t kAllNeighbours = 4096;
  constexpr std::size_t kNearest = 64;
  const bool use_all = y.size() <= kAllNeighbours || sampled.size() <= kNearest;

  Vector out = y.values();
  kernels::for_each_index(y.size(), [&](std::size_t i) {
    if (m[i] == 1.0) return;
    std::vector<std::pair<double, std::size_t>> nb;
    nb.reserve(sampled.size());
    for (std::size_t j : sampled) nb.emplace_back(sq_dist(i, j), j);
    if (!use_all) {
      std::partial_sort(nb.begin(), nb.begin() + kNearest, nb.end());
      nb.resize(kNearest);
      std::sort(nb.begin(), nb.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& [d2, j] : nb) {
      const double w = 1.0 / d2;  // power 2 on the Euclidean distance
      num += w * y[j];
      den += w;
    }
    out[i] = num / den;
  });
  return y.with_values(std::move(out));
}

// ---------------------------------------------------------------------------
// Metrics

double mse(const Signal& a, const Signal& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double psnr(const Signal& a, const Signal& b, double peak) {
  const double e = mse(a, b);
  if (e == 0.0) return 300.0;
  return std::min(300.0, 10.0 * std::log10(peak * peak / e));
}

// ---------------------------------------------------------------------------
// PGM

std::uint8_t quantize_sample(double v) {
  const double q = std::floor(v * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

namespace {

class PgmReader {
 public:
  explicit PgmReader(std::string bytes) : buf_(std::move(bytes)) {}

  std::string token() {
    skip_space_and_comments();
    std::string t;
    while (pos_ < buf_.size() && !std::isspace(static_cast<unsigned char>(buf_[pos_])))
      t.push_back(buf_[pos_++]);
    if (t.empty()) throw ParseError("PGM: unexpected end of file");
    return t;
  }

  std::size_t number() {
    const std::string t = token();
    if (!std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        t.size() > 9)
      throw ParseError("PGM: expected a number, got '" + t + "'");
    return std::stoul(t);
  }

  // The single whitespace byte separating the header from binary data.
  void skip_one_space() {
    if (pos_ >= buf_.size() || !std::isspace(static_cast<unsigned char>(buf_[pos_])))
      throw ParseError("PGM: missing whitespace after header");
    ++pos_;
  }

  std::string_view rest() const { return std::string_view(buf_).substr(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(buf_[pos_]))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

Signal read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("PGM: cannot open " + path.string());
  PgmReader rd(std::string(std::istreambuf_iterator<char>(in), {}));

  const std::string magic = rd.token();
  if (magic != "P2" && magic != "P5") throw ParseError("PGM: bad magic '" + magic + "'");
  const std::size_t cols = rd.number();
  const std::size_t rows = rd.number();
  const std::size_t maxval = rd.number();
  if (cols == 0 || rows == 0) throw ParseError("PGM: empty image");
  if (maxval != 255) throw ParseError("PGM: maxval must be 255, got " + std::to_string(maxval));

  Vector v(rows * cols);
  if (magic == "P5") {
    rd.skip_one_space();
    const std::string_view raw = rd.rest();
    if (raw.size() < v.size()) throw ParseError("PGM: truncated pixel data");
    for (std::size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<double>(static_cast<unsigned char>(raw[i])) / 255.0;
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::size_t p = rd.number();
      if (p > 255) throw ParseError("PGM: sample above maxval");
      v[i] = static_cast<double>(p) / 255.0;
    }
  }
  return Signal::grid(rows, cols, std::move(v));
}

void write_pgm(const std::filesystem::path& path, const Signal& x, bool binary) {
  const Shape& sh = x.shape();
  std::ostringstream os;
  os << (binary ? "P5" : "P2") << '\n' << sh.cols << ' ' << sh.rows << "\n255\n";
  if (binary) {
    for (double v : x.values()) os.put(static_cast<char>(quantize_sample(v)));
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) {
      os << static_cast<int>(quantize_sample(x[i]));
      os << ((i + 1) % sh.cols == 0 ? '\n' : ' ');
    }
  }
  write_file_atomic(path, os.str());
}

}  // namespace pnpgl
