#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pnpgl/error.hpp"
#include "pnpgl/graph_filter.hpp"
#include "support.hpp"

using namespace pnpgl;
using testing::sym;

namespace {

double max_row_deviation(const Matrix& w) {
  double dev = 0.0;
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double r = 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) {
      r += w(i, j);
      c += w(j, i);
    }
    dev = std::max({dev, std::abs(r - 1.0), std::abs(c - 1.0)});
  }
  return dev;
}

KernelConfig dense_patch1(double h) {
  KernelConfig k;
  k.h = h;
  k.patch_size = 1;
  return k;
}

}  // namespace

TEST_CASE("KernelConfig validation") {
  KernelConfig k;
  CHECK_NOTHROW(k.validate());
  k.patch_size = 4;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  k = {};
  k.h = 0.0;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  k = {};
  k.search_radius = 0;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  k = {};
  k.spatial_sigma = -1.0;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  CHECK(KernelConfig::defaults_1d().h == 0.1);
  CHECK(KernelConfig::defaults_1d().patch_size == 5);
  CHECK_FALSE(KernelConfig::defaults_1d().search_radius.has_value());
}

TEST_CASE("build_kernel examples") {
  // Identical patches give exactly one.
  const Signal x = Signal::line({0.3, 0.3, 0.9});
  const SymMatrix k = build_kernel(x, dense_patch1(0.1));
  CHECK(k(0, 1) == 1.0);
  CHECK(k(0, 0) == 1.0);

  // Squared patch distance 2 h^2 gives e^{-1}.
  const double h = 0.2;
  const SymMatrix k2 = build_kernel(Signal::line({0.0, std::sqrt(2.0) * h}), dense_patch1(h));
  CHECK(k2(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(k2(0, 1) == doctest::Approx(0.367879).epsilon(1e-6));

  // Constant signal, dense window: all ones.
  const SymMatrix ones = build_kernel(Signal::line(Vector(20, 0.4)), KernelConfig{});
  for (double v : ones.matrix().data()) CHECK(v == 1.0);
}

TEST_CASE("build_kernel entries, window and spatial factor") {
  const Signal x = make_signal_1d(40, 3);
  const SymMatrix k = build_kernel(x, KernelConfig{});
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(k(i, i) == 1.0);
    for (std::size_t j = 0; j < x.size(); ++j) {
      CHECK(k(i, j) >= 0.0);
      CHECK(k(i, j) <= 1.0);
      CHECK(k(i, j) == k(j, i));
    }
  }
  // Cross-check one entry against the patch formula.
  const Vector pi = extract_patch(x, 4, 5);
  const Vector pj = extract_patch(x, 17, 5);
  double d2 = 0.0;
  for (std::size_t t = 0; t < 5; ++t) d2 += (pi[t] - pj[t]) * (pi[t] - pj[t]);
  CHECK(k(4, 17) == doctest::Approx(std::exp(-d2 / (2 * 0.01))).epsilon(1e-13));

  KernelConfig windowed;
  windowed.search_radius = 3;
  windowed.spatial_sigma = 2.0;
  const SymMatrix kw = build_kernel(x, windowed);
  CHECK(kw(4, 8) == 0.0);
  CHECK(kw(4, 7) == doctest::Approx(k(4, 7) * std::exp(-9.0 / 8.0)).epsilon(1e-13));

  // 2D windows use the Chebyshev distance between pixels.
  const Signal im = make_image(8, 8, 1);
  KernelConfig k2d;
  k2d.patch_size = 3;
  k2d.search_radius = 2;
  const SymMatrix ki = build_kernel(im, k2d);
  CHECK(ki(0, 2 * 8 + 2) > 0.0);
  CHECK(ki(0, 3 * 8) == 0.0);
  CHECK(ki(0, 3) == 0.0);
}

TEST_CASE("build_kernel parallel matches serial bit for bit") {
  kernels::set_thread_count(4);
  const Signal im = make_image(12, 12, 4);
  KernelConfig cfg;
  cfg.patch_size = 3;
  cfg.spatial_sigma = 3.0;
  const SymMatrix par = build_kernel(im, cfg, kernels::Exec::parallel);
  const SymMatrix ser = build_kernel(im, cfg, kernels::Exec::serial);
  CHECK(par.matrix() == ser.matrix());
  kernels::set_thread_count(1);
}

TEST_CASE("sinkhorn examples") {
  const GraphFilter a = sinkhorn(sym(2, {1, 1, 1, 1}));
  CHECK(a.matrix()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(a.matrix()(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  const SymMatrix ds = sym(3, {0.5, 0.3, 0.2, 0.3, 0.4, 0.3, 0.2, 0.3, 0.5});
  const GraphFilter b = sinkhorn(ds);
  CHECK(testing::max_abs_diff(b.matrix().matrix(), ds.matrix()) < 1e-12);
  CHECK(sinkhorn_scaling(ds).iterations == 0);

  const GraphFilter c = sinkhorn(sym(2, {2, 1, 1, 2}));
  CHECK(c.matrix()(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(c.matrix()(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const SinkhornScaling sc = sinkhorn_scaling(sym(2, {2, 1, 1, 2}));
  CHECK(sc.d[0] == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("sinkhorn errors") {
  CHECK_THROWS_AS(sinkhorn(sym(2, {1, 0, 0, 0})), InvalidArgument);
  CHECK_THROWS_AS(sinkhorn(sym(2, {1, -1, -1, 1})), InvalidArgument);
  // A kernel with zero diagonal and a single off-diagonal pair cannot be
  // balanced to a symmetric W with non-negative spectrum.
  CHECK_THROWS_AS(sinkhorn(sym(2, {0, 1, 1, 0})), NumericalError);
}

TEST_CASE("GraphFilter invariants on real filters") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Signal x = make_signal_1d(64, seed);
    const GraphFilter w = build_filter(x, KernelConfig{}, Provenance::oracle);
    CAPTURE(seed);
    CHECK(max_row_deviation(w.matrix().matrix()) < 1e-8);
    CHECK(w.spectrum().s.front() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(w.min_eig() >= -1e-8);
    // Leading eigenvector is the constant vector.
    const double c = 1.0 / std::sqrt(64.0);
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(w.spectrum().U(i, 0) - c) < 1e-6);
    for (std::uint64_t t = 0; t < 5; ++t) {
      const Vector v = testing::random_vector(64, 100 * seed + t);
      CHECK(norm2(w.apply(v)) <= norm2(v) + 1e-8);
    }
    CHECK(w.provenance() == Provenance::oracle);
  }
}

TEST_CASE("pre-filtered pipeline yields a valid filter") {
  const Signal img = make_image(12, 12, 2);
  const Signal noisy = add_noise(img, {0.05, 3});
  const ForwardModel mask = random_sampling_mask(img.size(), 0.5, 4);
  const Signal pre = shepard_fill(apply_forward(mask, noisy), mask);
  const GraphFilter w = build_filter(pre, KernelConfig::defaults_image(), Provenance::pre_filtered);
  CHECK(w.size() == 144);
  CHECK(max_row_deviation(w.matrix().matrix()) < 1e-8);
  CHECK(w.provenance() == Provenance::pre_filtered);
  CHECK(to_string(w.provenance()) == "pre-filtered");
}

TEST_CASE("GraphFilter rejects matrices that are not doubly stochastic") {
  CHECK_THROWS_AS(GraphFilter(sym(2, {0.7, 0.4, 0.4, 0.7}), Provenance::synthetic),
                  NumericalError);
  CHECK_THROWS_AS(GraphFilter(sym(2, {1.5, -0.5, -0.5, 1.5}), Provenance::synthetic),
                  NumericalError);
  // Doubly stochastic but with eigenvalue -1 (a permutation).
  try {
    GraphFilter(sym(2, {0, 1, 1, 0}), Provenance::synthetic);
    FAIL("expected a throw");
  } catch (const NumericalError& e) {
    CHECK(e.invariant() == "filter-spectrum");
  }
}

TEST_CASE("make_synthetic_filter rank") {
  const GraphFilter w = make_synthetic_filter(12, 3, 5);
  int nonzero = 0;
  for (double s : w.spectrum().s)
    if (s > 1e-10) ++nonzero;
  CHECK(nonzero == 5);
  CHECK_THROWS_AS(make_synthetic_filter(4, 1, 5), InvalidArgument);
}

TEST_CASE("laplacian_quadform") {
  const GraphFilter half(sym(2, {0.5, 0.5, 0.5, 0.5}), Provenance::synthetic);
  CHECK(laplacian_quadform(half, Vector{1, -1}) == doctest::Approx(2.0));
  CHECK(laplacian_quadform(half, Vector{1, 1}) == doctest::Approx(0.0));
  const GraphFilter id(sym(2, {1, 0, 0, 1}), Provenance::synthetic);
  CHECK(laplacian_quadform(id, Vector{3, -7}) == 0.0);

  const GraphFilter w = build_filter(make_signal_1d(32, 2), KernelConfig{}, Provenance::oracle);
  CHECK(std::abs(laplacian_quadform(w, Vector(32, 1.0))) < 1e-12);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Vector v = testing::random_vector(32, t);
    CHECK(laplacian_quadform(w, v) >= -1e-10 * dot(v, v));
  }
  CHECK_THROWS_AS(laplacian_quadform(w, Vector{1, 2}), InvalidArgument);
}

TEST_CASE("pnp_quadform") {
  const GraphFilter w2(sym(2, {2.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3}), Provenance::synthetic);
  CHECK(pnp_quadform(w2, Vector{1, -1}, 1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(2.0 * pnp_quadform(w2, Vector{1, -1}, 1.0) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(std::abs(pnp_quadform(w2, Vector{1, 1}, 0.3)) < 1e-12);
  const GraphFilter id(sym(2, {1, 0, 0, 1}), Provenance::synthetic);
  CHECK(pnp_quadform(id, Vector{3, -7}, 0.5) == 0.0);

  // Independent oracle: explicit inverse.
  const GraphFilter w = testing::random_invertible_filter(10, 4);
  const Vector x = testing::random_vector(10, 5);
  const Matrix inv = testing::inverse(w.matrix().matrix());
  const Vector wx = testing::mul(inv, x);
  const double expect = (dot(x, wx) - dot(x, x)) / (2 * 0.04);
  CHECK(pnp_quadform(w, x, 0.2) == doctest::Approx(expect).epsilon(1e-10));
  CHECK(pnp_quadform(w, x, 0.2) >= -1e-10 * dot(x, x) / 0.04);

  const GraphFilter singular(sym(2, {0.5, 0.5, 0.5, 0.5}), Provenance::synthetic);
  try {
    pnp_quadform(singular, Vector{1, 0}, 1.0);
    FAIL("expected a throw");
  } catch (const SingularFilter& e) {
    CHECK(e.invariant() == "invertible-filter");
  }
  CHECK_THROWS_AS(pnp_quadform(w2, Vector{1, 0}, 0.0), InvalidArgument);
}

TEST_CASE("red_quadform is half the Laplacian quadratic form") {
  const GraphFilter id(sym(2, {1, 0, 0, 1}), Provenance::synthetic);
  CHECK(red_quadform(id, Vector{2, 5}) == 0.0);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const GraphFilter w = testing::random_invertible_filter(8 + t % 5, t);
    const Vector x = testing::random_vector(w.size(), 50 + t);
    CHECK(std::abs(red_quadform(w, x) - 0.5 * laplacian_quadform(w, x)) < 1e-12);
    CHECK(std::abs(red_quadform(w, Vector(w.size(), 1.0))) < 1e-12);
  }
}
