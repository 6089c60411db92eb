#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "pnpgl/equilibrium.hpp"
#include "pnpgl/error.hpp"
#include "pnpgl/estimators.hpp"
#include "support.hpp"

using namespace pnpgl;
using testing::sym;

namespace {

double dist(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::shared_ptr<const GraphFilter> share(GraphFilter w) {
  return std::make_shared<const GraphFilter>(std::move(w));
}

constexpr PsiVariant kVariants[] = {PsiVariant::phi, PsiVariant::psi1, PsiVariant::psi2,
                                    PsiVariant::psi3};

double sq_error(const Signal& x, const Signal& e) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - e[i]) * (x[i] - e[i]);
  return s;
}

}  // namespace

TEST_CASE("ce_residual_single") {
  const GraphFilter w = testing::random_invertible_filter(12, 1);
  const Signal y = Signal::line(testing::random_vector(12, 2));
  const double a = 0.3;
  CHECK(ce_residual_single(estimate_pnp(y, w, {a, 0.0}), y, w, a) < 1e-8 * norm2(y.values()));

  const GraphFilter id(SymMatrix(Matrix::identity(12)), Provenance::synthetic);
  CHECK(ce_residual_single(y, y, id, a) < 1e-14);

  // x = y leaves alpha ||(W^{-1} - I) y||.
  Matrix g = testing::inverse(w.matrix().matrix());
  for (std::size_t i = 0; i < 12; ++i) g(i, i) -= 1.0;
  const double expect = a * norm2(testing::mul(g, y.values()));
  CHECK(expect > 0.0);
  CHECK(ce_residual_single(y, y, w, a) == doctest::Approx(expect).epsilon(1e-9));

  const GraphFilter half(sym(2, {0.5, 0.5, 0.5, 0.5}), Provenance::synthetic);
  CHECK_THROWS_AS(ce_residual_single(Signal::line({1, 0}), Signal::line({1, 0}), half, a),
                  SingularFilter);
}

TEST_CASE("psi1 endpoint examples") {
  const GraphFilter w = testing::random_invertible_filter(10, 3);
  const Signal y = Signal::line(testing::random_vector(10, 4));
  CHECK(dist(minimize_psi(PsiVariant::psi1, y, w, 1.0).values(), w.apply(y.values())) < 1e-12);
  CHECK(dist(minimize_psi(PsiVariant::psi1, y, w, 0.0).values(), y.values()) < 1e-10);
}

TEST_CASE("the four objectives share one minimiser") {
  for (std::uint64_t t = 0; t < 4; ++t) {
    const GraphFilter w = testing::random_invertible_filter(12, 10 + t);
    const Signal y = Signal::line(testing::random_vector(12, 20 + t));
    for (double a : {0.1, 0.3, 0.7}) {
      CAPTURE(t);
      CAPTURE(a);
      std::vector<Signal> sols;
      for (PsiVariant v : kVariants) {
        sols.push_back(minimize_psi(v, y, w, a));
        CHECK(ce_residual_single(sols.back(), y, w, a) < 1e-8 * norm2(y.values()));
      }
      for (std::size_t i = 0; i < sols.size(); ++i)
        for (std::size_t j = i + 1; j < sols.size(); ++j)
          CHECK(dist(sols[i].values(), sols[j].values()) < 1e-8);

      // Each is a minimum of its own objective.
      for (std::size_t v = 0; v < 4; ++v) {
        const double f0 = psi_objective(kVariants[v], sols[v].values(), y, w, a);
        for (std::uint64_t p = 0; p < 3; ++p) {
          Vector xp = sols[v].values();
          const Vector d = testing::random_vector(12, 900 + p, 1e-3);
          for (std::size_t i = 0; i < 12; ++i) xp[i] += d[i];
          CHECK(psi_objective(kVariants[v], xp, y, w, a) > f0);
        }
      }
    }
  }
  const GraphFilter w = testing::random_invertible_filter(4, 1);
  CHECK_THROWS_AS(minimize_psi(PsiVariant::phi, Signal::line(Vector(4, 1.0)), w, 1.5),
                  InvalidArgument);
}

TEST_CASE("psi2 is the beta = -1 case of the Kheradmand-Milanfar objective") {
  for (std::uint64_t t = 0; t < 10; ++t) {
    const GraphFilter w = testing::random_invertible_filter(8, 30 + t);
    const Signal y = Signal::line(testing::random_vector(8, 40 + t));
    const Vector x = testing::random_vector(8, 50 + t);
    const double a = 0.1 * (t + 1) * 0.9;
    const double p2 = psi_objective(PsiVariant::psi2, x, y, w, a);
    const double km = kheradmand_milanfar_objective(x, y, w, a, -1.0);
    CHECK(std::abs(p2 - km) <= 1e-10 * std::max(1.0, std::abs(p2)));
  }
}

TEST_CASE("general linear CE") {
  const std::size_t n = 16;
  const GraphFilter w = testing::random_invertible_filter(n, 60);
  const Signal y = Signal::line(testing::random_vector(n, 61));
  const double a = 0.25;

  const Signal xi = solve_general_linear_ce(ForwardModel::identity(n), y, w, a);
  CHECK(dist(xi.values(), estimate_pnp(y, w, {a, 0.0}).values()) < 1e-10);

  const ForwardModel mask = random_sampling_mask(n, 0.5, 62);
  const Signal ym = apply_forward(mask, y);
  const Signal xm = solve_general_linear_ce(mask, ym, w, a);
  CHECK(general_ce_residual(mask, ym, w, xm, a) < 1e-8);

  // Oracle via explicit inverse.
  Matrix sys = testing::inverse(w.matrix().matrix());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sys(i, j) = a * (sys(i, j) - (i == j ? 1.0 : 0.0));
  for (std::size_t i = 0; i < n; ++i) sys(i, i) += mask.mask()[i];
  CHECK(dist(xm.values(), testing::solve(sys, mask.apply_adjoint(ym.values()))) < 1e-8);

  // W = I leaves least squares on the sampled entries.
  const GraphFilter id(SymMatrix(Matrix::identity(n)), Provenance::synthetic);
  const Matrix a_dense = testing::random_matrix(20, n, 63);
  const ForwardModel dense = ForwardModel::dense(a_dense);
  const Signal yd = Signal::line(testing::random_vector(20, 64));
  const Signal xd = solve_general_linear_ce(dense, yd, id, a);
  const Vector ls = testing::solve(dense.normal_matrix().matrix(), dense.apply_adjoint(yd.values()));
  CHECK(dist(xd.values(), ls) < 1e-9);
}

TEST_CASE("synthesis form") {
  const std::size_t n = 14;
  const GraphFilter w = testing::random_invertible_filter(n, 70);
  const Signal y = Signal::line(testing::random_vector(n, 71));
  const double a = 0.3;
  CHECK(dist(solve_synthesis_form(ForwardModel::identity(n), y, w, a).values(),
             estimate_pnp(y, w, {a, 0.0}).values()) < 1e-6);

  const ForwardModel mask = random_sampling_mask(n, 0.6, 72);
  const Signal ym = apply_forward(mask, y);
  CHECK(dist(solve_synthesis_form(mask, ym, w, a).values(),
             solve_general_linear_ce(mask, ym, w, a).values()) < 1e-6);

  const GraphFilter low = make_synthetic_filter(n, 73, 6);
  const Signal xs = solve_synthesis_form(ForwardModel::identity(n), y, low, a);
  const Vector c = low.spectrum().project(xs.values());
  double tail = 0.0;
  for (std::size_t i = 6; i < n; ++i) tail += c[i] * c[i];
  CHECK(std::sqrt(tail) < 1e-8);
  const Signal xg = solve_general_linear_ce(ForwardModel::identity(n), y, low, a);
  CHECK(dist(xs.values(), xg.values()) < 1e-6);
}

TEST_CASE("multi-prior equilibrium") {
  const std::size_t n = 12;
  const Signal y = Signal::line(testing::random_vector(n, 80));
  std::vector<std::shared_ptr<const GraphFilter>> priors;
  for (std::uint64_t i = 0; i < 4; ++i)
    priors.push_back(share(testing::random_invertible_filter(n, 81 + i, 1.0, 0.2 + 0.1 * i)));

  const AgentSet agents = AgentSet::uniform(0.3, 1.5, priors);
  const CEReport r = solve_multi_prior(agents, y);
  CHECK(r.duals.size() == 5);
  CHECK(r.agent_residuals.size() == 5);
  CHECK(r.residuals().size() == 6);
  for (double v : r.agent_residuals) CHECK(v < 1e-8);
  CHECK(r.consensus_residual < 1e-8);

  // Oracle: (mu0 I + alpha (sum mu_i W_i^{-1} - I)) x = mu0 y.
  Matrix sys(n, n);
  for (const auto& w : priors) {
    const Matrix inv = testing::inverse(w->matrix().matrix());
    for (std::size_t k = 0; k < n * n; ++k) sys.data()[k] += 0.3 * 0.25 * inv.data()[k];
  }
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    sys(i, i) += 1.5 - 0.3;
    rhs[i] = 1.5 * y[i];
  }
  CHECK(dist(r.xhat.values(), testing::solve(sys, rhs)) < 1e-10);

  // k = 1 reduces to the single-prior estimate with alpha / mu0.
  const AgentSet one = AgentSet::uniform(0.3, 1.5, {priors[0]});
  const CEReport r1 = solve_multi_prior(one, y);
  CHECK(dist(r1.xhat.values(), estimate_pnp(y, *priors[0], {0.2, 0.0}).values()) < 1e-10);
  CHECK(dist(solve_individual(agents, y, 0).xhat.values(), r1.xhat.values()) < 1e-10);

  // Identical filters collapse to one.
  const AgentSet same = AgentSet::uniform(0.3, 1.5, {priors[1], priors[1], priors[1]});
  CHECK(dist(solve_multi_prior(same, y).xhat.values(),
             estimate_pnp(y, *priors[1], {0.2, 0.0}).values()) < 1e-10);
}

TEST_CASE("agent set validation") {
  const auto w = share(testing::random_invertible_filter(4, 1));
  AgentSet a = AgentSet::uniform(0.1, 1.0, {w, w});
  CHECK_NOTHROW(a.validate());
  a.mu = {0.6, 0.6};
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a.mu = {1.2, -0.2};
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = AgentSet::uniform(0.1, 0.0, {w});
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  a = AgentSet::uniform(0.1, 1.0, {});
  CHECK_THROWS_AS(a.validate(), InvalidArgument);
  const auto half = share(GraphFilter(sym(2, {0.5, 0.5, 0.5, 0.5}), Provenance::synthetic));
  CHECK_THROWS_AS(solve_multi_prior(AgentSet::uniform(0.1, 1.0, {half}), Signal::line({1, 0})),
                  SingularFilter);
}

TEST_CASE("optimal weights examples") {
  const Signal x = Signal::line({0.0, 0.0, 0.0});
  const Signal e1 = Signal::line({1.0, 0.0, 0.0});
  const Signal e2 = Signal::line({0.0, 1.0, 0.0});
  const OptimalWeights sym2 = optimal_weights(x, {e1, e2});
  CHECK(sym2.mu[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sym2.mu[1] == doctest::Approx(0.5).epsilon(1e-12));

  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const Signal a = Signal::line({eps, 0.0, 0.0});
    const Signal b = Signal::line({0.0, 1.0, 0.0});
    const OptimalWeights w = optimal_weights(x, {a, b});
    CHECK(std::abs(w.mu[0] - 1.0) <= 2 * (eps * eps + w.ridge));
  }

  const OptimalWeights exact = optimal_weights(x, {x, x, x});
  CHECK(exact.degenerate);
  for (double m : exact.mu) CHECK(m == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(optimal_weights(x, {e1}), InvalidArgument);
}

TEST_CASE("optimal weights against a simplex grid search") {
  int interior = 0;
  for (std::uint64_t t = 0; t < 3; ++t) {
    CAPTURE(t);
    const std::size_t n = 16;
    const Signal x = Signal::line(testing::random_vector(n, 100 + t));
    std::vector<Signal> xh;
    for (std::uint64_t i = 0; i < 3; ++i) {
      Vector v = x.values();
      const Vector e = testing::random_vector(n, 200 + 10 * t + i, 0.1 * (i + 1));
      for (std::size_t j = 0; j < n; ++j) v[j] += e[j];
      xh.push_back(Signal::line(v));
    }
    const OptimalWeights ow = optimal_weights(x, xh);
    CHECK(std::abs(ow.mu[0] + ow.mu[1] + ow.mu[2] - 1.0) < 1e-12);
    const double f_star = sq_error(x, combine_weighted(xh, ow.mu));

    double best = INFINITY;
    Vector arg(3);
    for (int i = 0; i <= 1000; ++i)
      for (int j = 0; i + j <= 1000; ++j) {
        const Vector mu{i * 1e-3, j * 1e-3, (1000 - i - j) * 1e-3};
        double f = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
          const double c = mu[0] * xh[0][p] + mu[1] * xh[1][p] + mu[2] * xh[2][p];
          f += (x[p] - c) * (x[p] - c);
        }
        if (f < best) {
          best = f;
          arg = mu;
        }
      }
    CHECK(f_star <= best * (1 + 1e-6));
    // The closed form optimises over the affine hull, so the per-weight match
    // only applies when it lands inside the simplex.
    const bool inside = ow.mu[0] >= 0 && ow.mu[1] >= 0 && ow.mu[2] >= 0;
    if (inside) {
      ++interior;
      for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(ow.mu[i] - arg[i]) < 2e-3);
    } else {
      CHECK(f_star < best);
    }

    // KKT: (Sigma + ridge I) mu is a constant vector.
    Matrix s(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t p = 0; p < n; ++p) s(i, j) += (x[p] - xh[i][p]) * (x[p] - xh[j][p]);
    for (std::size_t i = 0; i < 3; ++i) s(i, i) += ow.ridge;
    const Vector g = testing::mul(s, ow.mu);
    CHECK(std::abs(g[0] - g[1]) < 1e-8);
    CHECK(std::abs(g[0] - g[2]) < 1e-8);

    for (const Signal& e : xh) CHECK(f_star <= sq_error(x, e) + 1e-12);
  }
  CHECK(interior >= 1);
}

TEST_CASE("combine_weighted") {
  const std::vector<Signal> xs{Signal::line({1, 2}), Signal::line({3, 5})};
  CHECK(combine_weighted(xs, Vector{1.0, 0.0}) == xs[0]);
  const std::vector<Signal> same{Signal::line({4, -1}), Signal::line({4, -1})};
  const Signal c = combine_weighted(same, Vector{0.3, 0.7});
  CHECK(c[0] == doctest::Approx(4.0));
  CHECK(c[1] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(combine_weighted(xs, Vector{0.5, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(combine_weighted(xs, Vector{1.0}), InvalidArgument);
}
