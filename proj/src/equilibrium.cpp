#include "pnpgl/equilibrium.hpp"

#include <cmath>
#include <string>

#include "pnpgl/error.hpp"
#include "pnpgl/estimators.hpp"
#include "pnpgl/kernels.hpp"

namespace pnpgl {

namespace {

void require_size(std::size_t filter, std::size_t signal, const char* op) {
  if (filter != signal)
    throw InvalidArgument(std::string(op) + ": filter size " + std::to_string(filter) +
                          " does not match signal size " + std::to_string(signal));
}

void require_invertible(const GraphFilter& w, const char* op) {
  if (!w.invertible())
    throw SingularFilter(std::string(op) + ": smallest eigenvalue " +
                         std::to_string(w.min_eig()) + " is not above 1e-8");
}

void require_unit_alpha(double alpha, const char* op) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw InvalidArgument(std::string(op) + ": alpha must lie in [0, 1]");
}

// W^{-1} x through the eigenbasis.
Vector apply_inverse(const GraphFilter& w, std::span<const double> x) {
  const SpectralDecomp& d = w.spectrum();
  Vector g(d.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.0 / d.s[i];
  return d.apply_gains(g, x);
}

// [(1 - alpha) I + alpha W^{-1}]^{-1} y through the eigenbasis.
Vector pnp_solution(const GraphFilter& w, std::span<const double> y, double alpha) {
  const SpectralDecomp& d = w.spectrum();
  Vector g(d.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = pnp_gain(d.s[i], alpha);
  return d.apply_gains(g, y);
}

// x^T (I - W) x
double laplacian_form(const GraphFilter& w, std::span<const double> x) {
  return dot(x, subtract(x, w.apply(x)));
}

Vector solve_equilibrated(Matrix m, Vector rhs) {
  const std::size_t n = m.rows();
  Vector scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(m(i, i) > 0.0))
      throw NotPositiveDefinite("general linear CE system has a non-positive diagonal entry");
    scale[i] = 1.0 / std::sqrt(m(i, i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) m(i, j) *= scale[i] * scale[j];
    rhs[i] *= scale[i];
  }
  Vector c = solve_spd(SymMatrix::from_upper(std::move(m)), rhs);
  for (std::size_t i = 0; i < n; ++i) c[i] *= scale[i];
  return c;
}

}  // namespace

double ce_residual_single(const Signal& xhat, const Signal& y, const GraphFilter& w,
                          double alpha) {
  require_size(w.size(), xhat.size(), "ce_residual_single");
  require_size(w.size(), y.size(), "ce_residual_single");
  require_invertible(w, "ce_residual_single");
  const SpectralDecomp& d = w.spectrum();
  Vector g(d.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (1.0 - alpha) + alpha / d.s[i];
  return distance(d.apply_gains(g, xhat.values()), y.values());
}

Signal minimize_psi(PsiVariant variant, const Signal& y, const GraphFilter& w, double alpha) {
  require_size(w.size(), y.size(), "minimize_psi");
  require_unit_alpha(alpha, "minimize_psi");
  const std::size_t n = w.size();
  const Matrix& wm = w.matrix().matrix();

  switch (variant) {
    case PsiVariant::phi:
      require_invertible(w, "minimize_psi(phi)");
      return y.with_values(pnp_solution(w, y.values(), alpha));

    case PsiVariant::psi1: {
      // (alpha I + (1 - alpha) W) x = W y
      Matrix h(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          h(i, j) = (i == j ? alpha : 0.0) + (1.0 - alpha) * wm(i, j);
      return y.with_values(
          solve_spd(SymMatrix::from_upper(std::move(h)), w.apply(y.values())));
    }

    case PsiVariant::psi2: {
      // W (x - y) + alpha (I - W) x = 0
      Matrix h(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          h(i, j) = wm(i, j) + alpha * ((i == j ? 1.0 : 0.0) - wm(i, j));
      return y.with_values(
          solve_spd(SymMatrix::from_upper(std::move(h)), w.apply(y.values())));
    }

    case PsiVariant::psi3: {
      require_invertible(w, "minimize_psi(psi3)");
      const SymMatrix winv = pinv_truncated(w.spectrum(), n);
      Matrix m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
          m(i, j) = (i == j ? 1.0 - alpha : 0.0) + alpha * winv(i, j);
      return y.with_values(solve_spd(SymMatrix::from_upper(std::move(m)), y.values()));
    }
  }
  throw InvalidArgument("minimize_psi: unknown variant");
}

double psi_objective(PsiVariant variant, std::span<const double> x, const Signal& y,
                     const GraphFilter& w, double alpha) {
  require_size(w.size(), x.size(), "psi_objective");
  require_size(w.size(), y.size(), "psi_objective");
  switch (variant) {
    case PsiVariant::phi: {
      require_invertible(w, "psi_objective(phi)");
      const Vector r = subtract(x, y.values());
      const double prior = dot(x, apply_inverse(w, x)) - dot(x, x);
      return 0.5 * dot(r, r) + 0.5 * alpha * prior;
    }
    case PsiVariant::psi1: {
      const Vector r = subtract(x, w.apply(y.values()));
      return 0.5 * dot(r, r) - 0.5 * (1.0 - alpha) * laplacian_form(w, x);
    }
    case PsiVariant::psi2: {
      const Vector r = subtract(x, y.values());
      return 0.5 * dot(r, w.apply(r)) + 0.5 * alpha * laplacian_form(w, x);
    }
    case PsiVariant::psi3: {
      require_invertible(w, "psi_objective(psi3)");
      const Vector r = subtract(x, pnp_solution(w, y.values(), alpha));
      return 0.5 * dot(r, r);
    }
  }
  throw InvalidArgument("psi_objective: unknown variant");
}

double kheradmand_milanfar_objective(std::span<const double> x, const Signal& y,
                                     const GraphFilter& w, double alpha, double beta) {
  require_size(w.size(), x.size(), "kheradmand_milanfar_objective");
  const Vector r = subtract(x, y.values());
  const Vector lr = subtract(r, w.apply(r));  // (I - W) r
  Vector weighted = r;
  axpy(beta, lr, weighted);
  return 0.5 * dot(r, weighted) + 0.5 * alpha * laplacian_form(w, x);
}

// ---------------------------------------------------------------------------
// General linear inverse problems

LinearCeSolver::LinearCeSolver(const ForwardModel& a, const Signal& y,
                               std::shared_ptr<const GraphFilter> w)
    : w_(std::move(w)) {
  if (!w_) throw InvalidArgument("LinearCeSolver: no graph filter");
  require_size(w_->size(), a.input_size(), "solve_general_linear_ce");
  if (a.output_size() != y.size())
    throw InvalidArgument("solve_general_linear_ce: observation length does not match A");
  const SpectralDecomp& d = w_->spectrum();
  const std::size_t n = d.size();
  for (std::size_t i = 0; i < n; ++i)
    if (d.s[i] > kNullModeTol) active_.push_back(i);
  if (active_.empty()) throw SingularFilter("solve_general_linear_ce: W has no active modes");

  Matrix ua(n, active_.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < active_.size(); ++c) ua(r, c) = d.U(r, active_[c]);

  Matrix au;
  switch (a.kind()) {
    case ForwardModel::Kind::identity:
      au = ua;
      break;
    case ForwardModel::Kind::sampling_mask:
      au = ua;
      for (std::size_t r = 0; r < n; ++r)
        if (a.mask()[r] == 0.0)
          for (double& v : au.row(r)) v = 0.0;
      break;
    case ForwardModel::Kind::dense:
      au = kernels::matmul(a.matrix(), ua);
      break;
  }
  gram_ = kernels::transpose_matmul(au, au);
  const Vector aty = a.apply_adjoint(y.values());
  rhs_.assign(active_.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) axpy(aty[r], ua.row(r), rhs_);
  y_shape_ = Signal(Shape(a.input_size() == y.size() ? y.shape() : Shape::line(a.input_size())),
                    Vector(a.input_size(), 0.0));
}

Signal LinearCeSolver::solve(double alpha) const {
  if (!(alpha > 0.0)) throw InvalidArgument("solve_general_linear_ce: alpha must be positive");
  const SpectralDecomp& d = w_->spectrum();
  Matrix m = gram_;
  for (std::size_t c = 0; c < active_.size(); ++c) {
    const double s = d.s[active_[c]];
    m(c, c) += alpha * (1.0 / s - 1.0);
  }
  const Vector coef = solve_equilibrated(std::move(m), rhs_);
  Vector x(d.size(), 0.0);
  for (std::size_t r = 0; r < d.size(); ++r) {
    double v = 0.0;
    for (std::size_t c = 0; c < active_.size(); ++c) v += d.U(r, active_[c]) * coef[c];
    x[r] = v;
  }
  return y_shape_.with_values(std::move(x));
}

Signal solve_general_linear_ce(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                               double alpha) {
  // Non-owning alias; the solver does not outlive this call.
  const std::shared_ptr<const GraphFilter> alias(std::shared_ptr<const GraphFilter>(), &w);
  return LinearCeSolver(a, y, alias).solve(alpha);
}

double general_ce_residual(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                           const Signal& xhat, double alpha) {
  require_size(w.size(), xhat.size(), "general_ce_residual");
  require_invertible(w, "general_ce_residual");
  Vector lhs = a.apply_adjoint(a.apply(xhat.values()));
  axpy(alpha, subtract(apply_inverse(w, xhat.values()), xhat.values()), lhs);
  return distance(lhs, a.apply_adjoint(y.values()));
}

Signal solve_synthesis_form(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                            double alpha) {
  require_size(w.size(), a.input_size(), "solve_synthesis_form");
  if (a.output_size() != y.size())
    throw InvalidArgument("solve_synthesis_form: observation length does not match A");
  if (!(alpha > 0.0)) throw InvalidArgument("solve_synthesis_form: alpha must be positive");
  const std::size_t n = w.size();
  const SymMatrix root = sqrt_psd(w.spectrum());
  const Matrix& r = root.matrix();

  // A W^{1/2}
  Matrix ar;
  switch (a.kind()) {
    case ForwardModel::Kind::identity:
      ar = r;
      break;
    case ForwardModel::Kind::sampling_mask:
      ar = r;
      for (std::size_t i = 0; i < n; ++i)
        if (a.mask()[i] == 0.0)
          for (double& v : ar.row(i)) v = 0.0;
      break;
    case ForwardModel::Kind::dense:
      ar = kernels::matmul(a.matrix(), r);
      break;
  }
  Matrix h = kernels::transpose_matmul(ar, ar);
  const Matrix& wm = w.matrix().matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) += alpha * ((i == j ? 1.0 : 0.0) - wm(i, j));

  Vector rhs(n, 0.0);
  for (std::size_t i = 0; i < ar.rows(); ++i) axpy(y[i], ar.row(i), rhs);
  const Vector z = solve_spd(SymMatrix::from_upper(std::move(h)), rhs);
  Vector x = kernels::matvec(r, z);
  if (a.input_size() == y.size()) return y.with_values(std::move(x));
  return Signal::line(std::move(x));
}

// ---------------------------------------------------------------------------
// Multiple priors

void AgentSet::validate() const {
  if (!(alpha > 0.0)) throw InvalidArgument("AgentSet: alpha must be positive");
  if (!(mu0 > 0.0)) throw InvalidArgument("AgentSet: mu0 must be positive");
  if (priors.empty()) throw InvalidArgument("AgentSet: at least one prior agent is required");
  if (mu.size() != priors.size())
    throw InvalidArgument("AgentSet: one weight per prior agent is required");
  double total = 0.0;
  for (double m : mu) {
    if (!(m >= 0.0)) throw InvalidArgument("AgentSet: weights must be non-negative");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidArgument("AgentSet: prior weights sum to " + std::to_string(total) +
                          ", expected 1");
  for (const auto& p : priors) {
    if (!p) throw InvalidArgument("AgentSet: null prior");
    if (p->size() != priors.front()->size())
      throw InvalidArgument("AgentSet: prior filters differ in size");
  }
}

AgentSet AgentSet::uniform(double alpha, double mu0,
                           std::vector<std::shared_ptr<const GraphFilter>> priors) {
  AgentSet a;
  a.alpha = alpha;
  a.mu0 = mu0;
  a.mu.assign(priors.size(), 1.0 / static_cast<double>(priors.size()));
  a.priors = std::move(priors);
  return a;
}

Vector CEReport::residuals() const {
  Vector r = agent_residuals;
  r.push_back(consensus_residual);
  return r;
}

CEReport solve_multi_prior(const AgentSet& agents, const Signal& y) {
  agents.validate();
  const std::size_t n = agents.priors.front()->size();
  require_size(n, y.size(), "solve_multi_prior");
  for (const auto& p : agents.priors) require_invertible(*p, "solve_multi_prior");

  const double a = agents.alpha;
  Matrix m(n, n);
  for (std::size_t k = 0; k < agents.priors.size(); ++k) {
    if (agents.mu[k] == 0.0) continue;
    const SymMatrix winv = pinv_truncated(agents.priors[k]->spectrum(), n);
    const double scale = a * agents.mu[k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) m(i, j) += scale * winv(i, j);
  }
  for (std::size_t i = 0; i < n; ++i) m(i, i) += agents.mu0 - a;
  const Vector x = solve_spd(SymMatrix::from_upper(std::move(m)), scaled(y.values(), agents.mu0));

  CEReport rep;
  rep.xhat = y.with_values(x);
  // u_0 = (x - y) / alpha, residual of F0(x + u_0) = (y + alpha (x + u_0)) / (1 + alpha)
  Vector u0 = scaled(subtract(x, y.values()), 1.0 / a);
  {
    Vector f0 = add(x, u0);
    for (std::size_t i = 0; i < n; ++i) f0[i] = (y[i] + a * f0[i]) / (1.0 + a);
    rep.agent_residuals.push_back(distance(f0, x));
  }
  Vector consensus = scaled(u0, agents.mu0);
  rep.duals.push_back(std::move(u0));
  for (std::size_t k = 0; k < agents.priors.size(); ++k) {
    const GraphFilter& w = *agents.priors[k];
    Vector ui = subtract(apply_inverse(w, x), x);
    rep.agent_residuals.push_back(distance(w.apply(add(x, ui)), x));
    axpy(agents.mu[k], ui, consensus);
    rep.duals.push_back(std::move(ui));
  }
  rep.consensus_residual = norm2(consensus);
  return rep;
}

CEReport solve_individual(const AgentSet& agents, const Signal& y, std::size_t i) {
  if (i >= agents.priors.size())
    throw InvalidArgument("solve_individual: prior index " + std::to_string(i) +
                          " out of range");
  AgentSet single;
  single.alpha = agents.alpha;
  single.mu0 = agents.mu0;
  single.priors = {agents.priors[i]};
  single.mu = {1.0};
  return solve_multi_prior(single, y);
}

// ---------------------------------------------------------------------------
// Combination weights

OptimalWeights optimal_weights(const Signal& x, const std::vector<Signal>& xhats, double ridge) {
  const std::size_t k = xhats.size();
  if (k < 2) throw InvalidArgument("optimal_weights: need at least two estimates");
  std::vector<Vector> err;
  for (const Signal& e : xhats) {
    if (e.size() != x.size()) throw InvalidArgument("optimal_weights: estimate size mismatch");
    err.push_back(subtract(x.values(), e.values()));
  }
  Matrix sigma(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) sigma(i, j) = dot(err[i], err[j]);
  const SymMatrix cov = SymMatrix::from_upper(std::move(sigma));
  const double trace = cov.matrix().trace();

  OptimalWeights out;
  if (trace == 0.0) {
    out.mu.assign(k, 1.0 / static_cast<double>(k));
    out.degenerate = true;
    return out;
  }
  out.ridge = ridge < 0.0 ? 1e-10 * trace / static_cast<double>(k) : ridge;

  const SpectralDecomp d = eig_sym(cov, EigenMethod::jacobi);
  Vector inv(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double lam = d.s[i] + out.ridge;
    if (!(lam > 0.0))
      throw NotPositiveDefinite("optimal_weights: Sigma + ridge I is singular");
    inv[i] = 1.0 / lam;
  }
  const Vector z = d.apply_gains(inv, Vector(k, 1.0));
  double total = 0.0;
  for (double v : z) total += v;
  out.mu = scaled(z, 1.0 / total);
  return out;
}

Signal combine_weighted(const std::vector<Signal>& xhats, std::span<const double> mu) {
  if (xhats.empty() || xhats.size() != mu.size())
    throw InvalidArgument("combine_weighted: need one weight per estimate");
  double total = 0.0;
  for (double m : mu) total += m;
  if (std::abs(total - 1.0) > 1e-10)
    throw InvalidArgument("combine_weighted: weights sum to " + std::to_string(total) +
                          ", expected 1");
  Vector out(xhats.front().size(), 0.0);
  for (std::size_t i = 0; i < xhats.size(); ++i) {
    if (xhats[i].shape() != xhats.front().shape())
      throw InvalidArgument("combine_weighted: estimates differ in shape");
    axpy(mu[i], xhats[i].values(), out);
  }
  return xhats.front().with_values(std::move(out));
}

}  // namespace pnpgl
