#include "pnpgl/estimators.hpp"

#include <cmath>
#include <string>

#include "pnpgl/error.hpp"

namespace pnpgl {

void EstimatorConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidArgument("EstimatorConfig: alpha must be positive");
  if (!(sigma_eta >= 0.0) || !std::isfinite(sigma_eta))
    throw InvalidArgument("EstimatorConfig: sigma_eta must be non-negative");
}

void EstimatorConfig::validate_pnp() const {
  validate();
  if (alpha > 1.0) throw InvalidArgument("EstimatorConfig: PnP alpha must be in (0, 1]");
}

double laplacian_gain(double s, double alpha) { return 1.0 / (1.0 + alpha - alpha * s); }

double pnp_gain(double s, double alpha) { return s / ((1.0 - alpha) * s + alpha); }

namespace {
void require_size(std::size_t filter, std::size_t signal, const char* op) {
  if (filter != signal)
    throw InvalidArgument(std::string(op) + ": filter size " + std::to_string(filter) +
                          " does not match signal size " + std::to_string(signal));
}
}  // namespace

Signal estimate_laplacian(const Signal& y, const GraphFilter& w, const EstimatorConfig& cfg) {
  cfg.validate();
  require_size(w.size(), y.size(), "estimate_laplacian");
  const std::size_t n = w.size();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = (i == j ? 1.0 + cfg.alpha : 0.0) - cfg.alpha * w.matrix()(i, j);
  return y.with_values(solve_spd(SymMatrix::from_upper(std::move(a)), y.values()));
}

Signal estimate_pnp(const Signal& y, const GraphFilter& w, const EstimatorConfig& cfg) {
  cfg.validate_pnp();
  require_size(w.size(), y.size(), "estimate_pnp");
  if (!w.invertible())
    throw SingularFilter("estimate_pnp: smallest eigenvalue " + std::to_string(w.min_eig()) +
                         " is not above 1e-8; use estimate_pnp_truncated");
  return estimate_pnp_truncated(y, w.spectrum(), cfg, w.size());
}

Signal estimate_pnp_truncated(const Signal& y, const SpectralDecomp& decomp,
                              const EstimatorConfig& cfg, std::size_t r) {
  cfg.validate_pnp();
  require_size(decomp.size(), y.size(), "estimate_pnp_truncated");
  if (r < 1 || r > decomp.size())
    throw InvalidArgument("estimate_pnp_truncated: rank " + std::to_string(r) + " outside [1, " +
                          std::to_string(decomp.size()) + "]");
  Vector gains(decomp.size(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    if (!(decomp.s[i] > 1e-10))
      throw SingularFilter("estimate_pnp_truncated: kept eigenvalue " + std::to_string(i) +
                           " is " + std::to_string(decomp.s[i]));
    gains[i] = pnp_gain(decomp.s[i], cfg.alpha);
  }
  return y.with_values(decomp.apply_gains(gains, y.values()));
}

ModeReport mode_report(std::span<const double> s, std::span<const double> b,
                       const EstimatorConfig& cfg) {
  cfg.validate();
  if (s.size() != b.size()) throw InvalidArgument("mode_report: s and b differ in length");
  const std::size_t n = s.size();
  const double a = cfg.alpha;
  const double var = cfg.sigma_eta * cfg.sigma_eta;

  ModeReport r;
  r.s.assign(s.begin(), s.end());
  r.b.assign(b.begin(), b.end());
  for (Vector* v : {&r.mse_L, &r.mse_P, &r.bias2_L, &r.bias2_P, &r.var_L, &r.var_P})
    v->assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const double si = s[i];
    const double shrink = a * (1.0 - si) * b[i];
    const double den_L = 1.0 + a - a * si;
    const double den_P = a + (1.0 - a) * si;
    r.bias2_L[i] = shrink * shrink / (den_L * den_L);
    r.var_L[i] = var / (den_L * den_L);
    r.bias2_P[i] = shrink * shrink / (den_P * den_P);
    r.var_P[i] = var * si * si / (den_P * den_P);
    r.mse_L[i] = (shrink * shrink + var) / (den_L * den_L);
    r.mse_P[i] = (shrink * shrink + var * si * si) / (den_P * den_P);

    r.total_mse_L += r.mse_L[i];
    r.total_mse_P += r.mse_P[i];
    r.total_bias2_L += r.bias2_L[i];
    r.total_bias2_P += r.bias2_P[i];
    r.total_var_L += r.var_L[i];
    r.total_var_P += r.var_P[i];
  }
  return r;
}

ModeReport mode_analysis(const Signal& x, const GraphFilter& w, const EstimatorConfig& cfg) {
  require_size(w.size(), x.size(), "mode_analysis");
  const Vector b = w.spectrum().project(x.values());
  return mode_report(w.spectrum().s, b, cfg);
}

GainCurves eigen_gain_curves(std::span<const double> s, const EstimatorConfig& cfg) {
  cfg.validate();
  GainCurves g{Vector(s.size()), Vector(s.size())};
  for (std::size_t i = 0; i < s.size(); ++i) {
    g.laplacian[i] = laplacian_gain(s[i], cfg.alpha);
    g.pnp[i] = pnp_gain(s[i], cfg.alpha);
  }
  return g;
}

GainCurves eigen_gain_curves(const SpectralDecomp& decomp, const EstimatorConfig& cfg) {
  return eigen_gain_curves(decomp.s, cfg);
}

}  // namespace pnpgl
