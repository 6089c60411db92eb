#include "pnpgl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "pnpgl/equilibrium.hpp"
#include "pnpgl/error.hpp"
#include "pnpgl/rng.hpp"

namespace pnpgl {

namespace {

// Stream ids for derive_seed, fixed so tables stay reproducible.
enum Stream : std::uint64_t {
  kObservationNoise = 1,
  kPrefilterNoise = 2,
  kMaskBase = 100,
  kInpaintNoiseBase = 200,
};

Signal observe(const Signal& x, double sigma, std::uint64_t seed) {
  return add_noise(x, {sigma, derive_seed(seed, kObservationNoise)});
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"rho-sweep", "projection",  "eigvals",
                                                 "bias-var",  "prefilter",   "multi-prior",
                                                 "inpaint"};
  return names;
}

Vector log_grid(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0)
    throw InvalidArgument("log_grid: need 0 < lo <= hi and count > 0");
  if (count == 1) return {lo};
  Vector g(count);
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (std::size_t i = 0; i < count; ++i)
    g[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

ExperimentSpec ExperimentSpec::defaults(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.alpha_grid = log_grid(1e-3, 10.0, 41);
  s.sigma_eps_grid = {0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
  s.filter_h = {0.05, 0.1, 0.15, 0.2, 0.3};
  s.rates = {0.8, 0.6, 0.4, 0.2};
  s.param_grid = log_grid(1e-6, 10.0, 20);
  // A wider bandwidth keeps W informative (not near identity) across the
  // whole sigma_eps grid.
  if (name == "prefilter") s.kernel.h = 0.3;
  // Filters built from noisy y need a spatial factor to stay invertible.
  if (name == "multi-prior") s.kernel.spatial_sigma = 4.0;
  return s;
}

void ExperimentSpec::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw InvalidArgument("unknown experiment '" + name + "'");
  if (n < 16) throw InvalidArgument("experiment: n must be at least 16");
  kernel.validate();
  estimator.validate();
  auto non_empty = [](const Vector& v, const char* what) {
    if (v.empty()) throw InvalidArgument(std::string("experiment: empty ") + what);
  };
  if (name == "rho-sweep") non_empty(alpha_grid, "alpha grid");
  if (name == "prefilter") non_empty(sigma_eps_grid, "sigma_eps grid");
  if (name == "multi-prior") {
    non_empty(filter_h, "filter bandwidth list");
    if (!(ce_alpha > 0.0) || !(mu0 > 0.0))
      throw InvalidArgument("experiment: ce_alpha and mu0 must be positive");
  }
  if (name == "inpaint") {
    non_empty(rates, "rate list");
    non_empty(param_grid, "parameter grid");
    image_kernel.validate();
    for (double r : rates)
      if (!(r > 0.0 && r <= 1.0)) throw InvalidArgument("experiment: rates must be in (0, 1]");
    for (double p : param_grid)
      if (!(p > 0.0)) throw InvalidArgument("experiment: parameter grid must be positive");
  }
}

Table mode_report_table(const ModeReport& r) {
  Table t{{"i", "s", "b", "mse_L", "mse_P", "bias2_L", "bias2_P", "var_L", "var_P"}, {}};
  for (std::size_t i = 0; i < r.size(); ++i)
    t.add_row({static_cast<double>(i + 1), r.s[i], r.b[i], r.mse_L[i], r.mse_P[i], r.bias2_L[i],
               r.bias2_P[i], r.var_L[i], r.var_P[i]});
  return t;
}

Table run_rho_sweep(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  const GraphFilter w = build_filter(x, spec.kernel, Provenance::oracle);
  Table t{{"alpha", "mse_L", "mse_P"}, {}};
  for (double a : spec.alpha_grid) {
    const ModeReport r = mode_analysis(x, w, {a, spec.estimator.sigma_eta});
    t.add_row({a, r.total_mse_L, r.total_mse_P});
  }
  return t;
}

Table run_projection(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  const Signal y = observe(x, spec.estimator.sigma_eta, spec.seed);
  const GraphFilter w = build_filter(x, spec.kernel, Provenance::oracle);
  const Vector bx = w.spectrum().project(x.values());
  const Vector by = w.spectrum().project(y.values());
  Table t{{"i", "s", "proj_x", "proj_y"}, {}};
  for (std::size_t i = 0; i < bx.size(); ++i)
    t.add_row({static_cast<double>(i + 1), w.spectrum().s[i], std::abs(bx[i]), std::abs(by[i])});
  return t;
}

Table run_eigvals(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  const GraphFilter w = build_filter(x, spec.kernel, Provenance::oracle);
  const GainCurves g = eigen_gain_curves(w.spectrum(), spec.estimator);
  Table t{{"i", "s", "gain_L", "gain_P"}, {}};
  for (std::size_t i = 0; i < g.pnp.size(); ++i)
    t.add_row({static_cast<double>(i + 1), w.spectrum().s[i], g.laplacian[i], g.pnp[i]});
  return t;
}

Table run_bias_var(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  const GraphFilter w = build_filter(x, spec.kernel, Provenance::oracle);
  return mode_report_table(mode_analysis(x, w, spec.estimator));
}

Table run_prefilter_sensitivity(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  // One unit-variance realisation, scaled per grid point.
  const Signal unit = add_noise(x.with_values(Vector(x.size(), 0.0)),
                                {1.0, derive_seed(spec.seed, kPrefilterNoise)});
  Table t{{"sigma_eps", "mse_L", "mse_P"}, {}};
  for (double se : spec.sigma_eps_grid) {
    Vector pre = x.values();
    axpy(se, unit.values(), pre);
    const GraphFilter w =
        build_filter(x.with_values(std::move(pre)), spec.kernel, Provenance::pre_filtered);
    const ModeReport r = mode_analysis(x, w, spec.estimator);
    t.add_row({se, r.total_mse_L, r.total_mse_P});
  }
  return t;
}

Table run_multi_prior(const ExperimentSpec& spec, CEReport* combined_out) {
  spec.validate();
  const Signal x = make_signal_1d(spec.n, spec.seed);
  const Signal y = observe(x, spec.estimator.sigma_eta, spec.seed);

  std::vector<std::shared_ptr<const GraphFilter>> priors;
  for (double h : spec.filter_h) {
    KernelConfig k = spec.kernel;
    k.h = h;
    priors.push_back(std::make_shared<const GraphFilter>(build_filter(y, k, Provenance::pre_filtered)));
  }
  const AgentSet agents = AgentSet::uniform(spec.ce_alpha, spec.mu0, priors);

  Table t{{"estimate", "h", "psnr", "consensus_residual"}, {}};
  std::vector<Signal> individual;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const CEReport r = solve_individual(agents, y, i);
    t.add_row({"W" + std::to_string(i + 1), spec.filter_h[i], psnr(r.xhat, x),
               r.consensus_residual});
    individual.push_back(r.xhat);
  }
  const CEReport combined = solve_multi_prior(agents, y);
  t.add_row({std::string("combined"), std::numeric_limits<double>::quiet_NaN(),
             psnr(combined.xhat, x), combined.consensus_residual});
  if (combined_out != nullptr) *combined_out = combined;
  if (individual.size() >= 2) {
    const OptimalWeights mu = optimal_weights(x, individual);
    t.add_row({std::string("weighted-optimal"), std::numeric_limits<double>::quiet_NaN(),
               psnr(combine_weighted(individual, mu.mu), x),
               std::numeric_limits<double>::quiet_NaN()});
  }
  return t;
}

Table ce_report_table(const CEReport& r) {
  Table t{{"agent", "residual"}, {}};
  for (std::size_t i = 0; i < r.agent_residuals.size(); ++i)
    t.add_row({i == 0 ? std::string("data") : "prior" + std::to_string(i), r.agent_residuals[i]});
  t.add_row({std::string("consensus"), r.consensus_residual});
  return t;
}

std::filesystem::path bundled_image_path() {
  return std::filesystem::path(PNPGL_DATA_DIR) / "astronaut64.pgm";
}

Signal load_inpaint_image(const ExperimentSpec& spec) {
  const Signal full = read_pgm(spec.image.value_or(bundled_image_path()));
  const std::size_t rows = full.shape().rows;
  const std::size_t cols = full.shape().cols;
  const std::size_t size = spec.image_size;
  if (size < 8 || size > rows || size > cols)
    throw InvalidArgument("inpaint: crop size " + std::to_string(size) + " does not fit the " +
                          std::to_string(rows) + "x" + std::to_string(cols) + " image");
  const std::size_t r0 = (rows - size) / 2;
  const std::size_t c0 = (cols - size) / 2;
  Vector v;
  v.reserve(size * size);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) v.push_back(full[(r0 + r) * cols + c0 + c]);
  return Signal::grid(size, size, std::move(v));
}

namespace {

struct BestCell {
  double psnr = -std::numeric_limits<double>::infinity();
  double param = 0.0;
};

// (A^T A + lambda (I - W)) x = A^T y, best PSNR over the grid.
BestCell best_laplacian(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                        const Signal& truth, const Vector& grid) {
  const std::size_t n = w.size();
  const SymMatrix ata = a.normal_matrix();
  const Vector aty = a.apply_adjoint(y.values());
  BestCell best;
  for (double lambda : grid) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j)
        m(i, j) = ata(i, j) + lambda * ((i == j ? 1.0 : 0.0) - w.matrix()(i, j));
    const Signal xhat = y.with_values(solve_spd(SymMatrix::from_upper(std::move(m)), aty));
    const double p = psnr(xhat, truth);
    if (p > best.psnr) best = {p, lambda};
  }
  return best;
}

BestCell best_pnp(const ForwardModel& a, const Signal& y,
                  const std::shared_ptr<const GraphFilter>& w, const Signal& truth,
                  const Vector& grid) {
  const LinearCeSolver solver(a, y, w);
  BestCell best;
  for (double rho : grid) {
    const double p = psnr(solver.solve(rho), truth);
    if (p > best.psnr) best = {p, rho};
  }
  return best;
}

}  // namespace

Table run_inpaint(const ExperimentSpec& spec) {
  spec.validate();
  const Signal x = load_inpaint_image(spec);
  const std::size_t n = x.size();
  const auto oracle =
      std::make_shared<const GraphFilter>(build_filter(x, spec.image_kernel, Provenance::oracle));

  Table t{{"rate", "method", "filter", "psnr", "param"}, {}};
  for (std::size_t k = 0; k < spec.rates.size(); ++k) {
    const double rate = spec.rates[k];
    const ForwardModel mask = random_sampling_mask(n, rate, derive_seed(spec.seed, kMaskBase + k));
    const Signal noisy = add_noise(
        x, {spec.estimator.sigma_eta, derive_seed(spec.seed, kInpaintNoiseBase + k)});
    const Signal y = apply_forward(mask, noisy);
    const Signal pre = shepard_fill(y, mask);
    t.add_row({rate, std::string("shepard"), std::string("none"), psnr(pre, x),
               std::numeric_limits<double>::quiet_NaN()});

    const auto estimated = std::make_shared<const GraphFilter>(
        build_filter(pre, spec.image_kernel, Provenance::pre_filtered));
    for (const auto& [label, w] :
         {std::pair{std::string("oracle"), oracle}, std::pair{std::string("estimated"), estimated}}) {
      const BestCell lap = best_laplacian(mask, y, *w, x, spec.param_grid);
      t.add_row({rate, std::string("laplacian"), label, lap.psnr, lap.param});
      const BestCell pnp = best_pnp(mask, y, w, x, spec.param_grid);
      t.add_row({rate, std::string("pnp"), label, pnp.psnr, pnp.param});
    }
  }
  return t;
}

Table run_experiment(const ExperimentSpec& spec) {
  if (spec.name == "rho-sweep") return run_rho_sweep(spec);
  if (spec.name == "projection") return run_projection(spec);
  if (spec.name == "eigvals") return run_eigvals(spec);
  if (spec.name == "bias-var") return run_bias_var(spec);
  if (spec.name == "prefilter") return run_prefilter_sensitivity(spec);
  if (spec.name == "multi-prior") return run_multi_prior(spec);
  if (spec.name == "inpaint") return run_inpaint(spec);
  throw InvalidArgument("unknown experiment '" + spec.name + "'");
}

}  // namespace pnpgl
