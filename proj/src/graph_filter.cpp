#include "pnpgl/graph_filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnpgl/error.hpp"
#include "pnpgl/rng.hpp"

namespace pnpgl {

void KernelConfig::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("KernelConfig: h must be positive");
  if (patch_size % 2 == 0) throw InvalidArgument("KernelConfig: patch size must be odd");
  if (search_radius && *search_radius < 1)
    throw InvalidArgument("KernelConfig: search radius must be at least 1");
  if (spatial_sigma && !(*spatial_sigma > 0.0))
    throw InvalidArgument("KernelConfig: spatial sigma must be positive");
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::oracle:
      return "oracle";
    case Provenance::pre_filtered:
      return "pre-filtered";
    case Provenance::synthetic:
      return "synthetic";
  }
  return "unknown";
}

GraphFilter::GraphFilter(SymMatrix w, Provenance provenance)
    : w_(std::move(w)), provenance_(provenance) {
  const std::size_t n = w_.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (double v : w_.matrix().row(i)) {
      if (v < 0.0) throw NumericalError("doubly-stochastic", "GraphFilter: negative entry in W");
      row += v;
    }
    // Exact symmetry makes the column sums equal to the row sums.
    if (std::abs(row - 1.0) > 1e-8)
      throw NumericalError("doubly-stochastic", "GraphFilter: row " + std::to_string(i) +
                                                    " sums to " + std::to_string(row));
  }
  spectrum_ = eig_sym(w_);
  if (n > 0 && (spectrum_.min_eigenvalue() < -1e-8 || spectrum_.max_eigenvalue() > 1.0 + 1e-8))
    throw NumericalError("filter-spectrum",
                         "GraphFilter: eigenvalues span [" +
                             std::to_string(spectrum_.min_eigenvalue()) + ", " +
                             std::to_string(spectrum_.max_eigenvalue()) +
                             "], outside [-1e-8, 1 + 1e-8]");
}

Vector GraphFilter::apply(std::span<const double> x) const {
  return kernels::matvec(w_.matrix(), x);
}

SymMatrix build_kernel(const Signal& x, const KernelConfig& cfg, kernels::Exec exec) {
  cfg.validate();
  const std::size_t n = x.size();
  const Matrix patches = patch_matrix(x, cfg.patch_size);
  const std::size_t cols = x.shape().cols;
  const bool two_d = x.shape().two_d;
  const double inv_two_h2 = 1.0 / (2.0 * cfg.h * cfg.h);
  const double inv_two_s2 =
      cfg.spatial_sigma ? 1.0 / (2.0 * *cfg.spatial_sigma * *cfg.spatial_sigma) : 0.0;

  Matrix k(n, n);
  kernels::for_each_index(
      n,
      [&](std::size_t i) {
        const auto ri = static_cast<double>(two_d ? i / cols : 0);
        const auto ci = static_cast<double>(two_d ? i % cols : i);
        auto pi = patches.row(i);
        for (std::size_t j = i; j < n; ++j) {
          const double dr = static_cast<double>(two_d ? j / cols : 0) - ri;
          const double dc = static_cast<double>(two_d ? j % cols : j) - ci;
          if (cfg.search_radius &&
              std::max(std::abs(dr), std::abs(dc)) > static_cast<double>(*cfg.search_radius))
            continue;
          auto pj = patches.row(j);
          double d2 = 0.0;
          for (std::size_t t = 0; t < pi.size(); ++t) d2 += (pi[t] - pj[t]) * (pi[t] - pj[t]);
          double v = std::exp(-d2 * inv_two_h2);
          if (cfg.spatial_sigma) v *= std::exp(-(dr * dr + dc * dc) * inv_two_s2);
          k(i, j) = v;
        }
      },
      exec);
  return SymMatrix::from_upper(std::move(k));
}

SinkhornScaling sinkhorn_scaling(const SymMatrix& k) {
  const std::size_t n = k.size();
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (double v : k.matrix().row(i)) {
      if (v < 0.0) throw InvalidArgument("sinkhorn: kernel has a negative entry");
      row += v;
    }
    if (row == 0.0) throw InvalidArgument("sinkhorn: row " + std::to_string(i) + " is zero");
  }

  SinkhornScaling out{Vector(n, 1.0), 0, 0.0};
  for (;;) {
    const Vector kd = kernels::matvec(k.matrix(), out.d);
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(out.d[i] * kd[i] - 1.0));
    out.max_deviation = dev;
    if (dev < kSinkhornTol) return out;
    if (out.iterations >= kSinkhornMaxIterations)
      throw NumericalError("sinkhorn-convergence",
                           "sinkhorn: row sums still off by " + std::to_string(dev) + " after " +
                               std::to_string(kSinkhornMaxIterations) + " iterations");
    for (std::size_t i = 0; i < n; ++i) out.d[i] = std::sqrt(out.d[i] / kd[i]);
    ++out.iterations;
  }
}

GraphFilter sinkhorn(const SymMatrix& k, Provenance provenance) {
  const SinkhornScaling sc = sinkhorn_scaling(k);
  const std::size_t n = k.size();
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) w(i, j) = sc.d[i] * k(i, j) * sc.d[j];
  return GraphFilter(SymMatrix::from_upper(std::move(w)), provenance);
}

GraphFilter build_filter(const Signal& x, const KernelConfig& cfg, Provenance provenance) {
  return sinkhorn(build_kernel(x, cfg), provenance);
}

GraphFilter make_synthetic_filter(std::size_t n, std::uint64_t seed, std::size_t distinct,
                                  double bandwidth) {
  if (n == 0) throw InvalidArgument("make_synthetic_filter: n must be positive");
  if (distinct == 0) distinct = n;
  if (distinct > n) throw InvalidArgument("make_synthetic_filter: distinct exceeds n");
  CounterRng rng(seed);
  std::vector<std::pair<double, double>> pts(n);
  for (std::size_t i = 0; i < distinct; ++i) pts[i] = {rng.uniform(), rng.uniform()};
  for (std::size_t i = distinct; i < n; ++i) pts[i] = pts[i % distinct];

  Matrix k(n, n);
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double dx = pts[i].first - pts[j].first;
      const double dy = pts[i].second - pts[j].second;
      k(i, j) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  return sinkhorn(SymMatrix::from_upper(std::move(k)), Provenance::synthetic);
}

namespace {
void require_size(const GraphFilter& w, std::size_t n, const char* op) {
  if (w.size() != n)
    throw InvalidArgument(std::string(op) + ": filter is " + std::to_string(w.size()) +
                          "x" + std::to_string(w.size()) + ", signal has " + std::to_string(n) +
                          " samples");
}
}  // namespace

double laplacian_quadform(const GraphFilter& w, std::span<const double> x) {
  require_size(w, x.size(), "laplacian_quadform");
  const Vector diff = subtract(x, w.apply(x));
  return dot(x, diff);
}

double pnp_quadform(const GraphFilter& w, std::span<const double> x, double sigma) {
  require_size(w, x.size(), "pnp_quadform");
  if (!(sigma > 0.0)) throw InvalidArgument("pnp_quadform: sigma must be positive");
  if (!w.invertible())
    throw SingularFilter("pnp_quadform: smallest eigenvalue " + std::to_string(w.min_eig()) +
                         " is not above 1e-8; use the rank-constrained estimator");
  const Vector winv_x = solve_spd(w.matrix(), x);
  return (dot(x, winv_x) - dot(x, x)) / (2.0 * sigma * sigma);
}

double red_quadform(const GraphFilter& w, std::span<const double> x) {
  require_size(w, x.size(), "red_quadform");
  const Vector diff = subtract(x, w.apply(x));
  return 0.5 * dot(x, diff);
}

}  // namespace pnpgl
