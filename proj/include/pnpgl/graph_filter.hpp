#pragma once

// Symmetric smoothing filters: non-local patch kernel, symmetric
// Sinkhorn-Knopp balancing and the quadratic forms built from W.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "pnpgl/kernels.hpp"
#include "pnpgl/matrix.hpp"
#include "pnpgl/signals.hpp"
#include "pnpgl/spectral.hpp"

namespace pnpgl {

struct KernelConfig {
  double h = 0.1;              // photometric bandwidth, same units as samples
  std::size_t patch_size = 5;  // odd
  // Largest allowed |i - j| (1D) or max(|dr|, |dc|) (2D). Empty means dense.
  std::optional<std::size_t> search_radius;
  // Width of the optional exp(-dist^2 / (2 sigma^2)) spatial factor.
  std::optional<double> spatial_sigma;

  void validate() const;

  static KernelConfig defaults_1d() { return {}; }
  static KernelConfig defaults_image() { return {0.6, 5, std::nullopt, 4.0}; }
};

enum class Provenance { oracle, pre_filtered, synthetic };

std::string_view to_string(Provenance p);

// Symmetric doubly stochastic W with eigenvalues in [-1e-8, 1 + 1e-8]. The
// eigendecomposition is computed once at construction and W never changes
// afterwards.
class GraphFilter {
 public:
  GraphFilter(SymMatrix w, Provenance provenance);

  std::size_t size() const noexcept { return w_.size(); }
  const SymMatrix& matrix() const noexcept { return w_; }
  const SpectralDecomp& spectrum() const noexcept { return spectrum_; }
  Provenance provenance() const noexcept { return provenance_; }
  double min_eig() const noexcept { return spectrum_.min_eigenvalue(); }

  // True when the smallest eigenvalue exceeds `tol`.
  bool invertible(double tol = kInvertibleTol) const noexcept { return min_eig() > tol; }

  Vector apply(std::span<const double> x) const;

  static constexpr double kInvertibleTol = 1e-8;

 private:
  SymMatrix w_;
  SpectralDecomp spectrum_;
  Provenance provenance_;
};

// K(i,j) = exp(-||p_i - p_j||^2 / (2 h^2)) over patches, times the spatial
// factor when configured, zero outside the search radius.
SymMatrix build_kernel(const Signal& x, const KernelConfig& cfg,
                       kernels::Exec exec = kernels::Exec::parallel);

struct SinkhornScaling {
  Vector d;  // W = diag(d) K diag(d)
  int iterations = 0;
  double max_deviation = 0.0;  // max |row sum - 1| at exit
};

inline constexpr double kSinkhornTol = 1e-10;
inline constexpr int kSinkhornMaxIterations = 10000;

// Symmetric balancing with one scaling vector, d <- sqrt(d / (K d)).
SinkhornScaling sinkhorn_scaling(const SymMatrix& k);
GraphFilter sinkhorn(const SymMatrix& k, Provenance provenance = Provenance::synthetic);

GraphFilter build_filter(const Signal& x, const KernelConfig& cfg, Provenance provenance);

// Random well-conditioned filter from a Gaussian kernel on `distinct` random
// points in the unit square; the remaining n - distinct points repeat earlier
// ones, which makes W exactly rank `distinct`.
GraphFilter make_synthetic_filter(std::size_t n, std::uint64_t seed, std::size_t distinct = 0,
                                  double bandwidth = 0.25);

// x^T (I - W) x
double laplacian_quadform(const GraphFilter& w, std::span<const double> x);
// (1 / (2 sigma^2)) x^T (W^{-1} - I) x. Throws SingularFilter when W is not
// invertible; use the rank-constrained estimator in that case.
double pnp_quadform(const GraphFilter& w, std::span<const double> x, double sigma);
// (1/2) x^T (x - W x)
double red_quadform(const GraphFilter& w, std::span<const double> x);

}  // namespace pnpgl
