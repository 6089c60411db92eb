#pragma once

// Closed-form graph-Laplacian and PnP estimators and their per-eigenmode
// MSE / bias / variance analysis.
//
//   Laplacian:  x_L = [(1 + a) I - a W]^{-1} y,      gain 1 / (1 + a - a s)
//   PnP:        x_P = [(1 - a) I + a W^{-1}]^{-1} y, gain s / ((1 - a) s + a)
//
// with a the regularization weight and s an eigenvalue of W.

#include <cstddef>
#include <span>

#include "pnpgl/graph_filter.hpp"
#include "pnpgl/signals.hpp"

namespace pnpgl {

struct EstimatorConfig {
  double alpha = 0.2;
  double sigma_eta = 0.05;

  // alpha > 0, sigma_eta >= 0.
  void validate() const;
  // As validate(), and additionally alpha <= 1.
  void validate_pnp() const;
};

double laplacian_gain(double s, double alpha);
double pnp_gain(double s, double alpha);

Signal estimate_laplacian(const Signal& y, const GraphFilter& w, const EstimatorConfig& cfg);

// Evaluated in the eigenbasis of W so W^{-1} is never formed. Requires
// min_eig(W) > 1e-8 and alpha in (0, 1].
Signal estimate_pnp(const Signal& y, const GraphFilter& w, const EstimatorConfig& cfg);

// PnP restricted to the r leading eigenvectors; components along the
// remaining eigenvectors are exactly zero.
Signal estimate_pnp_truncated(const Signal& y, const SpectralDecomp& decomp,
                              const EstimatorConfig& cfg, std::size_t r);

struct ModeReport {
  Vector s;
  Vector b;  // U^T x
  Vector mse_L, mse_P;
  Vector bias2_L, bias2_P;
  Vector var_L, var_P;

  double total_mse_L = 0.0, total_mse_P = 0.0;
  double total_bias2_L = 0.0, total_bias2_P = 0.0;
  double total_var_L = 0.0, total_var_P = 0.0;

  std::size_t size() const noexcept { return s.size(); }
};

// Per-mode quantities from eigenvalues s and projections b.
ModeReport mode_report(std::span<const double> s, std::span<const double> b,
                       const EstimatorConfig& cfg);
ModeReport mode_analysis(const Signal& x, const GraphFilter& w, const EstimatorConfig& cfg);

struct GainCurves {
  Vector laplacian;
  Vector pnp;
};

GainCurves eigen_gain_curves(std::span<const double> s, const EstimatorConfig& cfg);
GainCurves eigen_gain_curves(const SpectralDecomp& decomp, const EstimatorConfig& cfg);

}  // namespace pnpgl
