#pragma once

// Desk-scale experiment drivers. Each is a pure function of its spec (seed
// included) and returns a table whose row order follows the grid order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnpgl/equilibrium.hpp"
#include "pnpgl/estimators.hpp"
#include "pnpgl/graph_filter.hpp"
#include "pnpgl/table.hpp"

namespace pnpgl {

struct ExperimentSpec {
  std::string name;  // rho-sweep, projection, eigvals, bias-var, prefilter, multi-prior, inpaint
  std::size_t n = 256;
  std::uint64_t seed = 1;
  KernelConfig kernel = KernelConfig::defaults_1d();
  EstimatorConfig estimator;

  Vector alpha_grid;      // rho-sweep
  Vector sigma_eps_grid;  // prefilter
  Vector filter_h;        // multi-prior bandwidths, one filter each
  double ce_alpha = 0.005;
  double mu0 = 1.0;

  // inpaint
  std::optional<std::filesystem::path> image;  // empty: bundled image
  std::size_t image_size = 32;                 // centre crop
  Vector rates;
  Vector param_grid;  // lambda / rho candidates per cell
  KernelConfig image_kernel = KernelConfig::defaults_image();

  void validate() const;
  static ExperimentSpec defaults(const std::string& name);
};

const std::vector<std::string>& experiment_names();

// count points log-spaced over [lo, hi].
Vector log_grid(double lo, double hi, std::size_t count);

Table run_rho_sweep(const ExperimentSpec& spec);
Table run_projection(const ExperimentSpec& spec);
Table run_eigvals(const ExperimentSpec& spec);
Table run_bias_var(const ExperimentSpec& spec);
Table run_prefilter_sensitivity(const ExperimentSpec& spec);
// When combined_out is given it receives the report of the combined solve.
Table run_multi_prior(const ExperimentSpec& spec, CEReport* combined_out = nullptr);
Table run_inpaint(const ExperimentSpec& spec);

Table run_experiment(const ExperimentSpec& spec);

// Columns: i, s, b, mse_L, mse_P, bias2_L, bias2_P, var_L, var_P.
Table mode_report_table(const ModeReport& r);

// Columns: agent (data, prior1 .. priork, consensus), residual.
Table ce_report_table(const CEReport& r);

// Ground truth for inpaint: the image (bundled by default) centre-cropped to
// image_size x image_size.
Signal load_inpaint_image(const ExperimentSpec& spec);
std::filesystem::path bundled_image_path();

}  // namespace pnpgl
