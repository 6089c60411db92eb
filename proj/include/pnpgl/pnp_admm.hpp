#pragma once

// Plug-and-play ADMM with a fixed graph filter as the denoiser:
//
//   x <- argmin_x 1/2 ||A x - y||^2 + rho/2 ||x - (v - u)||^2
//   v <- W (x + u)
//   u <- u + (x - v)
//
// u is the scaled dual. W is never re-estimated between iterations.

#include <cstddef>
#include <memory>

#include "pnpgl/graph_filter.hpp"
#include "pnpgl/signals.hpp"

namespace pnpgl {

struct AdmmProblem {
  ForwardModel forward;
  Signal y;  // observation, same length as the forward model output
  double rho = 0.2;
  std::shared_ptr<const GraphFilter> filter;
  int max_iters = 5000;
  double tol = 1e-8;  // on ||x_k - x_{k-1}|| / max(1, ||x_k||)

  void validate() const;
};

struct AdmmState {
  Vector x, v, u_bar;
  int k = 0;
  Vector primal_residual;  // ||x_k - v_k||
  Vector change;           // ||x_k - x_{k-1}|| / max(1, ||x_k||)
  bool converged = false;
};

// x0 = v0 = A^T y (Shepard fill of y for sampling masks), u0 = 0.
AdmmState initial_state(const AdmmProblem& pb);

Vector x_update(const AdmmState& st, const AdmmProblem& pb);
Vector v_update(const AdmmState& st, const AdmmProblem& pb);
// u + x - v
Vector dual_update(const AdmmState& st);

// Iterates until both the relative change of x and ||x - v|| drop below tol,
// or max_iters is reached. On non-convergence the state is returned with converged = false.
AdmmState run(const AdmmProblem& pb);

// Residuals of the two consensus-equilibrium equations at the final state,
// with u_hat = -u_bar:  ||F(x + u_hat) - x||  and  ||W (x - u_hat) - x||,
// where F is the x-update proximal map.
struct CeResiduals {
  double data_agent = 0.0;
  double prior_agent = 0.0;
};
CeResiduals ce_residuals(const AdmmState& st, const AdmmProblem& pb);

}  // namespace pnpgl
