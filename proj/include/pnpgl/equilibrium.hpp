#pragma once

// Consensus-equilibrium (CE) analysis of PnP with graph-filter agents:
// single-prior residuals, the four equivalent objectives, general linear
// inverse problems in direct and synthesis form, multiple priors and
// combination weights.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "pnpgl/graph_filter.hpp"
#include "pnpgl/signals.hpp"

namespace pnpgl {

// || ((1 - alpha) I + alpha W^{-1}) xhat - y ||, evaluated in the eigenbasis.
double ce_residual_single(const Signal& xhat, const Signal& y, const GraphFilter& w,
                          double alpha);

// Objectives whose minimisers all satisfy ((1 - alpha) I + alpha W^{-1}) x = y:
//   phi  = 1/2 ||x - y||^2 + alpha/2 x^T (W^{-1} - I) x
//   psi1 = 1/2 ||x - W y||^2 - (1 - alpha)/2 x^T (I - W) x
//   psi2 = 1/2 (x - y)^T W (x - y) + alpha/2 x^T (I - W) x
//   psi3 = 1/2 || x - [(1 - alpha) I + alpha W^{-1}]^{-1} y ||^2
enum class PsiVariant { phi, psi1, psi2, psi3 };

// Each variant is minimised along its own route: phi in the eigenbasis of W,
// psi1 and psi2 from their (W^{-1}-free) stationarity systems, psi3 by
// materialising W^{-1}. alpha must lie in [0, 1].
Signal minimize_psi(PsiVariant variant, const Signal& y, const GraphFilter& w, double alpha);

double psi_objective(PsiVariant variant, std::span<const double> x, const Signal& y,
                     const GraphFilter& w, double alpha);

// 1/2 (x - y)^T (I + beta (I - W)) (x - y) + alpha/2 x^T (I - W) x
double kheradmand_milanfar_objective(std::span<const double> x, const Signal& y,
                                     const GraphFilter& w, double alpha, double beta);

// Solves (A^T A + alpha (W^{-1} - I)) x = A^T y in the eigenbasis of W after
// symmetric diagonal equilibration. Modes with eigenvalue <= kNullModeTol are
// pinned to zero, which is the s -> 0 limit of the solution.
inline constexpr double kNullModeTol = 1e-12;

class LinearCeSolver {
 public:
  LinearCeSolver(const ForwardModel& a, const Signal& y, std::shared_ptr<const GraphFilter> w);
  Signal solve(double alpha) const;

 private:
  std::shared_ptr<const GraphFilter> w_;
  Signal y_shape_;
  std::vector<std::size_t> active_;
  Matrix gram_;  // (A U_active)^T (A U_active)
  Vector rhs_;   // U_active^T A^T y
};

Signal solve_general_linear_ce(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                               double alpha);

// || (A^T A + alpha (W^{-1} - I)) xhat - A^T y ||. Requires invertible W.
double general_ce_residual(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                           const Signal& xhat, double alpha);

// x = W^{1/2} argmin_z 1/2 ||A W^{1/2} z - y||^2 + alpha/2 z^T (I - W) z,
// with W^{1/2} from sqrt_psd and the inner problem solved in pixel space.
Signal solve_synthesis_form(const ForwardModel& a, const Signal& y, const GraphFilter& w,
                            double alpha);

// Denoising data agent F0(v) = (y + alpha v) / (1 + alpha) with weight mu0,
// and graph-filter agents W_i with weights mu_i summing to one.
struct AgentSet {
  double alpha = 0.005;
  double mu0 = 1.0;
  std::vector<std::shared_ptr<const GraphFilter>> priors;
  Vector mu;

  void validate() const;
  static AgentSet uniform(double alpha, double mu0,
                          std::vector<std::shared_ptr<const GraphFilter>> priors);
};

struct CEReport {
  Signal xhat;
  std::vector<Vector> duals;      // u_0 .. u_k
  Vector agent_residuals;         // ||F_i(xhat + u_i) - xhat||, i = 0 .. k
  double consensus_residual = 0;  // ||mu0 u_0 + sum mu_i u_i||

  // agent_residuals followed by the consensus term.
  Vector residuals() const;
};

// xhat = (mu0 I + alpha (sum mu_i W_i^{-1} - I))^{-1} mu0 y
CEReport solve_multi_prior(const AgentSet& agents, const Signal& y);

// The same solve with only prior i at weight one.
CEReport solve_individual(const AgentSet& agents, const Signal& y, std::size_t i);

struct OptimalWeights {
  Vector mu;
  double ridge = 0.0;
  bool degenerate = false;  // every estimate was exact; weights are uniform
};

// mu* = S^{-1} 1 / (1^T S^{-1} 1) with S = Sigma + ridge I and
// Sigma_ij = (x - xhat_i)^T (x - xhat_j). A negative ridge selects the
// default 1e-10 * trace(Sigma) / k.
OptimalWeights optimal_weights(const Signal& x, const std::vector<Signal>& xhats,
                               double ridge = -1.0);

// sum_i mu_i xhat_i; the weights must sum to one within 1e-10.
Signal combine_weighted(const std::vector<Signal>& xhats, std::span<const double> mu);

}  // namespace pnpgl
