#include "pnpgl/pnp_admm.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "pnpgl/error.hpp"

namespace pnpgl {

void AdmmProblem::validate() const {
  if (!filter) throw InvalidArgument("AdmmProblem: no graph filter");
  if (!(rho > 0.0)) throw InvalidArgument("AdmmProblem: rho must be positive");
  if (!(tol > 0.0)) throw InvalidArgument("AdmmProblem: tol must be positive");
  if (max_iters < 1) throw InvalidArgument("AdmmProblem: max_iters must be at least 1");
  if (forward.output_size() != y.size())
    throw InvalidArgument("AdmmProblem: observation length does not match the forward model");
  if (forward.input_size() != filter->size())
    throw InvalidArgument("AdmmProblem: filter size does not match the forward model");
}

namespace {

// Solves (A^T A + rho I) x = A^T y + rho z. Diagonal for identity and masks,
// one Cholesky factorisation for dense operators.
class ProxSolver {
 public:
  explicit ProxSolver(const AdmmProblem& pb)
      : pb_(pb), aty_(pb.forward.apply_adjoint(pb.y.values())) {
    if (pb.forward.kind() == ForwardModel::Kind::dense) {
      Matrix m = pb.forward.normal_matrix().matrix();
      for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += pb.rho;
      chol_.emplace(SymMatrix(std::move(m)));
    }
  }

  Vector solve(std::span<const double> z) const {
    const std::size_t n = aty_.size();
    if (z.size() != n) throw InvalidArgument("x_update: state size mismatch");
    Vector rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = aty_[i] + pb_.rho * z[i];
    switch (pb_.forward.kind()) {
      case ForwardModel::Kind::identity:
        for (double& v : rhs) v /= 1.0 + pb_.rho;
        return rhs;
      case ForwardModel::Kind::sampling_mask: {
        const Vector& m = pb_.forward.mask();
        for (std::size_t i = 0; i < n; ++i) rhs[i] /= m[i] + pb_.rho;
        return rhs;
      }
      case ForwardModel::Kind::dense:
        return chol_->solve(rhs);
    }
    return rhs;
  }

 private:
  const AdmmProblem& pb_;
  Vector aty_;
  std::optional<Cholesky> chol_;
};

}  // namespace

AdmmState initial_state(const AdmmProblem& pb) {
  pb.validate();
  AdmmState st;
  if (pb.forward.kind() == ForwardModel::Kind::sampling_mask)
    st.x = shepard_fill(pb.y, pb.forward).values();
  else
    st.x = pb.forward.apply_adjoint(pb.y.values());
  st.v = st.x;
  st.u_bar.assign(st.x.size(), 0.0);
  return st;
}

Vector x_update(const AdmmState& st, const AdmmProblem& pb) {
  pb.validate();
  return ProxSolver(pb).solve(subtract(st.v, st.u_bar));
}

Vector v_update(const AdmmState& st, const AdmmProblem& pb) {
  if (!pb.filter) throw InvalidArgument("v_update: no graph filter");
  return pb.filter->apply(add(st.x, st.u_bar));
}

Vector dual_update(const AdmmState& st) {
  Vector u = st.u_bar;
  axpy(1.0, subtract(st.x, st.v), u);
  return u;
}

AdmmState run(const AdmmProblem& pb) {
  AdmmState st = initial_state(pb);
  const ProxSolver prox(pb);
  while (st.k < pb.max_iters) {
    const Vector x_prev = st.x;
    st.x = prox.solve(subtract(st.v, st.u_bar));
    st.v = v_update(st, pb);
    st.u_bar = dual_update(st);
    ++st.k;
    st.primal_residual.push_back(distance(st.x, st.v));
    st.change.push_back(distance(st.x, x_prev) / std::max(1.0, norm2(st.x)));
    // x_1 can equal x_0 when v_0 is already the data-agent output, so the
    // primal residual has to vanish as well.
    if (st.change.back() < pb.tol && st.primal_residual.back() < pb.tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

CeResiduals ce_residuals(const AdmmState& st, const AdmmProblem& pb) {
  pb.validate();
  const ProxSolver prox(pb);
  // u_hat = -u_bar, so x + u_hat = x - u_bar and x - u_hat = x + u_bar.
  const Vector f = prox.solve(subtract(st.x, st.u_bar));
  const Vector g = pb.filter->apply(add(st.x, st.u_bar));
  return {distance(f, st.x), distance(g, st.x)};
}

}  // namespace pnpgl
