#pragma once

// Discrete adjoint gradients for functionals of forward difference sequences.
//
// Adjoining the constraints u[n+1] - u[n] - delta_n = 0 with multipliers
// lambda[n] and the initial condition with mu, then summing by parts, leaves
// only parameter partials once the multipliers satisfy the backward recursion
//
//   lambda[N-1] = 0
//   lambda[n]   = lambda[n+1] + lambda[n+1]^T (d delta_{n+1}/du) - dj_{n+1}/du
//
// and mu absorbs every term multiplying du[0]/dpsi. The gradient is then
//
//   dJ/dpsi = [dj_0/du - lambda[0]^T (d delta_0/du) - lambda[0]]^T dupsilon/dpsi
//           + sum_n dj_n/dpsi - lambda[n]^T (d delta_n/dpsi).
//
// The adjoint sequence never touches a parameter Jacobian, so its cost is
// shared by all K gradient components.

#include "seqadj/core_model.hpp"

#include <string>
#include <vector>

namespace seqadj {

struct AdjointSequence {
  std::vector<Vector> lambda;  // lambda[0..N-1]

  const Vector& operator[](Index n) const { return lambda[static_cast<std::size_t>(n)]; }
  Index size() const { return static_cast<Index>(lambda.size()); }
};

inline AdjointSequence solve_adjoint(const DifferenceSystem& system,
                                     const SummandFunctional& functional,
                                     const Trajectory& traj, const Vector& psi,
                                     WorkCount* work = nullptr) {
  detail::check_system_dims(system, psi);
  detail::check_trajectory(system, traj);
  const Index m = system.state_dim();
  const Index steps = system.horizon();

  AdjointSequence out;
  out.lambda.assign(static_cast<std::size_t>(steps), Vector());
  out.lambda[static_cast<std::size_t>(steps - 1)] = Vector::Zero(m);

  for (Index n = steps - 2; n >= 0; --n) {
    const Vector& next = out[n + 1];
    const Vector& u = traj[n + 1];
    const Vector vjp = system.vjp_state(n + 1, u, psi, next);
    const Vector gs = functional.grad_state(n + 1, u, psi);
    require_size(vjp.size(), m, "vjp_state");
    require_size(gs.size(), m, "grad_state");
    Vector lam = next + vjp;
    lam -= gs;
    if (!lam.allFinite()) {
      throw NumericalError("non-finite adjoint at index " + std::to_string(n),
                           static_cast<long>(n));
    }
    out.lambda[static_cast<std::size_t>(n)] = std::move(lam);
  }
  if (work) {
    work->state_vjps += steps - 1;
    work->scalar_units += (steps - 1) * m;
  }
  return out;
}

/// Combines the adjoint sequence with parameter partials. The multiplier mu is
/// eliminated analytically; only the boundary bracket at n = 0 is formed.
inline GradientReport assemble_gradient(const DifferenceSystem& system,
                                        const SummandFunctional& functional,
                                        const Trajectory& traj,
                                        const AdjointSequence& adjoints, const Vector& psi,
                                        WorkCount* work = nullptr) {
  detail::check_system_dims(system, psi);
  detail::check_trajectory(system, traj);
  const Index m = system.state_dim();
  const Index k = system.param_dim();
  const Index steps = system.horizon();
  if (adjoints.size() != steps)
    throw DimensionError("adjoint sequence length does not match horizon");

  GradientReport report;
  report.method = GradientMethod::adjoint;

  const Vector& lam0 = adjoints[0];
  require_size(lam0.size(), m, "lambda[0]");
  Vector bracket = functional.grad_state(0, traj[0], psi);
  require_size(bracket.size(), m, "grad_state");
  bracket -= system.vjp_state(0, traj[0], psi, lam0);
  bracket -= lam0;
  const Matrix ijac = system.initial_jac(psi);
  if (ijac.rows() != m || ijac.cols() != k) throw DimensionError("initial_jac must be M x K");
  Vector grad = ijac.transpose() * bracket;

  for (Index n = 0; n < steps; ++n) {
    const Vector gp = functional.grad_param(n, traj[n], psi);
    const Vector pv = system.vjp_param(n, traj[n], psi, adjoints[n]);
    require_size(gp.size(), k, "grad_param");
    require_size(pv.size(), k, "vjp_param");
    grad += gp;
    grad -= pv;
  }
  if (!grad.allFinite()) throw NumericalError("non-finite adjoint gradient");

  report.gradient = std::move(grad);
  report.value = evaluate_functional(functional, traj, psi);
  report.work.state_vjps = 1;
  report.work.param_vjps = steps;
  report.work.scalar_units = m + steps * k;
  if (work) *work += report.work;
  return report;
}

/// forward_solve -> solve_adjoint -> assemble_gradient.
inline GradientReport gradient_adjoint(const DifferenceSystem& system,
                                       const SummandFunctional& functional,
                                       const Vector& psi) {
  WorkCount work;
  const Trajectory traj = forward_solve(system, psi, &work);
  const AdjointSequence adj = solve_adjoint(system, functional, traj, psi, &work);
  GradientReport report = assemble_gradient(system, functional, traj, adj, psi);
  report.work += work;
  return report;
}

namespace detail {

/// j_n = delta^T Delta_n, which telescopes to delta^T (u[N] - upsilon).
class TelescopingFunctional final : public SummandFunctional {
 public:
  TelescopingFunctional(const DifferenceSystem& system, const Vector& direction)
      : system_(system), direction_(direction) {}

  double j(Index n, const Vector& u, const Vector& psi) const override {
    return direction_.dot(system_.delta(n, u, psi));
  }
  Vector grad_state(Index n, const Vector& u, const Vector& psi) const override {
    return system_.vjp_state(n, u, psi, direction_);
  }
  Vector grad_param(Index n, const Vector& u, const Vector& psi) const override {
    return system_.vjp_param(n, u, psi, direction_);
  }

 private:
  const DifferenceSystem& system_;
  const Vector& direction_;
};

}  // namespace detail

/// delta^T (du[N]/dpsi) without forming any sensitivity: the adjoint gradient of
/// the telescoping functional plus delta^T dupsilon/dpsi.
inline Vector vjp_final_state(const DifferenceSystem& system, const Vector& psi,
                              const Vector& direction) {
  detail::check_system_dims(system, psi);
  require_size(direction.size(), system.state_dim(), "direction");
  const detail::TelescopingFunctional functional(system, direction);
  GradientReport report = gradient_adjoint(system, functional, psi);
  report.gradient.noalias() += system.initial_jac(psi).transpose() * direction;
  return report.gradient;
}

}  // namespace seqadj
