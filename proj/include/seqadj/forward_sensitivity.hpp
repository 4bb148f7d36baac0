#pragma once

// Forward propagation of state sensitivities eta[n] = du[n]/dpsi.
//
// Differentiating u[n+1] = u[n] + delta_n(u[n], psi) gives the exact recursion
//   eta[n+1] = eta[n] + d delta_n/d psi + (d delta_n/d u) eta[n],
// which costs one M x M by M x K product per step.

#include "seqadj/core_model.hpp"

#include <string>
#include <vector>

namespace seqadj {

struct SensitivitySequence {
  std::vector<Matrix> eta;  // eta[0..N], each M x K

  const Matrix& operator[](Index n) const { return eta[static_cast<std::size_t>(n)]; }
  const Matrix& final_sensitivity() const { return eta.back(); }
};

inline SensitivitySequence propagate_sensitivities(const DifferenceSystem& system,
                                                   const Vector& psi,
                                                   const Trajectory& traj,
                                                   WorkCount* work = nullptr) {
  detail::check_system_dims(system, psi);
  detail::check_trajectory(system, traj);
  const Index m = system.state_dim();
  const Index k = system.param_dim();
  const Index steps = system.horizon();

  SensitivitySequence out;
  out.eta.reserve(static_cast<std::size_t>(steps + 1));
  Matrix eta0 = system.initial_jac(psi);
  if (eta0.rows() != m || eta0.cols() != k)
    throw DimensionError("initial_jac must be M x K");
  out.eta.push_back(std::move(eta0));

  for (Index n = 0; n < steps; ++n) {
    const Matrix& eta = out.eta.back();
    const Matrix ju = system.jac_state(n, traj[n], psi);
    const Matrix jp = system.jac_param(n, traj[n], psi);
    if (ju.rows() != m || ju.cols() != m) throw DimensionError("jac_state must be M x M");
    if (jp.rows() != m || jp.cols() != k) throw DimensionError("jac_param must be M x K");
    Matrix next = eta + jp;
    next.noalias() += ju * eta;
    if (!next.allFinite()) {
      throw NumericalError("non-finite sensitivity at step " + std::to_string(n + 1),
                           static_cast<long>(n + 1));
    }
    out.eta.push_back(std::move(next));
  }
  if (work) {
    work->state_jvp_or_jac_uses += steps;
    work->param_jacobian_uses += steps;
    work->scalar_units += steps * m * k;
  }
  return out;
}

/// dJ/dpsi = sum_n dj_n/dpsi + eta[n]^T dj_n/du[n].
inline GradientReport gradient_forward(const DifferenceSystem& system,
                                       const SummandFunctional& functional,
                                       const Vector& psi) {
  GradientReport report;
  report.method = GradientMethod::forward;
  const Trajectory traj = forward_solve(system, psi, &report.work);
  const SensitivitySequence sens = propagate_sensitivities(system, psi, traj, &report.work);
  report.value = evaluate_functional(functional, traj, psi);

  const Index k = system.param_dim();
  Vector grad = Vector::Zero(k);
  for (Index n = 0; n < traj.horizon(); ++n) {
    const Vector gp = functional.grad_param(n, traj[n], psi);
    const Vector gs = functional.grad_state(n, traj[n], psi);
    require_size(gp.size(), k, "grad_param");
    require_size(gs.size(), system.state_dim(), "grad_state");
    grad += gp;
    grad.noalias() += sens[n].transpose() * gs;
  }
  if (!grad.allFinite()) throw NumericalError("non-finite forward gradient");
  report.gradient = std::move(grad);
  return report;
}

}  // namespace seqadj
