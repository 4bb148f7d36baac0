#pragma once

// The forward algorithm written as a forward difference system, so the generic
// adjoint engine can differentiate it:
//
//   u_n = alpha_n,  delta_n = omega_{n+1} o (Gamma_{n+1} alpha_n) - alpha_n,
//   j_n = 1^T delta_n,  J = 1^T (alpha_N - alpha_0).
//
// Then dL/dpsi = dJ/dpsi + 1^T dalpha_0/dpsi, and the generic adjoint satisfies
// 1 - lambda_n = kappa_n.

#include "seqadj/core_model.hpp"
#include "seqadj/discrete_adjoint.hpp"
#include "seqadj/hmm/algorithms.hpp"
#include "seqadj/hmm/model.hpp"

#include <memory>

namespace seqadj::hmm {

/// Borrows the model; the model must outlive the system.
class HmmDifferenceSystem final : public DifferenceSystem {
 public:
  explicit HmmDifferenceSystem(const HmmModel& model) : model_(model) {}

  Index state_dim() const override { return model_.num_states(); }
  Index param_dim() const override { return model_.param_dim(); }
  Index horizon() const override { return model_.num_transitions(); }

  Vector delta(Index n, const Vector& u, const Vector& psi) const override {
    return model_.omega(n + 1, psi).cwiseProduct(model_.gamma(n + 1, psi) * u) - u;
  }
  // d delta_i / d alpha_j = omega_i Gamma_ij - [i == j]
  Matrix jac_state(Index n, const Vector&, const Vector& psi) const override {
    Matrix out = model_.omega(n + 1, psi).asDiagonal() * model_.gamma(n + 1, psi);
    out.diagonal().array() -= 1.0;
    return out;
  }
  Matrix jac_param(Index n, const Vector& u, const Vector& psi) const override {
    return detail::step_param_jac(model_, n, psi, u);
  }
  Vector vjp_state(Index n, const Vector&, const Vector& psi, const Vector& v) const override {
    return model_.gamma(n + 1, psi).transpose() * model_.omega(n + 1, psi).cwiseProduct(v) - v;
  }
  Vector initial(const Vector& psi) const override {
    return model_.omega(0, psi).cwiseProduct(model_.rho(psi));
  }
  Matrix initial_jac(const Vector& psi) const override {
    return detail::initial_alpha_jac(model_, psi);
  }

 private:
  const HmmModel& model_;
};

/// j_n = 1^T delta_n.
class HmmSummand final : public SummandFunctional {
 public:
  explicit HmmSummand(const HmmDifferenceSystem& system) : system_(system) {}

  double j(Index n, const Vector& u, const Vector& psi) const override {
    return system_.delta(n, u, psi).sum();
  }
  Vector grad_state(Index n, const Vector& u, const Vector& psi) const override {
    return system_.vjp_state(n, u, psi, Vector::Ones(system_.state_dim()));
  }
  Vector grad_param(Index n, const Vector& u, const Vector& psi) const override {
    return system_.vjp_param(n, u, psi, Vector::Ones(system_.state_dim()));
  }

 private:
  const HmmDifferenceSystem& system_;
};

struct HmmBridge {
  std::unique_ptr<HmmDifferenceSystem> system;
  std::unique_ptr<HmmSummand> functional;
};

/// The returned objects borrow `model`.
inline HmmBridge as_difference_system(const HmmModel& model) {
  HmmBridge bridge;
  bridge.system = std::make_unique<HmmDifferenceSystem>(model);
  bridge.functional = std::make_unique<HmmSummand>(*bridge.system);
  return bridge;
}

/// Likelihood gradient through the generic adjoint engine:
/// dL/dpsi = dJ/dpsi + 1^T dalpha_0/dpsi. `value` is L.
inline GradientReport gradient_via_bridge(const HmmModel& model, const Vector& psi) {
  const HmmBridge bridge = as_difference_system(model);
  GradientReport report = gradient_adjoint(*bridge.system, *bridge.functional, psi);
  const Matrix init_jac = bridge.system->initial_jac(psi);
  report.gradient += init_jac.colwise().sum().transpose();
  report.value += bridge.system->initial(psi).sum();
  return report;
}

}  // namespace seqadj::hmm
