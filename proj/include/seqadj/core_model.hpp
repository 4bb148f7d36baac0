#pragma once

// Difference systems u[n+1] = u[n] + delta_n(u[n], psi), their scalar
// functionals J = sum_{n<N} j_n(u[n], psi), and the forward solve.

#include "seqadj/types.hpp"
#include "seqadj/work_count.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace seqadj {

/// Evaluation interface for the step function delta_n, its Jacobians and the
/// initial condition upsilon(psi).
///
/// Implementations must be pure and immutable after construction so a single
/// instance can be shared by concurrent solver calls. The vector-Jacobian
/// products default to contracting the materialized Jacobians; override them
/// when a cheaper route exists.
class DifferenceSystem {
 public:
  virtual ~DifferenceSystem() = default;

  virtual Index state_dim() const = 0;
  virtual Index param_dim() const = 0;
  /// Number of steps N; states run u[0]..u[N].
  virtual Index horizon() const = 0;

  virtual Vector delta(Index n, const Vector& u, const Vector& psi) const = 0;
  /// d delta_n / d u, M x M.
  virtual Matrix jac_state(Index n, const Vector& u, const Vector& psi) const = 0;
  /// d delta_n / d psi, M x K.
  virtual Matrix jac_param(Index n, const Vector& u, const Vector& psi) const = 0;

  virtual Vector initial(const Vector& psi) const = 0;
  /// d upsilon / d psi, M x K.
  virtual Matrix initial_jac(const Vector& psi) const = 0;

  /// v^T (d delta_n / d u), returned as an M-vector.
  virtual Vector vjp_state(Index n, const Vector& u, const Vector& psi,
                           const Vector& v) const {
    return jac_state(n, u, psi).transpose() * v;
  }

  /// v^T (d delta_n / d psi), returned as a K-vector.
  virtual Vector vjp_param(Index n, const Vector& u, const Vector& psi,
                           const Vector& v) const {
    return jac_param(n, u, psi).transpose() * v;
  }
};

/// Summand j_n(u[n], psi) of a discrete functional with its partials.
class SummandFunctional {
 public:
  virtual ~SummandFunctional() = default;

  virtual double j(Index n, const Vector& u, const Vector& psi) const = 0;
  virtual Vector grad_state(Index n, const Vector& u, const Vector& psi) const = 0;
  virtual Vector grad_param(Index n, const Vector& u, const Vector& psi) const = 0;
};

/// States u[0]..u[N] of one forward solve.
struct Trajectory {
  std::vector<Vector> states;

  Index horizon() const { return static_cast<Index>(states.size()) - 1; }
  const Vector& operator[](Index n) const { return states[static_cast<std::size_t>(n)]; }
  const Vector& final_state() const { return states.back(); }
};

/// Common output of every gradient method.
struct GradientReport {
  Vector gradient;
  double value = 0.0;
  GradientMethod method = GradientMethod::adjoint;
  WorkCount work;
};

namespace detail {

inline void check_system_dims(const DifferenceSystem& system, const Vector& psi) {
  if (system.state_dim() < 1) throw DimensionError("state dimension must be >= 1");
  if (system.param_dim() < 1) throw DimensionError("parameter dimension must be >= 1");
  if (system.horizon() < 1) throw ConfigError("horizon N must be >= 1");
  require_size(psi.size(), system.param_dim(), "psi");
  if (!psi.allFinite()) throw NumericalError("psi has non-finite entries");
}

inline void check_trajectory(const DifferenceSystem& system, const Trajectory& traj) {
  if (traj.horizon() != system.horizon()) {
    throw DimensionError("trajectory has " + std::to_string(traj.states.size()) +
                         " states, system horizon is " +
                         std::to_string(system.horizon()));
  }
}

}  // namespace detail

/// Solves u[0] = upsilon(psi), u[n+1] = u[n] + delta_n(u[n], psi).
///
/// Throws NumericalError carrying the step index when a state turns non-finite.
inline Trajectory forward_solve(const DifferenceSystem& system, const Vector& psi,
                                WorkCount* work = nullptr) {
  detail::check_system_dims(system, psi);
  const Index m = system.state_dim();
  const Index steps = system.horizon();

  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(steps + 1));
  Vector u0 = system.initial(psi);
  require_size(u0.size(), m, "initial state");
  if (!u0.allFinite()) throw NumericalError("initial state is non-finite", 0);
  traj.states.push_back(std::move(u0));

  for (Index n = 0; n < steps; ++n) {
    const Vector& u = traj.states.back();
    Vector step = system.delta(n, u, psi);
    require_size(step.size(), m, "delta");
    Vector next = u + step;
    if (!next.allFinite()) {
      throw NumericalError("non-finite state produced at step " + std::to_string(n) +
                               " (divergent system)",
                           static_cast<long>(n));
    }
    traj.states.push_back(std::move(next));
  }
  if (work) {
    work->delta_evals += steps;
    work->scalar_units += steps * m;
  }
  return traj;
}

/// Sum of j_n(u[n], psi) for n = 0..N-1. The final state never enters.
inline double evaluate_functional(const SummandFunctional& functional,
                                  const Trajectory& traj, const Vector& psi) {
  if (traj.horizon() < 1) throw ConfigError("functional needs at least two states");
  double total = 0.0;
  for (Index n = 0; n < traj.horizon(); ++n) {
    const double term = functional.j(n, traj[n], psi);
    if (!std::isfinite(term)) {
      throw NumericalError("non-finite summand at index " + std::to_string(n),
                           static_cast<long>(n));
    }
    total += term;
  }
  return total;
}

}  // namespace seqadj
