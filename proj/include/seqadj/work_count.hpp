#pragma once

#include <cstdint>
#include <ostream>
#include <string_view>

namespace seqadj {

/// Exact tallies of interface calls made while computing one gradient.
///
/// `scalar_units` is the unit-cost model: advancing one M-vector recursion by
/// one step costs M units, one adjoint accumulation step into the K-vector
/// costs K units. Forward sensitivities come to N*M*(1+K), the adjoint method
/// to N*(2M+K).
struct WorkCount {
  std::int64_t delta_evals = 0;
  std::int64_t state_jvp_or_jac_uses = 0;
  std::int64_t state_vjps = 0;
  std::int64_t param_jacobian_uses = 0;
  std::int64_t param_vjps = 0;
  std::int64_t scalar_units = 0;

  friend bool operator==(const WorkCount&, const WorkCount&) = default;

  WorkCount& operator+=(const WorkCount& o) {
    delta_evals += o.delta_evals;
    state_jvp_or_jac_uses += o.state_jvp_or_jac_uses;
    state_vjps += o.state_vjps;
    param_jacobian_uses += o.param_jacobian_uses;
    param_vjps += o.param_vjps;
    scalar_units += o.scalar_units;
    return *this;
  }
};

inline std::ostream& operator<<(std::ostream& os, const WorkCount& w) {
  return os << "{delta_evals=" << w.delta_evals
            << ", state_jvp_or_jac_uses=" << w.state_jvp_or_jac_uses
            << ", state_vjps=" << w.state_vjps
            << ", param_jacobian_uses=" << w.param_jacobian_uses
            << ", param_vjps=" << w.param_vjps
            << ", scalar_units=" << w.scalar_units << "}";
}

enum class GradientMethod { forward, adjoint, fd, product_rule };

constexpr std::string_view to_string(GradientMethod m) {
  switch (m) {
    case GradientMethod::forward: return "forward";
    case GradientMethod::adjoint: return "adjoint";
    case GradientMethod::fd: return "fd";
    case GradientMethod::product_rule: return "product";
  }
  return "unknown";
}

}  // namespace seqadj
