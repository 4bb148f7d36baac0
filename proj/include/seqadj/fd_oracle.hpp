#pragma once

// Central finite-difference gradients and tolerance-based comparison.

#include "seqadj/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>

namespace seqadj {

/// Default step for component k: cbrt(eps) * max(1, |psi_k|).
inline double default_fd_step(double psi_k) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, std::abs(psi_k));
}

/// Central differences of an arbitrary scalar function of psi. A fixed `step`
/// overrides the per-component default.
inline Vector central_difference_gradient(const std::function<double(const Vector&)>& f,
                                          const Vector& psi,
                                          std::optional<double> step = std::nullopt) {
  if (step && !(*step > 0.0)) throw ConfigError("finite-difference step must be > 0");
  Vector grad(psi.size());
  Vector probe = psi;
  for (Index k = 0; k < psi.size(); ++k) {
    const double h = step ? *step : default_fd_step(psi(k));
    probe(k) = psi(k) + h;
    const double up = f(probe);
    probe(k) = psi(k) - h;
    const double down = f(probe);
    probe(k) = psi(k);
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericalError("non-finite functional when perturbing component " +
                               std::to_string(k),
                           static_cast<long>(k));
    }
    grad(k) = (up - down) / (2.0 * h);
  }
  return grad;
}

inline GradientReport gradient_fd(const DifferenceSystem& system,
                                  const SummandFunctional& functional, const Vector& psi,
                                  std::optional<double> step = std::nullopt) {
  detail::check_system_dims(system, psi);
  GradientReport report;
  report.method = GradientMethod::fd;
  report.value = evaluate_functional(functional, forward_solve(system, psi, &report.work), psi);

  auto objective = [&](const Vector& p) {
    try {
      return evaluate_functional(functional, forward_solve(system, p, &report.work), p);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  report.gradient = central_difference_gradient(objective, psi, step);
  return report;
}

struct CheckReport {
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  Index worst_index = -1;
  bool pass = true;
  double rtol = 0.0;
  double atol = 0.0;
};

inline std::ostream& operator<<(std::ostream& os, const CheckReport& r) {
  return os << (r.pass ? "pass" : "FAIL") << " max_abs_err=" << r.max_abs_err
            << " max_rel_err=" << r.max_rel_err << " worst_index=" << r.worst_index
            << " (rtol=" << r.rtol << ", atol=" << r.atol << ")";
}

/// Componentwise |a - b| <= atol + rtol |b|. The worst index is the component
/// with the largest excess over its allowance.
inline CheckReport compare_gradients(const Vector& a, const Vector& b, double rtol = 1e-6,
                                     double atol = 1e-9) {
  if (a.size() != b.size()) {
    throw DimensionError("gradient length mismatch: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  CheckReport r;
  r.rtol = rtol;
  r.atol = atol;
  double worst_excess = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < a.size(); ++k) {
    const double abs_err = std::abs(a(k) - b(k));
    const double rel_err = b(k) != 0.0 ? abs_err / std::abs(b(k))
                           : abs_err == 0.0 ? 0.0
                                            : std::numeric_limits<double>::infinity();
    const double excess = abs_err - (atol + rtol * std::abs(b(k)));
    // NaN never satisfies the bound.
    if (!(excess <= 0.0)) r.pass = false;
    r.max_abs_err = std::max(r.max_abs_err, abs_err);
    r.max_rel_err = std::max(r.max_rel_err, rel_err);
    const double ranked = std::isnan(excess) ? std::numeric_limits<double>::infinity() : excess;
    if (r.worst_index < 0 || ranked > worst_excess) {
      worst_excess = ranked;
      r.worst_index = k;
    }
  }
  return r;
}

inline CheckReport compare_gradients(const GradientReport& a, const GradientReport& b,
                                     double rtol = 1e-6, double atol = 1e-9) {
  return compare_gradients(a.gradient, b.gradient, rtol, atol);
}

}  // namespace seqadj
