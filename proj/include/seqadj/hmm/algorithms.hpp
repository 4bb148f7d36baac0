#pragma once

// Marginal likelihood L = 1^T alpha_N of an HMM and its gradient.
//
//   alpha_0     = omega_0 o rho
//   alpha_{n+1} = omega_{n+1} o (Gamma_{n+1} alpha_n)
//
// The adjoint route runs the backward recursion
//   kappa_{N-1} = 1,   kappa_n = Gamma_{n+2}^T (omega_{n+2} o kappa_{n+1})
// and assembles
//   dL/dpsi = [Gamma_1^T (omega_1 o kappa_0)]^T [omega_0 o drho + domega_0 o rho]
//           + sum_n kappa_n^T [domega_{n+1} o (Gamma_{n+1} alpha_n)
//                              + omega_{n+1} o (dGamma_{n+1} alpha_n)].
// Diagonal observation matrices are never formed; every product with one is
// a Hadamard product.

#include "seqadj/core_model.hpp"
#include "seqadj/fd_oracle.hpp"
#include "seqadj/hmm/model.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace seqadj::hmm {

struct AlphaSequence {
  std::vector<Vector> alpha;  // alpha_0..alpha_N
  double likelihood = 0.0;
};

struct KappaSequence {
  std::vector<Vector> kappa;  // kappa_0..kappa_{N-1}
};

namespace detail {

inline void check_psi(const HmmModel& model, const Vector& psi) {
  require_size(psi.size(), model.param_dim(), "psi");
  if (model.num_transitions() < 1) throw ConfigError("model needs at least one transition");
}

/// omega o drho + domega o rho, M x K.
inline Matrix initial_alpha_jac(const HmmModel& model, const Vector& psi) {
  const Vector w0 = model.omega(0, psi);
  const Vector r = model.rho(psi);
  return w0.asDiagonal() * model.rho_jac(psi) + r.asDiagonal() * model.omega_jac(0, psi);
}

/// d alpha_{n+1} / d psi holding alpha_n fixed, M x K.
inline Matrix step_param_jac(const HmmModel& model, Index n, const Vector& psi,
                             const Vector& alpha_n) {
  const Vector w = model.omega(n + 1, psi);
  const Vector pred = model.gamma(n + 1, psi) * alpha_n;
  return pred.asDiagonal() * model.omega_jac(n + 1, psi) +
         w.asDiagonal() * model.gamma_jac_times(n + 1, psi, alpha_n);
}

}  // namespace detail

inline AlphaSequence forward_pass(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index steps = model.num_transitions();
  AlphaSequence out;
  out.alpha.reserve(std::size_t(steps + 1));
  out.alpha.push_back(model.omega(0, psi).cwiseProduct(model.rho(psi)));
  for (Index n = 0; n < steps; ++n) {
    const Vector& a = out.alpha.back();
    out.alpha.push_back(model.omega(n + 1, psi).cwiseProduct(model.gamma(n + 1, psi) * a));
  }
  out.likelihood = out.alpha.back().sum();
  if (!std::isfinite(out.likelihood))
    throw NumericalError("non-finite likelihood in forward pass");
  if (out.likelihood <= 0.0) {
    throw NumericalError(
        "likelihood underflowed to 0; use the scaled log-likelihood for long sequences");
  }
  return out;
}

inline KappaSequence backward_pass(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index steps = model.num_transitions();
  const Index m = model.num_states();
  KappaSequence out;
  out.kappa.assign(std::size_t(steps), Vector());
  out.kappa[std::size_t(steps - 1)] = Vector::Ones(m);
  for (Index n = steps - 2; n >= 0; --n) {
    const Vector& next = out.kappa[std::size_t(n + 1)];
    Vector k = model.gamma(n + 2, psi).transpose() * model.omega(n + 2, psi).cwiseProduct(next);
    require_size(k.size(), m, "kappa");
    out.kappa[std::size_t(n)] = std::move(k);
  }
  return out;
}

/// b_N = 1, b_n = Gamma_{n+1}^T (omega_{n+1} o b_{n+1}); b_n^T alpha_n = L for
/// every n, and kappa_n = b_{n+1}.
inline std::vector<Vector> backward_states(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index steps = model.num_transitions();
  std::vector<Vector> b(std::size_t(steps + 1));
  b[std::size_t(steps)] = Vector::Ones(model.num_states());
  for (Index n = steps - 1; n >= 0; --n)
    b[std::size_t(n)] =
        model.gamma(n + 1, psi).transpose() * model.omega(n + 1, psi).cwiseProduct(b[std::size_t(n + 1)]);
  return b;
}

inline GradientReport gradient_adjoint_hmm(const HmmModel& model, const Vector& psi) {
  const AlphaSequence fwd = forward_pass(model, psi);
  const KappaSequence bwd = backward_pass(model, psi);
  const Index steps = model.num_transitions();

  const Vector boundary =
      model.gamma(1, psi).transpose() * model.omega(1, psi).cwiseProduct(bwd.kappa[0]);
  Vector grad = detail::initial_alpha_jac(model, psi).transpose() * boundary;
  for (Index n = 0; n < steps; ++n) {
    grad.noalias() +=
        detail::step_param_jac(model, n, psi, fwd.alpha[std::size_t(n)]).transpose() *
        bwd.kappa[std::size_t(n)];
  }
  if (!grad.allFinite()) throw NumericalError("non-finite likelihood gradient");

  GradientReport report;
  report.method = GradientMethod::adjoint;
  report.value = fwd.likelihood;
  report.gradient = std::move(grad);
  return report;
}

/// Gradient from differentiating the unrolled product
///   L = 1^T Omega_N Gamma_N ... Omega_1 Gamma_1 Omega_0 rho
/// factor by factor. Every prefix and suffix product is rebuilt from scratch,
/// so the cost is O(N^2 M^3); it shares no recursion with the adjoint route.
inline GradientReport gradient_product_rule(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index steps = model.num_transitions();
  const Index m = model.num_states();

  // Omega_n Gamma_n for n = 1..N.
  auto factor = [&](Index n) -> Matrix {
    return model.omega(n, psi).asDiagonal() * model.gamma(n, psi);
  };
  // Omega_hi Gamma_hi ... Omega_lo Gamma_lo, identity when lo > hi.
  auto chain = [&](Index hi, Index lo) -> Matrix {
    Matrix p = Matrix::Identity(m, m);
    for (Index i = lo; i <= hi; ++i) p = factor(i) * p;
    return p;
  };
  const Vector head = model.omega(0, psi).cwiseProduct(model.rho(psi));
  const Vector ones = Vector::Ones(m);

  Vector grad = Vector::Zero(model.param_dim());
  {
    const Vector back = chain(steps, 1).transpose() * ones;
    grad.noalias() += detail::initial_alpha_jac(model, psi).transpose() * back;
  }
  for (Index n = 0; n < steps; ++n) {
    // Term for the factor Omega_{n+1} Gamma_{n+1}.
    const Vector back = chain(steps, n + 2).transpose() * ones;
    const Vector alpha_n = chain(n, 1) * head;
    const Vector w = model.omega(n + 1, psi);
    const Matrix g = model.gamma(n + 1, psi);
    const Matrix dw = model.omega_jac(n + 1, psi);
    const std::vector<Matrix> dg = model.gamma_jac(n + 1, psi);
    const Vector pred = g * alpha_n;
    for (Index k = 0; k < model.param_dim(); ++k) {
      const Vector term = dw.col(k).cwiseProduct(pred) +
                          w.cwiseProduct(dg[std::size_t(k)] * alpha_n);
      grad(k) += back.dot(term);
    }
  }
  if (!grad.allFinite()) throw NumericalError("non-finite likelihood gradient");

  GradientReport report;
  report.method = GradientMethod::product_rule;
  report.value = ones.dot(chain(steps, 1) * head);
  report.gradient = std::move(grad);
  return report;
}

inline constexpr std::uint64_t kMaxEnumeratedPaths = 10'000'000;

/// Sums rho_{z0} omega_0(z0) prod_n Gamma_n(z_n, z_{n-1}) omega_n(z_n) over
/// every hidden path. Refuses state spaces larger than kMaxEnumeratedPaths.
inline double brute_force_likelihood(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index m = model.num_states();
  const Index steps = model.num_transitions();

  std::uint64_t paths = 1;
  for (Index n = 0; n <= steps; ++n) {
    if (paths > kMaxEnumeratedPaths / std::uint64_t(m))
      throw Error("state space too large to enumerate: M^(N+1) exceeds 1e7");
    paths *= std::uint64_t(m);
  }

  const Vector rho = model.rho(psi);
  std::vector<Vector> w(std::size_t(steps + 1));
  std::vector<Matrix> g(std::size_t(steps + 1));
  for (Index n = 0; n <= steps; ++n) w[std::size_t(n)] = model.omega(n, psi);
  for (Index n = 1; n <= steps; ++n) g[std::size_t(n)] = model.gamma(n, psi);

  std::vector<Index> z(std::size_t(steps + 1), 0);
  double total = 0.0;
  for (std::uint64_t p = 0; p < paths; ++p) {
    double prob = rho(z[0]) * w[0](z[0]);
    for (Index n = 1; n <= steps; ++n) {
      const auto s = std::size_t(n);
      prob *= g[s](z[s], z[s - 1]) * w[s](z[s]);
    }
    total += prob;
    for (std::size_t d = 0; d < z.size(); ++d) {  // odometer increment
      if (++z[d] < m) break;
      z[d] = 0;
    }
  }
  return total;
}

/// Central-difference gradient of the forward-pass likelihood.
inline GradientReport gradient_fd_likelihood(const HmmModel& model, const Vector& psi,
                                             std::optional<double> step = std::nullopt) {
  GradientReport report;
  report.method = GradientMethod::fd;
  report.value = forward_pass(model, psi).likelihood;
  report.gradient = central_difference_gradient(
      [&](const Vector& p) { return forward_pass(model, p).likelihood; }, psi, step);
  return report;
}

struct ScaledResult {
  double log_likelihood = 0.0;
  Vector gradient;  // d log L / d psi
};

/// log L and its gradient using per-step normalized forward and backward
/// vectors:
///   a_n = alpha_n / C_n with C_n = c_0 ... c_n, c_n = 1^T (unnormalized a_n),
///   e_N = 1, e_n = Gamma_{n+1}^T (omega_{n+1} o e_{n+1}) / c_{n+1},
/// so that log L = sum log c_n and
///   d log L = e_0^T dalpha_0 / c_0 + sum_n e_{n+1}^T dStep_n(a_n) / c_{n+1}.
inline ScaledResult scaled_log_likelihood(const HmmModel& model, const Vector& psi) {
  detail::check_psi(model, psi);
  const Index steps = model.num_transitions();
  const Index m = model.num_states();

  std::vector<Vector> a(std::size_t(steps + 1));
  std::vector<double> c(std::size_t(steps + 1));
  auto normalize = [&](Index n, Vector v) {
    const double s = v.sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw NumericalError("normalizer is zero at observation " + std::to_string(n) +
                               " (impossible observation)",
                           static_cast<long>(n));
    }
    c[std::size_t(n)] = s;
    a[std::size_t(n)] = v / s;
  };
  normalize(0, model.omega(0, psi).cwiseProduct(model.rho(psi)));
  for (Index n = 0; n < steps; ++n)
    normalize(n + 1, model.omega(n + 1, psi).cwiseProduct(model.gamma(n + 1, psi) * a[std::size_t(n)]));

  ScaledResult out;
  for (double s : c) out.log_likelihood += std::log(s);

  Vector e = Vector::Ones(m);  // e_{n+1} while processing step n
  Vector grad = Vector::Zero(model.param_dim());
  for (Index n = steps - 1; n >= 0; --n) {
    const double cn1 = c[std::size_t(n + 1)];
    grad.noalias() +=
        detail::step_param_jac(model, n, psi, a[std::size_t(n)]).transpose() * e / cn1;
    e = model.gamma(n + 1, psi).transpose() * model.omega(n + 1, psi).cwiseProduct(e) / cn1;
  }
  grad.noalias() += detail::initial_alpha_jac(model, psi).transpose() * e / c[0];
  if (!grad.allFinite()) throw NumericalError("non-finite log-likelihood gradient");
  out.gradient = std::move(grad);
  return out;
}

}  // namespace seqadj::hmm
