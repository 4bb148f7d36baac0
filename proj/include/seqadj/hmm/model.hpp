#pragma once

// Parameterized hidden Markov models with observations bound at construction.
//
// Indexing: observations y[0..N] (N+1 of them), transitions n = 1..N.
//   rho_i           = p(z_0 = i)
//   Gamma_n(i, j)   = p(z_n = i | z_{n-1} = j)    (column-stochastic)
//   omega_n(i)      = p(y_n | z_n = i)

#include "seqadj/types.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace seqadj::hmm {

class HmmModel {
 public:
  virtual ~HmmModel() = default;

  virtual Index num_states() const = 0;       // M
  virtual Index param_dim() const = 0;        // K
  virtual Index num_transitions() const = 0;  // N

  virtual Vector rho(const Vector& psi) const = 0;
  virtual Matrix rho_jac(const Vector& psi) const = 0;  // M x K

  /// Defined for n = 1..N.
  virtual Matrix gamma(Index n, const Vector& psi) const = 0;
  /// K slices of dGamma_n/dpsi_k, each M x M.
  virtual std::vector<Matrix> gamma_jac(Index n, const Vector& psi) const = 0;

  /// Defined for n = 0..N.
  virtual Vector omega(Index n, const Vector& psi) const = 0;
  virtual Matrix omega_jac(Index n, const Vector& psi) const = 0;  // M x K

  /// Column k holds (dGamma_n/dpsi_k) x.
  virtual Matrix gamma_jac_times(Index n, const Vector& psi, const Vector& x) const {
    const std::vector<Matrix> slices = gamma_jac(n, psi);
    Matrix out(num_states(), param_dim());
    for (Index k = 0; k < param_dim(); ++k) out.col(k) = slices[std::size_t(k)] * x;
    return out;
  }
};

/// Throws ConfigError when rho or any Gamma_n is not a distribution (1e-12),
/// or any omega_n has a negative entry.
inline void check_model(const HmmModel& model, const Vector& psi) {
  constexpr double tol = 1e-12;
  const Index m = model.num_states();
  require_size(psi.size(), model.param_dim(), "psi");
  if (model.num_transitions() < 1) throw ConfigError("model needs at least one transition");

  const Vector rho = model.rho(psi);
  require_size(rho.size(), m, "rho");
  if ((rho.array() < 0.0).any() || std::abs(rho.sum() - 1.0) > tol)
    throw ConfigError("rho: not a probability vector");

  for (Index n = 1; n <= model.num_transitions(); ++n) {
    const Matrix g = model.gamma(n, psi);
    if (g.rows() != m || g.cols() != m) throw DimensionError("gamma: must be M x M");
    if ((g.array() < 0.0).any())
      throw ConfigError("gamma: negative entry at transition " + std::to_string(n));
    for (Index j = 0; j < m; ++j) {
      if (std::abs(g.col(j).sum() - 1.0) > tol)
        throw ConfigError("gamma: column " + std::to_string(j) +
                          " does not sum to 1 at transition " + std::to_string(n));
    }
  }
  for (Index n = 0; n <= model.num_transitions(); ++n) {
    const Vector w = model.omega(n, psi);
    require_size(w.size(), m, "omega");
    if (!w.allFinite() || (w.array() < 0.0).any())
      throw ConfigError("omega: negative or non-finite density at observation " +
                        std::to_string(n));
  }
}

}  // namespace seqadj::hmm
