#pragma once

// Independent oracles and seeded fixtures shared by the test binaries. Nothing
// here calls the library's gradient code.

#include "seqadj/seqadj.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using seqadj::Index;
using seqadj::Matrix;
using seqadj::Vector;

/// Fourth-order central difference, h scaled by max(1, |x_k|).
inline Vector fd4(const std::function<double(const Vector&)>& f, const Vector& x,
                  double h0 = 1e-3) {
  Vector g(x.size());
  for (Index k = 0; k < x.size(); ++k) {
    const double h = h0 * std::max(1.0, std::abs(x(k)));
    auto at = [&](double s) {
      Vector y = x;
      y(k) += s * h;
      return f(y);
    };
    g(k) = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
  }
  return g;
}

/// Fourth-order central difference of a vector-valued map, one column per x_k.
inline Matrix fd4_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                           double h0 = 1e-3) {
  const Vector f0 = f(x);
  Matrix out(f0.size(), x.size());
  for (Index k = 0; k < x.size(); ++k) {
    const double h = h0 * std::max(1.0, std::abs(x(k)));
    auto at = [&](double s) {
      Vector y = x;
      y(k) += s * h;
      return f(y);
    };
    out.col(k) = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * h);
  }
  return out;
}

/// Largest componentwise |a - b| / max(|a|, |b|); 0 where both are 0.
inline double max_rel_diff(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  double worst = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i) {
      const double d = std::abs(a(i, j) - b(i, j));
      if (d == 0.0) continue;
      if (!std::isfinite(d)) return INFINITY;
      worst = std::max(worst, d / std::max(std::abs(a(i, j)), std::abs(b(i, j))));
    }
  return worst;
}

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline Vector uniform(std::mt19937_64& rng, Index n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

/// Random-smooth system with dimensions drawn from the seed: M <= 5, K <= 10, N <= 50.
struct RandomCase {
  seqadj::SystemOptions options;
  std::unique_ptr<seqadj::DifferenceSystem> system;
  std::unique_ptr<seqadj::SummandFunctional> functional;
  Vector psi;
};

inline RandomCase random_case(std::uint64_t seed, const std::string& system = "random-smooth",
                              const std::string& functional = "quadratic") {
  std::mt19937_64 rng(seed * 7919 + 13);
  std::uniform_int_distribution<int> md(1, 5), kd(1, 10), nd(1, 50);
  RandomCase c;
  c.options.state_dim = md(rng);
  c.options.param_dim = kd(rng);
  c.options.horizon = nd(rng);
  c.options.seed = seed;
  c.options.upsilon = 0.3;
  c.system = seqadj::builtin_system(system, c.options);
  c.functional = seqadj::builtin_functional(functional, c.options);
  // Logistic rates stay small: near 1 the orbit locks onto u = 1 within a few
  // steps and du_N/dpsi shrinks to rounding level, where no relative
  // comparison is meaningful. Other systems take U[-1, 1].
  c.psi = system == "logistic" ? uniform(rng, c.options.param_dim, 0.05, 0.3)
                               : uniform(rng, c.options.param_dim, -1.0, 1.0);
  if (system == "linear") c.psi *= 0.1;
  return c;
}

/// J(psi) via an independent forward loop written against the raw interface.
inline double functional_value(const seqadj::DifferenceSystem& s,
                               const seqadj::SummandFunctional& f, const Vector& psi) {
  Vector u = s.initial(psi);
  double total = 0.0;
  for (Index n = 0; n < s.horizon(); ++n) {
    total += f.j(n, u, psi);
    u = u + s.delta(n, u, psi);
  }
  return total;
}

inline Vector final_state(const seqadj::DifferenceSystem& s, const Vector& psi) {
  Vector u = s.initial(psi);
  for (Index n = 0; n < s.horizon(); ++n) u = u + s.delta(n, u, psi);
  return u;
}

/// Likelihood by recursive path enumeration, written independently of the
/// library's enumerator.
inline double enumerate_paths(const seqadj::hmm::HmmModel& model, const Vector& psi) {
  const Index m = model.num_states();
  const Index steps = model.num_transitions();
  std::vector<Matrix> gammas;
  std::vector<Vector> omegas;
  for (Index n = 0; n <= steps; ++n) omegas.push_back(model.omega(n, psi));
  for (Index n = 1; n <= steps; ++n) gammas.push_back(model.gamma(n, psi));
  const Vector rho = model.rho(psi);
  std::function<double(Index, Index, double)> walk = [&](Index n, Index z, double p) {
    if (n == steps) return p;
    double s = 0.0;
    for (Index next = 0; next < m; ++next)
      s += walk(n + 1, next, p * gammas[std::size_t(n)](next, z) * omegas[std::size_t(n + 1)](next));
    return s;
  };
  double total = 0.0;
  for (Index z = 0; z < m; ++z) total += walk(0, z, rho(z) * omegas[0](z));
  return total;
}

struct RandomHmm {
  std::vector<double> observations;
  std::unique_ptr<seqadj::hmm::HmmModel> model;
  Vector psi;
};

/// Seeded model for "gaussian-means" or "softmax-full" with M states and N
/// transitions. Observations are N(0, 1.5^2) draws; psi is U[-1, 1].
inline RandomHmm random_hmm(const std::string& parameterization, std::uint64_t seed, Index m,
                            Index n) {
  std::mt19937_64 rng(seed * 104729 + 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  RandomHmm h;
  seqadj::hmm::HmmOptions opt;
  opt.states = m;
  opt.sigma = 0.8 + 0.4 * std::uniform_real_distribution<double>(0, 1)(rng);
  if (parameterization == "gaussian-means") {
    Matrix g = uniform(rng, m * m, 0.2, 1.0).reshaped(m, m);
    for (Index j = 0; j < m; ++j) g.col(j) /= g.col(j).sum();
    Vector r = uniform(rng, m, 0.2, 1.0);
    opt.gamma = g;
    opt.rho = r / r.sum();
  }
  for (Index i = 0; i <= n; ++i) h.observations.push_back(1.5 * normal(rng));
  h.model = seqadj::hmm::builtin_hmm(parameterization, opt, h.observations);
  h.psi = uniform(rng, h.model->param_dim(), -1.0, 1.0);
  return h;
}

/// The two-state, two-observation example: rho = (.5, .5),
/// Gamma = [[.9, .2], [.1, .8]], omega_0 = (.8, .3), omega_1 = (.6, .4).
/// Emission table psi[i * 2 + symbol], observations (0, 1).
inline std::unique_ptr<seqadj::hmm::HmmModel> running_example(std::vector<double> obs = {0, 1}) {
  seqadj::hmm::HmmOptions opt;
  opt.states = 2;
  opt.symbols = 2;
  Matrix g(2, 2);
  g << 0.9, 0.2, 0.1, 0.8;
  opt.gamma = g;
  opt.rho = Vector::Constant(2, 0.5);
  return seqadj::hmm::builtin_hmm("emission-table", opt, obs);
}

inline Vector running_example_psi() {
  Vector psi(4);
  psi << 0.8, 0.6, 0.3, 0.4;
  return psi;
}

}  // namespace testing_support
