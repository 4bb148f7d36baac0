#pragma once

// Registry of ready-made difference systems and summand functionals.

#include "seqadj/core_model.hpp"

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace seqadj {

/// Parameter table for builtin_system / builtin_functional. Fields a given
/// system does not use are ignored.
struct SystemOptions {
  Index state_dim = 1;   // M
  Index param_dim = 1;   // K
  Index horizon = 10;    // N
  std::uint64_t seed = 7;
  double upsilon = 1.0;  // constant initial state for "linear", "logistic", "broken"
  double eps = 1e-3;     // dynamics scale of "broken"
};

namespace systems {

namespace detail {

inline Matrix uniform_matrix(std::mt19937_64& rng, Index rows, Index cols, double lo,
                             double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix out(rows, cols);
  // Column-major fill order keeps draws stable across Eigen versions.
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) out(r, c) = dist(rng);
  return out;
}

inline Vector uniform_vector(std::mt19937_64& rng, Index size, double lo, double hi) {
  return uniform_matrix(rng, size, 1, lo, hi).col(0);
}

}  // namespace detail

/// Common dimension bookkeeping.
class SizedSystem : public DifferenceSystem {
 public:
  SizedSystem(Index m, Index k, Index n) : m_(m), k_(k), n_(n) {
    if (m < 1) throw ConfigError("M must be >= 1");
    if (k < 1) throw ConfigError("K must be >= 1");
    if (n < 1) throw ConfigError("N must be >= 1");
  }
  Index state_dim() const override { return m_; }
  Index param_dim() const override { return k_; }
  Index horizon() const override { return n_; }

 protected:
  Index m_, k_, n_;
};

/// delta_n(u, psi) = (sum_k psi_k A_k) u with A_0 = I and seeded A_k for k >= 1.
/// For M = K = 1 this is delta = psi * u.
class LinearSystem final : public SizedSystem {
 public:
  explicit LinearSystem(const SystemOptions& opt)
      : SizedSystem(opt.state_dim, opt.param_dim, opt.horizon), upsilon_(opt.upsilon) {
    std::mt19937_64 rng(opt.seed);
    mats_.reserve(static_cast<std::size_t>(k_));
    mats_.push_back(Matrix::Identity(m_, m_));
    for (Index k = 1; k < k_; ++k)
      mats_.push_back(detail::uniform_matrix(rng, m_, m_, -0.5, 0.5) / double(m_));
  }

  Matrix combined(const Vector& psi) const {
    Matrix s = Matrix::Zero(m_, m_);
    for (Index k = 0; k < k_; ++k) s += psi(k) * mats_[std::size_t(k)];
    return s;
  }

  Vector delta(Index, const Vector& u, const Vector& psi) const override {
    return combined(psi) * u;
  }
  Matrix jac_state(Index, const Vector&, const Vector& psi) const override {
    return combined(psi);
  }
  Matrix jac_param(Index, const Vector& u, const Vector&) const override {
    Matrix out(m_, k_);
    for (Index k = 0; k < k_; ++k) out.col(k) = mats_[std::size_t(k)] * u;
    return out;
  }
  Vector vjp_param(Index, const Vector& u, const Vector&, const Vector& v) const override {
    Vector out(k_);
    for (Index k = 0; k < k_; ++k) out(k) = v.dot(mats_[std::size_t(k)] * u);
    return out;
  }
  Vector initial(const Vector&) const override { return Vector::Constant(m_, upsilon_); }
  Matrix initial_jac(const Vector&) const override { return Matrix::Zero(m_, k_); }

 private:
  double upsilon_;
  std::vector<Matrix> mats_;
};

/// delta_n(u, psi)_i = r_i u_i (1 - u_i), rate r_i = psi_{i mod K}.
class LogisticSystem final : public SizedSystem {
 public:
  explicit LogisticSystem(const SystemOptions& opt)
      : SizedSystem(opt.state_dim, opt.param_dim, opt.horizon), upsilon_(opt.upsilon) {}

  Vector delta(Index, const Vector& u, const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i) out(i) = psi(i % k_) * u(i) * (1.0 - u(i));
    return out;
  }
  Matrix jac_state(Index, const Vector& u, const Vector& psi) const override {
    Matrix out = Matrix::Zero(m_, m_);
    for (Index i = 0; i < m_; ++i) out(i, i) = psi(i % k_) * (1.0 - 2.0 * u(i));
    return out;
  }
  Matrix jac_param(Index, const Vector& u, const Vector&) const override {
    Matrix out = Matrix::Zero(m_, k_);
    for (Index i = 0; i < m_; ++i) out(i, i % k_) = u(i) * (1.0 - u(i));
    return out;
  }
  Vector initial(const Vector&) const override { return Vector::Constant(m_, upsilon_); }
  Matrix initial_jac(const Vector&) const override { return Matrix::Zero(m_, k_); }

 private:
  double upsilon_;
};

/// Seeded polynomial dynamics with cubic damping and a time-varying rate:
///
///   delta_n(u, psi) = h tau_n (A u + d o u o u - u o u o u + B psi + u o (C psi) + c)
///   upsilon(psi)    = u0 + E psi
///
/// where o is the elementwise product and tau_n = 1 + 0.25 sin(0.3 n + phase).
/// Bounded for |psi_k| <= 1 over long horizons.
class RandomSmoothSystem final : public SizedSystem {
 public:
  static constexpr double kStep = 0.1;

  explicit RandomSmoothSystem(const SystemOptions& opt)
      : SizedSystem(opt.state_dim, opt.param_dim, opt.horizon) {
    std::mt19937_64 rng(opt.seed);
    const double sm = std::sqrt(double(m_));
    const double sk = std::sqrt(double(k_));
    a_ = -0.5 * Matrix::Identity(m_, m_) +
         detail::uniform_matrix(rng, m_, m_, -0.25, 0.25) / sm;
    b_ = detail::uniform_matrix(rng, m_, k_, -1.0, 1.0) / sk;
    c_mat_ = detail::uniform_matrix(rng, m_, k_, -0.5, 0.5) / double(k_);
    quad_ = detail::uniform_vector(rng, m_, -0.5, 0.5);
    forcing_ = detail::uniform_vector(rng, m_, -0.5, 0.5);
    u0_ = detail::uniform_vector(rng, m_, -0.5, 0.5);
    e_ = detail::uniform_matrix(rng, m_, k_, -0.5, 0.5) / sk;
    phase_ = std::uniform_real_distribution<double>(0.0, 6.283185307179586)(rng);
  }

  double rate(Index n) const { return kStep * (1.0 + 0.25 * std::sin(0.3 * double(n) + phase_)); }

  Vector delta(Index n, const Vector& u, const Vector& psi) const override {
    Vector inner = a_ * u + b_ * psi + forcing_;
    inner.array() += quad_.array() * u.array().square() - u.array().cube() +
                     u.array() * (c_mat_ * psi).array();
    return rate(n) * inner;
  }
  Matrix jac_state(Index n, const Vector& u, const Vector& psi) const override {
    Matrix out = a_;
    out.diagonal() += local_slope(u, psi);
    return rate(n) * out;
  }
  Matrix jac_param(Index n, const Vector& u, const Vector&) const override {
    return rate(n) * (b_ + u.asDiagonal() * c_mat_);
  }
  Vector vjp_state(Index n, const Vector& u, const Vector& psi,
                   const Vector& v) const override {
    Vector out = a_.transpose() * v;
    out.array() += local_slope(u, psi).array() * v.array();
    return rate(n) * out;
  }
  Vector vjp_param(Index n, const Vector& u, const Vector&, const Vector& v) const override {
    Vector uv = u.cwiseProduct(v);
    return rate(n) * (b_.transpose() * v + c_mat_.transpose() * uv);
  }
  Vector initial(const Vector& psi) const override { return u0_ + e_ * psi; }
  Matrix initial_jac(const Vector&) const override { return e_; }

 private:
  Vector local_slope(const Vector& u, const Vector& psi) const {
    Vector s = 2.0 * quad_.cwiseProduct(u) - 3.0 * u.cwiseAbs2();
    s += c_mat_ * psi;
    return s;
  }

  Matrix a_, b_, c_mat_, e_;
  Vector quad_, forcing_, u0_;
  double phase_ = 0.0;
};

/// delta = 0, upsilon(psi)_i = psi_{i mod K}. States stay at upsilon.
class ZeroSystem final : public SizedSystem {
 public:
  explicit ZeroSystem(const SystemOptions& opt)
      : SizedSystem(opt.state_dim, opt.param_dim, opt.horizon) {}

  Vector delta(Index, const Vector&, const Vector&) const override { return Vector::Zero(m_); }
  Matrix jac_state(Index, const Vector&, const Vector&) const override {
    return Matrix::Zero(m_, m_);
  }
  Matrix jac_param(Index, const Vector&, const Vector&) const override {
    return Matrix::Zero(m_, k_);
  }
  Vector initial(const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i) out(i) = psi(i % k_);
    return out;
  }
  Matrix initial_jac(const Vector&) const override {
    Matrix out = Matrix::Zero(m_, k_);
    for (Index i = 0; i < m_; ++i) out(i, i % k_) = 1.0;
    return out;
  }
};

/// Test fixture with a deliberately wrong parameter Jacobian (always zero).
///
/// delta = eps (sum_k psi_k) u and upsilon_i = upsilon + psi_{i mod K}. The
/// initial-condition path is reported correctly, so methods that trust
/// jac_param miss only the eps-sized dynamics contribution.
class BrokenSystem final : public SizedSystem {
 public:
  explicit BrokenSystem(const SystemOptions& opt)
      : SizedSystem(opt.state_dim, opt.param_dim, opt.horizon),
        upsilon_(opt.upsilon),
        eps_(opt.eps) {}

  Vector delta(Index, const Vector& u, const Vector& psi) const override {
    return eps_ * psi.sum() * u;
  }
  Matrix jac_state(Index, const Vector&, const Vector& psi) const override {
    return eps_ * psi.sum() * Matrix::Identity(m_, m_);
  }
  Matrix jac_param(Index, const Vector&, const Vector&) const override {
    return Matrix::Zero(m_, k_);
  }
  Vector initial(const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i) out(i) = upsilon_ + psi(i % k_);
    return out;
  }
  Matrix initial_jac(const Vector&) const override {
    Matrix out = Matrix::Zero(m_, k_);
    for (Index i = 0; i < m_; ++i) out(i, i % k_) = 1.0;
    return out;
  }

 private:
  double upsilon_, eps_;
};

// ---------------------------------------------------------------------------
// Functionals

/// j_n = 1^T u.
class SumFunctional final : public SummandFunctional {
 public:
  SumFunctional(Index m, Index k) : m_(m), k_(k) {}
  double j(Index, const Vector& u, const Vector&) const override { return u.sum(); }
  Vector grad_state(Index, const Vector&, const Vector&) const override {
    return Vector::Ones(m_);
  }
  Vector grad_param(Index, const Vector&, const Vector&) const override {
    return Vector::Zero(k_);
  }

 private:
  Index m_, k_;
};

/// j_n = 0.
class ZeroFunctional final : public SummandFunctional {
 public:
  ZeroFunctional(Index m, Index k) : m_(m), k_(k) {}
  double j(Index, const Vector&, const Vector&) const override { return 0.0; }
  Vector grad_state(Index, const Vector&, const Vector&) const override {
    return Vector::Zero(m_);
  }
  Vector grad_param(Index, const Vector&, const Vector&) const override {
    return Vector::Zero(k_);
  }

 private:
  Index m_, k_;
};

/// Seeded quadratic summand with explicit psi dependence:
///   j_n = w_n^T u + 1/2 sum_i q_i u_i^2 + (g^T psi)(s^T u) + 1/2 r |psi|^2
/// with w_n = w (1 + 0.1 cos n).
class QuadraticFunctional final : public SummandFunctional {
 public:
  QuadraticFunctional(Index m, Index k, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    w_ = detail::uniform_vector(rng, m, -1.0, 1.0);
    q_ = detail::uniform_vector(rng, m, -0.5, 0.5);
    g_ = detail::uniform_vector(rng, k, -0.5, 0.5);
    s_ = detail::uniform_vector(rng, m, -0.5, 0.5);
    r_ = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
  }

  double j(Index n, const Vector& u, const Vector& psi) const override {
    return weight(n) * w_.dot(u) + 0.5 * (q_.array() * u.array().square()).sum() +
           g_.dot(psi) * s_.dot(u) + 0.5 * r_ * psi.squaredNorm();
  }
  Vector grad_state(Index n, const Vector& u, const Vector& psi) const override {
    return weight(n) * w_ + q_.cwiseProduct(u) + g_.dot(psi) * s_;
  }
  Vector grad_param(Index, const Vector& u, const Vector& psi) const override {
    return s_.dot(u) * g_ + r_ * psi;
  }

 private:
  static double weight(Index n) { return 1.0 + 0.1 * std::cos(double(n)); }
  Vector w_, q_, g_, s_;
  double r_ = 0.0;
};

}  // namespace systems

inline const std::vector<std::string>& builtin_system_names() {
  static const std::vector<std::string> names{"linear", "logistic", "random-smooth",
                                              "zero", "broken"};
  return names;
}

/// Instantiates a registered system by name. Throws ConfigError for unknown
/// names or invalid options.
inline std::unique_ptr<DifferenceSystem> builtin_system(std::string_view name,
                                                        const SystemOptions& opt) {
  if (name == "linear") return std::make_unique<systems::LinearSystem>(opt);
  if (name == "logistic") return std::make_unique<systems::LogisticSystem>(opt);
  if (name == "random-smooth") return std::make_unique<systems::RandomSmoothSystem>(opt);
  if (name == "zero") return std::make_unique<systems::ZeroSystem>(opt);
  if (name == "broken") {
    if (!std::isfinite(opt.eps)) throw ConfigError("broken: eps must be finite");
    return std::make_unique<systems::BrokenSystem>(opt);
  }
  throw ConfigError("unknown system '" + std::string(name) + "'");
}

inline const std::vector<std::string>& builtin_functional_names() {
  static const std::vector<std::string> names{"sum", "zero", "quadratic"};
  return names;
}

inline std::unique_ptr<SummandFunctional> builtin_functional(std::string_view name,
                                                             const SystemOptions& opt) {
  if (opt.state_dim < 1 || opt.param_dim < 1) throw ConfigError("M and K must be >= 1");
  if (name == "sum") return std::make_unique<systems::SumFunctional>(opt.state_dim, opt.param_dim);
  if (name == "zero")
    return std::make_unique<systems::ZeroFunctional>(opt.state_dim, opt.param_dim);
  if (name == "quadratic")
    return std::make_unique<systems::QuadraticFunctional>(opt.state_dim, opt.param_dim,
                                                          opt.seed);
  throw ConfigError("unknown functional '" + std::string(name) + "'");
}

}  // namespace seqadj
