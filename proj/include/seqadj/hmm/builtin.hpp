#pragma once

// Ready-made HMM parameterizations with analytic Jacobians.
//
//   gaussian-means  psi = per-state emission means; Gamma, rho, sigma fixed.
//   softmax-full    psi = [transition logits, column by column (M-1 each),
//                          initial logits (M-1), emission means (M)];
//                   the last logit of every softmax is pinned to 0.
//   emission-table  psi[i*S + s] = p(y = s | z = i) for integer symbols y;
//                   Gamma and rho fixed.

#include "seqadj/hmm/model.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqadj::hmm {

/// Settings shared by the built-in parameterizations. Unused fields are ignored.
struct HmmOptions {
  Index states = 2;
  double sigma = 1.0;
  std::optional<Matrix> gamma;  // column-stochastic, fixed-Gamma parameterizations
  std::optional<Vector> rho;
  Index symbols = 0;            // emission-table alphabet size
};

inline double normal_density(double y, double mean, double sigma) {
  const double z = (y - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// Softmax over (logits, 0).
inline Vector softmax_pinned(const Eigen::Ref<const Vector>& free_logits) {
  const Index m = free_logits.size() + 1;
  Vector z(m);
  z.head(m - 1) = free_logits;
  z(m - 1) = 0.0;
  const double top = z.maxCoeff();
  Vector e = (z.array() - top).exp();
  return e / e.sum();
}

namespace detail {

inline Matrix default_gamma(Index m) {
  if (m == 1) return Matrix::Ones(1, 1);
  Matrix g = Matrix::Constant(m, m, 0.2 / double(m - 1));
  g.diagonal().setConstant(0.8);
  return g;
}

inline Index checked_transitions(std::size_t observations) {
  if (observations < 2)
    throw ConfigError("observations: need at least 2 (one transition)");
  return static_cast<Index>(observations) - 1;
}

}  // namespace detail

/// Fixed Gamma and rho shared by the fixed-chain parameterizations.
class FixedChainModel : public HmmModel {
 public:
  FixedChainModel(Index m, Index transitions, const HmmOptions& opt)
      : m_(m), n_(transitions) {
    if (m < 1) throw ConfigError("states: must be >= 1");
    gamma_ = opt.gamma ? *opt.gamma : detail::default_gamma(m);
    rho_ = opt.rho ? *opt.rho : Vector::Constant(m, 1.0 / double(m));
    if (gamma_.rows() != m || gamma_.cols() != m) throw ConfigError("gamma: must be M x M");
    if (rho_.size() != m) throw ConfigError("rho: must have M entries");
    if ((gamma_.array() < 0.0).any()) throw ConfigError("gamma: negative entry");
    for (Index j = 0; j < m; ++j)
      if (std::abs(gamma_.col(j).sum() - 1.0) > 1e-12)
        throw ConfigError("gamma: column " + std::to_string(j) +
                          " must sum to 1 (Gamma(i,j) = p(next=i | current=j))");
    if ((rho_.array() < 0.0).any() || std::abs(rho_.sum() - 1.0) > 1e-12)
      throw ConfigError("rho: must be a probability vector");
  }

  Index num_states() const override { return m_; }
  Index num_transitions() const override { return n_; }

  Vector rho(const Vector&) const override { return rho_; }
  Matrix rho_jac(const Vector&) const override { return Matrix::Zero(m_, param_dim()); }
  Matrix gamma(Index, const Vector&) const override { return gamma_; }
  std::vector<Matrix> gamma_jac(Index, const Vector&) const override {
    return std::vector<Matrix>(std::size_t(param_dim()), Matrix::Zero(m_, m_));
  }
  Matrix gamma_jac_times(Index, const Vector&, const Vector&) const override {
    return Matrix::Zero(m_, param_dim());
  }

 protected:
  Index m_, n_;
  Matrix gamma_;
  Vector rho_;
};

class GaussianMeansModel final : public FixedChainModel {
 public:
  GaussianMeansModel(std::vector<double> observations, const HmmOptions& opt)
      : FixedChainModel(opt.states, detail::checked_transitions(observations.size()), opt),
        y_(std::move(observations)),
        sigma_(opt.sigma) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("sigma: must be > 0");
  }

  Index param_dim() const override { return m_; }

  Vector omega(Index n, const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i) out(i) = normal_density(y_[std::size_t(n)], psi(i), sigma_);
    return out;
  }
  Matrix omega_jac(Index n, const Vector& psi) const override {
    Matrix out = Matrix::Zero(m_, m_);
    const double y = y_[std::size_t(n)];
    for (Index i = 0; i < m_; ++i)
      out(i, i) = normal_density(y, psi(i), sigma_) * (y - psi(i)) / (sigma_ * sigma_);
    return out;
  }

 private:
  std::vector<double> y_;
  double sigma_;
};

class EmissionTableModel final : public FixedChainModel {
 public:
  EmissionTableModel(std::vector<int> observations, const HmmOptions& opt)
      : FixedChainModel(opt.states, detail::checked_transitions(observations.size()), opt),
        y_(std::move(observations)),
        symbols_(opt.symbols) {
    if (symbols_ < 1) throw ConfigError("symbols: must be >= 1");
    for (int s : y_)
      if (s < 0 || s >= symbols_)
        throw ConfigError("observations: symbol " + std::to_string(s) + " outside [0, symbols)");
  }

  Index param_dim() const override { return m_ * symbols_; }

  Vector omega(Index n, const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i) out(i) = psi(slot(n, i));
    return out;
  }
  Matrix omega_jac(Index n, const Vector&) const override {
    Matrix out = Matrix::Zero(m_, param_dim());
    for (Index i = 0; i < m_; ++i) out(i, slot(n, i)) = 1.0;
    return out;
  }

 private:
  Index slot(Index n, Index i) const { return i * symbols_ + y_[std::size_t(n)]; }
  std::vector<int> y_;
  Index symbols_;
};

class SoftmaxFullModel final : public HmmModel {
 public:
  SoftmaxFullModel(std::vector<double> observations, const HmmOptions& opt)
      : m_(opt.states),
        n_(detail::checked_transitions(observations.size())),
        y_(std::move(observations)),
        sigma_(opt.sigma) {
    if (m_ < 1) throw ConfigError("states: must be >= 1");
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw ConfigError("sigma: must be > 0");
  }

  Index num_states() const override { return m_; }
  Index param_dim() const override { return m_ * (m_ - 1) + (m_ - 1) + m_; }
  Index num_transitions() const override { return n_; }

  Index rho_offset() const { return m_ * (m_ - 1); }
  Index mean_offset() const { return rho_offset() + m_ - 1; }

  Vector rho(const Vector& psi) const override {
    return softmax_pinned(psi.segment(rho_offset(), m_ - 1));
  }
  Matrix rho_jac(const Vector& psi) const override {
    Matrix out = Matrix::Zero(m_, param_dim());
    const Vector p = rho(psi);
    for (Index l = 0; l + 1 < m_; ++l)
      for (Index i = 0; i < m_; ++i)
        out(i, rho_offset() + l) = p(i) * ((i == l ? 1.0 : 0.0) - p(l));
    return out;
  }

  Matrix gamma(Index, const Vector& psi) const override {
    Matrix g(m_, m_);
    for (Index j = 0; j < m_; ++j) g.col(j) = softmax_pinned(psi.segment(j * (m_ - 1), m_ - 1));
    return g;
  }
  std::vector<Matrix> gamma_jac(Index n, const Vector& psi) const override {
    const Matrix g = gamma(n, psi);
    std::vector<Matrix> out(std::size_t(param_dim()), Matrix::Zero(m_, m_));
    for (Index j = 0; j < m_; ++j)
      for (Index l = 0; l + 1 < m_; ++l) {
        Matrix& slice = out[std::size_t(j * (m_ - 1) + l)];
        for (Index i = 0; i < m_; ++i)
          slice(i, j) = g(i, j) * ((i == l ? 1.0 : 0.0) - g(l, j));
      }
    return out;
  }
  Matrix gamma_jac_times(Index n, const Vector& psi, const Vector& x) const override {
    const Matrix g = gamma(n, psi);
    Matrix out = Matrix::Zero(m_, param_dim());
    for (Index j = 0; j < m_; ++j)
      for (Index l = 0; l + 1 < m_; ++l)
        for (Index i = 0; i < m_; ++i)
          out(i, j * (m_ - 1) + l) = g(i, j) * ((i == l ? 1.0 : 0.0) - g(l, j)) * x(j);
    return out;
  }

  Vector omega(Index n, const Vector& psi) const override {
    Vector out(m_);
    for (Index i = 0; i < m_; ++i)
      out(i) = normal_density(y_[std::size_t(n)], psi(mean_offset() + i), sigma_);
    return out;
  }
  Matrix omega_jac(Index n, const Vector& psi) const override {
    Matrix out = Matrix::Zero(m_, param_dim());
    const double y = y_[std::size_t(n)];
    for (Index i = 0; i < m_; ++i) {
      const double mu = psi(mean_offset() + i);
      out(i, mean_offset() + i) = normal_density(y, mu, sigma_) * (y - mu) / (sigma_ * sigma_);
    }
    return out;
  }

 private:
  Index m_, n_;
  std::vector<double> y_;
  double sigma_;
};

inline const std::vector<std::string>& builtin_hmm_names() {
  static const std::vector<std::string> names{"gaussian-means", "softmax-full",
                                              "emission-table"};
  return names;
}

/// Builds a parameterization over real-valued observations. emission-table
/// requires every observation to be an integer symbol.
inline std::unique_ptr<HmmModel> builtin_hmm(std::string_view parameterization,
                                             const HmmOptions& opt,
                                             const std::vector<double>& observations) {
  if (parameterization == "gaussian-means")
    return std::make_unique<GaussianMeansModel>(observations, opt);
  if (parameterization == "softmax-full")
    return std::make_unique<SoftmaxFullModel>(observations, opt);
  if (parameterization == "emission-table") {
    std::vector<int> symbols;
    symbols.reserve(observations.size());
    for (double y : observations) {
      if (y != std::floor(y) || !std::isfinite(y))
        throw ConfigError("observations: emission-table needs integer symbols");
      symbols.push_back(static_cast<int>(y));
    }
    return std::make_unique<EmissionTableModel>(std::move(symbols), opt);
  }
  throw ConfigError("parameterization: unknown '" + std::string(parameterization) + "'");
}

}  // namespace seqadj::hmm
