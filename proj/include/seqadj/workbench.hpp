#pragma once

// Exact operation counting and wall-clock benchmarks for the forward
// sensitivity and adjoint gradient methods.

#include "seqadj/builtin_systems.hpp"
#include "seqadj/core_model.hpp"
#include "seqadj/discrete_adjoint.hpp"
#include "seqadj/forward_sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqadj {

/// Forwards every call to `inner` and counts it. Counters are atomic so the
/// wrapper stays shareable across threads like the system it wraps.
class CountingSystem final : public DifferenceSystem {
 public:
  explicit CountingSystem(const DifferenceSystem& inner) : inner_(inner) {}

  struct Counts {
    std::int64_t delta = 0, jac_state = 0, jac_param = 0, vjp_state = 0, vjp_param = 0,
                 initial = 0, initial_jac = 0;
  };

  Counts counts() const {
    return {delta_.load(), jac_state_.load(), jac_param_.load(), vjp_state_.load(),
            vjp_param_.load(), initial_.load(), initial_jac_.load()};
  }

  Index state_dim() const override { return inner_.state_dim(); }
  Index param_dim() const override { return inner_.param_dim(); }
  Index horizon() const override { return inner_.horizon(); }

  Vector delta(Index n, const Vector& u, const Vector& psi) const override {
    ++delta_;
    return inner_.delta(n, u, psi);
  }
  Matrix jac_state(Index n, const Vector& u, const Vector& psi) const override {
    ++jac_state_;
    return inner_.jac_state(n, u, psi);
  }
  Matrix jac_param(Index n, const Vector& u, const Vector& psi) const override {
    ++jac_param_;
    return inner_.jac_param(n, u, psi);
  }
  Vector vjp_state(Index n, const Vector& u, const Vector& psi, const Vector& v) const override {
    ++vjp_state_;
    return inner_.vjp_state(n, u, psi, v);
  }
  Vector vjp_param(Index n, const Vector& u, const Vector& psi, const Vector& v) const override {
    ++vjp_param_;
    return inner_.vjp_param(n, u, psi, v);
  }
  Vector initial(const Vector& psi) const override {
    ++initial_;
    return inner_.initial(psi);
  }
  Matrix initial_jac(const Vector& psi) const override {
    ++initial_jac_;
    return inner_.initial_jac(psi);
  }

 private:
  const DifferenceSystem& inner_;
  mutable std::atomic<std::int64_t> delta_{0}, jac_state_{0}, jac_param_{0}, vjp_state_{0},
      vjp_param_{0}, initial_{0}, initial_jac_{0};
};

inline std::int64_t forward_cost_units(Index m, Index k, Index n) { return n * m * (1 + k); }
inline std::int64_t adjoint_cost_units(Index m, Index k, Index n) { return n * (2 * m + k); }

/// Converts raw call counts into a WorkCount under the unit-cost model:
/// a delta evaluation or state VJP costs M, a Jacobian-sensitivity product
/// costs M*K, a parameter VJP costs K.
inline WorkCount to_work_count(const CountingSystem::Counts& c, Index m, Index k) {
  WorkCount w;
  w.delta_evals = c.delta;
  w.state_jvp_or_jac_uses = c.jac_state;
  w.state_vjps = c.vjp_state;
  w.param_jacobian_uses = c.jac_param;
  w.param_vjps = c.vjp_param;
  w.scalar_units = c.delta * m + c.vjp_state * m + c.jac_state * m * k + c.vjp_param * k;
  return w;
}

/// Runs `method` through an instrumented wrapper and returns the exact counts.
/// For the adjoint method, throws std::logic_error if the backward solve
/// touches any parameter Jacobian or parameter VJP.
inline WorkCount count_operations(GradientMethod method, const DifferenceSystem& system,
                                  const SummandFunctional& functional, const Vector& psi) {
  CountingSystem counted(system);
  const Index m = system.state_dim();
  const Index k = system.param_dim();
  switch (method) {
    case GradientMethod::forward:
      gradient_forward(counted, functional, psi);
      break;
    case GradientMethod::adjoint: {
      const Trajectory traj = forward_solve(counted, psi);
      const auto before = counted.counts();
      const AdjointSequence adj = solve_adjoint(counted, functional, traj, psi);
      const auto after = counted.counts();
      if (after.jac_param != before.jac_param || after.vjp_param != before.vjp_param)
        throw std::logic_error("adjoint solve touched parameter derivatives");
      assemble_gradient(counted, functional, traj, adj, psi);
      break;
    }
    default:
      throw ConfigError("count_operations: unknown method '" + std::string(to_string(method)) +
                        "' (expected forward or adjoint)");
  }
  return to_work_count(counted.counts(), m, k);
}

/// Smallest K for which the adjoint method's N*(2M+K) units undercut forward
/// sensitivities' N*M*(1+K). Strict inequality, so M = 2 gives 3. Returns
/// nullopt when M < 2: with one state the forward method always wins.
inline std::optional<Index> crossover_check(Index m, Index n = 1) {
  if (n < 1) throw ConfigError("crossover_check: N must be >= 1");
  if (m < 2) return std::nullopt;
  for (Index k = 1;; ++k)
    if (adjoint_cost_units(m, k, n) < forward_cost_units(m, k, n)) return k;
}

struct BenchGrid {
  std::vector<Index> states;  // M
  std::vector<Index> params;  // K
  std::vector<Index> horizons;  // N
};

struct BenchRecord {
  GradientMethod method = GradientMethod::forward;
  Index m = 0, k = 0, n = 0;
  int repetitions = 0;
  double median_seconds = 0.0;
  std::int64_t scalar_units = 0;
  bool skipped = false;
};

struct BenchOptions {
  int repetitions = 5;
  double cell_budget_seconds = 30.0;  // warm-up slower than this skips the cell
  double min_sample_seconds = 1e-2;   // each repetition loops until this long
  std::uint64_t seed = 7;
};

namespace detail {

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

template <class F>
double seconds_of(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Median per-call seconds over `reps` samples after one warm-up call, or
/// nullopt when the warm-up exceeds the budget.
template <class F>
std::optional<double> time_call(F&& call, const BenchOptions& opt) {
  const double warm = seconds_of(call);
  if (warm > opt.cell_budget_seconds) return std::nullopt;
  const int inner = warm >= opt.min_sample_seconds
                        ? 1
                        : int(std::ceil(opt.min_sample_seconds / std::max(warm, 1e-9)));
  std::vector<double> samples;
  samples.reserve(std::size_t(opt.repetitions));
  for (int r = 0; r < opt.repetitions; ++r)
    samples.push_back(seconds_of([&] {
                        for (int i = 0; i < inner; ++i) call();
                      }) /
                      inner);
  return median(std::move(samples));
}

}  // namespace detail

/// Times both methods on the "random-smooth" system (and seeded quadratic
/// functional) at every grid point. Cells run sequentially in grid order
/// (M, then K, then N), forward before adjoint.
inline std::vector<BenchRecord> bench_run(const BenchGrid& grid, const BenchOptions& opt = {}) {
  if (grid.states.empty() || grid.params.empty() || grid.horizons.empty())
    throw ConfigError("bench grid must be nonempty in M, K and N");
  if (opt.repetitions < 3) throw ConfigError("bench repetitions must be >= 3");

  std::vector<BenchRecord> out;
  for (Index m : grid.states)
    for (Index k : grid.params)
      for (Index n : grid.horizons) {
        SystemOptions so;
        so.state_dim = m;
        so.param_dim = k;
        so.horizon = n;
        so.seed = opt.seed;
        const auto system = builtin_system("random-smooth", so);
        const auto functional = builtin_functional("quadratic", so);
        std::mt19937_64 rng(opt.seed + 1);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector psi(k);
        for (Index i = 0; i < k; ++i) psi(i) = dist(rng);

        for (GradientMethod method : {GradientMethod::forward, GradientMethod::adjoint}) {
          BenchRecord rec;
          rec.method = method;
          rec.m = m;
          rec.k = k;
          rec.n = n;
          rec.repetitions = opt.repetitions;
          rec.scalar_units = count_operations(method, *system, *functional, psi).scalar_units;
          auto call = [&] {
            if (method == GradientMethod::forward)
              (void)gradient_forward(*system, *functional, psi);
            else
              (void)gradient_adjoint(*system, *functional, psi);
          };
          const auto t = detail::time_call(call, opt);
          rec.skipped = !t.has_value();
          rec.median_seconds = t.value_or(0.0);
          out.push_back(rec);
        }
      }
  return out;
}

/// CSV with header `method,M,K,N,reps,median_seconds,scalar_units`. Skipped
/// cells print `skipped` in the time column.
inline void write_bench_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << "method,M,K,N,reps,median_seconds,scalar_units\n";
  for (const auto& r : records) {
    os << to_string(r.method) << ',' << r.m << ',' << r.k << ',' << r.n << ','
       << r.repetitions << ',';
    if (r.skipped)
      os << "skipped";
    else
      os << std::setprecision(6) << std::scientific << r.median_seconds
         << std::defaultfloat;
    os << ',' << r.scalar_units << '\n';
  }
}

}  // namespace seqadj
