// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "test_support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace seqadj;
using testing_support::max_rel_diff;
using testing_support::rel_diff;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass = pass && ok;
  }
};

SystemOptions opts(Index m, Index k, Index n, std::uint64_t seed = 7) {
  SystemOptions o;
  o.state_dim = m;
  o.param_dim = k;
  o.horizon = n;
  o.seed = seed;
  return o;
}

const char* const kParameterizations[] = {"gaussian-means", "softmax-full"};

// 1. Three-way gradient agreement on 20 seeded random-smooth systems.
void three_way_agreement(Outcome& o) {
  const auto t0 = Clock::now();
  double worst_af = 0.0, worst_fd = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = testing_support::random_case(seed);
    const GradientReport adj = gradient_adjoint(*c.system, *c.functional, c.psi);
    const GradientReport fwd = gradient_forward(*c.system, *c.functional, c.psi);
    const GradientReport fd = gradient_fd(*c.system, *c.functional, c.psi);
    const double af = max_rel_diff(adj.gradient, fwd.gradient);
    worst_af = std::max(worst_af, af);
    const CheckReport ra = compare_gradients(adj, fd, 1e-6, 1e-9);
    const CheckReport rf = compare_gradients(fwd, fd, 1e-6, 1e-9);
    worst_fd = std::max({worst_fd, ra.max_rel_err, rf.max_rel_err});
    const std::string tag = "seed " + std::to_string(seed);
    o.require(af <= 1e-10, tag + " adjoint vs forward");
    o.require(ra.pass && rf.pass, tag + " vs fd");
  }
  const double t = seconds_since(t0);
  o.require(t < 10.0, "runtime");
  o.detail << "adjoint/forward max rel " << worst_af << ", vs fd max rel " << worst_fd
           << ", " << t << " s";
}

// 2. Linear system, psi = 1, N = 3: J = 7, dJ/dpsi = 5.
void closed_form_linear(Outcome& o) {
  auto s = builtin_system("linear", opts(1, 1, 3));
  auto f = builtin_functional("sum", opts(1, 1, 3));
  const Vector psi = Vector::Ones(1);
  const GradientReport adj = gradient_adjoint(*s, *f, psi);
  const GradientReport fwd = gradient_forward(*s, *f, psi);
  const GradientReport fd = gradient_fd(*s, *f, psi);
  o.require(adj.value == 7.0 && fwd.value == 7.0 && fd.value == 7.0, "value 7");
  o.require(adj.gradient(0) == 5.0, "adjoint exact");
  o.require(fwd.gradient(0) == 5.0, "forward exact");
  o.require(std::abs(fd.gradient(0) - 5.0) <= 1e-8, "fd within 1e-8");
  o.detail << "adjoint " << adj.gradient(0) << ", forward " << fwd.gradient(0) << ", fd "
           << fd.gradient(0);
}

// 3. Forward algorithm equals path enumeration; running example gives 0.298.
void hmm_enumeration(Outcome& o) {
  double worst = 0.0;
  for (const auto* name : kParameterizations)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Index m = 1 + Index(seed % 3), n = 1 + Index(seed % 8);
      auto h = testing_support::random_hmm(name, seed, m, n);
      const double lik = hmm::forward_pass(*h.model, h.psi).likelihood;
      const double d = std::max(rel_diff(lik, hmm::brute_force_likelihood(*h.model, h.psi)),
                                rel_diff(lik, testing_support::enumerate_paths(*h.model, h.psi)));
      worst = std::max(worst, d);
      o.require(d <= 1e-13, std::string(name) + " seed " + std::to_string(seed));
    }
  auto model = testing_support::running_example();
  const Vector psi = testing_support::running_example_psi();
  const double hand = 0.5 * 0.8 * 0.9 * 0.6 + 0.5 * 0.8 * 0.1 * 0.4 + 0.5 * 0.3 * 0.2 * 0.6 +
                      0.5 * 0.3 * 0.8 * 0.4;
  const double lik = hmm::forward_pass(*model, psi).likelihood;
  o.require(rel_diff(lik, hand) <= 1e-15 && rel_diff(lik, 0.298) <= 1e-15, "running example");
  o.detail << "max rel " << worst << ", running example L = " << lik;
}

// 4. Adjoint HMM gradient equals the product-rule derivation and FD.
void hmm_dual_derivation(Outcome& o) {
  double worst_prod = 0.0, worst_fd = 0.0;
  for (const auto* name : kParameterizations)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Index m = 1 + Index(seed % 3), n = 1 + Index((seed * 7) % 30);
      auto h = testing_support::random_hmm(name, seed, m, n);
      const GradientReport adj = hmm::gradient_adjoint_hmm(*h.model, h.psi);
      const GradientReport prod = hmm::gradient_product_rule(*h.model, h.psi);
      const GradientReport fd = hmm::gradient_fd_likelihood(*h.model, h.psi);
      const double dp = max_rel_diff(adj.gradient, prod.gradient);
      const double df = max_rel_diff(adj.gradient, fd.gradient);
      worst_prod = std::max(worst_prod, dp);
      worst_fd = std::max(worst_fd, df);
      const std::string tag = std::string(name) + " seed " + std::to_string(seed);
      o.require(dp <= 1e-12, tag + " product rule");
      o.require(df <= 1e-6, tag + " fd");
    }
  auto model = testing_support::running_example();
  const Vector g = hmm::gradient_adjoint_hmm(*model, testing_support::running_example_psi()).gradient;
  o.require(std::abs(g(1) - 0.39) <= 1e-15, "omega_1 spot check");
  o.require(std::abs(g(0) - 0.29) <= 1e-15, "omega_0 spot check");
  o.detail << "product max rel " << worst_prod << ", fd max rel " << worst_fd
           << ", spot checks " << g(1) << " and " << g(0);
}

// 5. Terminal adjoint, bridge substitution identity, forward-backward consistency.
void structural_identities(Outcome& o) {
  for (const auto& name : builtin_system_names())
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto c = testing_support::random_case(seed, name);
      const AdjointSequence lam =
          solve_adjoint(*c.system, *c.functional, forward_solve(*c.system, c.psi), c.psi);
      o.require((lam[lam.size() - 1].array() == 0.0).all(), name + " terminal adjoint");
    }
  double worst_kappa = 0.0, worst_fb = 0.0;
  for (const auto* name : kParameterizations)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto h = testing_support::random_hmm(name, seed, 1 + Index(seed % 3), 1 + Index(seed % 25));
      const auto bridge = hmm::as_difference_system(*h.model);
      const AdjointSequence lam = solve_adjoint(
          *bridge.system, *bridge.functional, forward_solve(*bridge.system, h.psi), h.psi);
      const hmm::KappaSequence kap = hmm::backward_pass(*h.model, h.psi);
      for (Index n = 0; n < lam.size(); ++n) {
        const Vector diff = (Vector::Ones(lam[n].size()) - lam[n]) - kap.kappa[std::size_t(n)];
        worst_kappa = std::max(worst_kappa, diff.cwiseAbs().maxCoeff());
      }
      const hmm::AlphaSequence a = hmm::forward_pass(*h.model, h.psi);
      const auto b = hmm::backward_states(*h.model, h.psi);
      for (std::size_t n = 0; n < b.size(); ++n)
        worst_fb = std::max(worst_fb, rel_diff(b[n].dot(a.alpha[n]), a.likelihood));
    }
  o.require(worst_kappa <= 1e-13, "1 - lambda = kappa");
  o.require(worst_fb <= 1e-12, "b^T alpha = L");
  o.detail << "|1 - lambda - kappa| max " << worst_kappa << ", b^T alpha vs L max rel "
           << worst_fb;
}

// Ratio of median per-call times of `a` and `b`. The two are sampled in
// alternation so machine drift hits both alike; each sample loops for at
// least 25 ms.
double median_ratio(const std::function<void()>& a, const std::function<void()>& b, int reps) {
  auto calls_for = [](const std::function<void()>& f) {
    f();
    const auto t0 = Clock::now();
    f();
    return std::max(1, int(25e-3 / std::max(seconds_since(t0), 1e-9)));
  };
  const int na = calls_for(a), nb = calls_for(b);
  auto sample = [](const std::function<void()>& f, int calls) {
    const auto t0 = Clock::now();
    for (int i = 0; i < calls; ++i) f();
    return seconds_since(t0) / calls;
  };
  std::vector<double> ta, tb;
  for (int r = 0; r < reps; ++r) {
    ta.push_back(sample(a, na));
    tb.push_back(sample(b, nb));
  }
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  return ta[ta.size() / 2] / tb[tb.size() / 2];
}

// 6. Exact work counts, crossover values, monotone wall-clock ratio.
void scaling(Outcome& o) {
  const auto t0 = Clock::now();
  for (Index m : {1, 2, 4, 5})
    for (Index k : {1, 2, 8, 32})
      for (Index n : {1, 10, 200}) {
        auto s = builtin_system("random-smooth", opts(m, k, n));
        auto f = builtin_functional("quadratic", opts(m, k, n));
        const Vector psi = Vector::Constant(k, 0.1);
        o.require(count_operations(GradientMethod::forward, *s, *f, psi).scalar_units ==
                      n * m * (1 + k),
                  "forward units");
        o.require(count_operations(GradientMethod::adjoint, *s, *f, psi).scalar_units ==
                      n * (2 * m + k),
                  "adjoint units");
      }
  for (Index m = 3; m <= 64; ++m) o.require(crossover_check(m) == 2, "crossover M >= 3");
  o.require(crossover_check(2) == 3, "crossover M = 2");

  const Index m = 4, n = 2000;
  const Index ks[] = {1, 2, 8, 32};
  std::vector<double> ratios;
  bool monotone = false;
  for (int attempt = 0; attempt < 2 && !monotone; ++attempt) {
    ratios.clear();
    for (Index k : ks) {
      auto s = builtin_system("random-smooth", opts(m, k, n));
      auto f = builtin_functional("quadratic", opts(m, k, n));
      const Vector psi = Vector::Constant(k, 0.1);
      ratios.push_back(median_ratio([&] { (void)gradient_forward(*s, *f, psi); },
                                    [&] { (void)gradient_adjoint(*s, *f, psi); }, 5));
    }
    monotone = std::is_sorted(ratios.begin(), ratios.end());
    if (!monotone) o.detail << "attempt " << attempt + 1 << " not monotone; ";
  }
  o.require(monotone, "wall-clock ratio nondecreasing in K");
  const double t = seconds_since(t0);
  o.require(t < 60.0, "runtime");
  o.detail << "time(forward)/time(adjoint) at K=1,2,8,32: ";
  for (double r : ratios) o.detail << r << " ";
  o.detail << "(" << t << " s)";
}

// 7. Stacked vjp_final_state rows reproduce the final sensitivity matrix.
void vjp_consistency(Outcome& o) {
  double worst = 0.0;
  for (const auto& name : builtin_system_names())
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto c = testing_support::random_case(seed, name);
      const Index m = c.system->state_dim();
      const Matrix eta = propagate_sensitivities(*c.system, c.psi, forward_solve(*c.system, c.psi))
                             .final_sensitivity();
      Matrix stacked(m, c.psi.size());
      for (Index i = 0; i < m; ++i)
        stacked.row(i) = vjp_final_state(*c.system, c.psi, Vector::Unit(m, i)).transpose();
      const double d = max_rel_diff(stacked, eta);
      worst = std::max(worst, d);
      o.require(d <= 1e-10, name + " seed " + std::to_string(seed));
    }
  o.detail << "max rel " << worst << " over " << builtin_system_names().size() << " built-ins";
}

// 8. Scaled log-likelihood path.
void scaled_path(Outcome& o) {
  double worst = 0.0;
  for (const auto* name : kParameterizations)
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto h = testing_support::random_hmm(name, seed, 1 + Index(seed % 3), 1 + Index((seed * 13) % 50));
      const hmm::ScaledResult s = hmm::scaled_log_likelihood(*h.model, h.psi);
      const GradientReport adj = hmm::gradient_adjoint_hmm(*h.model, h.psi);
      const double d = max_rel_diff(s.gradient * adj.value, adj.gradient);
      worst = std::max(worst, d);
      o.require(d <= 1e-10, std::string(name) + " seed " + std::to_string(seed));
    }
  auto h = testing_support::random_hmm("gaussian-means", 1, 2, 10000);
  bool underflow = false;
  try {
    (void)hmm::gradient_adjoint_hmm(*h.model, h.psi);
  } catch (const NumericalError&) {
    underflow = true;
  }
  const hmm::ScaledResult s = hmm::scaled_log_likelihood(*h.model, h.psi);
  o.require(underflow, "unscaled path should underflow at N = 10^4");
  o.require(std::isfinite(s.log_likelihood) && s.gradient.allFinite(), "scaled finite");
  o.detail << "max rel " << worst << "; N = 10^4: unscaled "
           << (underflow ? "underflows" : "finite") << ", scaled log L = " << s.log_likelihood;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    void (*run)(Outcome&);
  };
  const Criterion criteria[] = {
      {1, "three-way gradient agreement", three_way_agreement},
      {2, "linear closed form", closed_form_linear},
      {3, "HMM enumeration equality", hmm_enumeration},
      {4, "HMM dual-derivation equality", hmm_dual_derivation},
      {5, "structural identities", structural_identities},
      {6, "work counts, crossover and wall-clock scaling", scaling},
      {7, "VJP consistency", vjp_consistency},
      {8, "scaled HMM path", scaled_path},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    o.detail.precision(3);
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s criterion %d: %s (%s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}
