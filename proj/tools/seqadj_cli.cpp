// seqadj: gradients of sequence functionals from the command line.
//
//   seqadj grad  --system linear --psi 1.0 --n 3 --method adjoint
//   seqadj check --system random-smooth --seed 7 --m 3 --k 4 --n 20
//   seqadj bench --m 4 --k 1,2,8 --n 500 --reps 3 --out bench.csv
//   seqadj hmm   --config model.json --method adjoint [--log]
//
// Exit codes: 0 success, 1 numerical failure (or failed check), 2 bad arguments.
// Machine-readable output goes to stdout; diagnostics go to stderr.

#include "seqadj/seqadj.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace {

using seqadj::Index;
using seqadj::Vector;

constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

std::string fmt_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_vector(const Vector& v) {
  std::string out = "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(v(i));
  }
  return out + "]";
}

std::string fmt_work(const seqadj::WorkCount& w) {
  std::ostringstream os;
  os << "{\"delta_evals\": " << w.delta_evals
     << ", \"state_jvp_or_jac_uses\": " << w.state_jvp_or_jac_uses
     << ", \"state_vjps\": " << w.state_vjps
     << ", \"param_jacobian_uses\": " << w.param_jacobian_uses
     << ", \"param_vjps\": " << w.param_vjps << ", \"scalar_units\": " << w.scalar_units
     << "}";
  return os.str();
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SEQADJOINT_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw seqadj::ConfigError("SEQADJOINT_SEED must be a non-negative integer");
  }
  return 7;
}

/// Flags shared by grad and check. Unset flags fall back to --config, then
/// to defaults.
struct SystemArgs {
  std::string config;
  std::optional<std::string> system;
  std::optional<std::string> functional;
  std::vector<double> psi;
  std::optional<long> n, m, k;
  std::optional<std::uint64_t> seed;
  std::optional<double> upsilon, eps;
};

void add_system_flags(CLI::App* cmd, SystemArgs& a) {
  cmd->add_option("--config", a.config, "JSON file with system settings");
  cmd->add_option("--system", a.system, "built-in system name");
  cmd->add_option("--functional", a.functional, "summand: sum | zero | quadratic (default sum)");
  cmd->add_option("--psi", a.psi, "parameter values")->delimiter(',');
  cmd->add_option("--n", a.n, "horizon N (>= 1)");
  cmd->add_option("--m", a.m, "state dimension M");
  cmd->add_option("--k", a.k, "parameter dimension K");
  cmd->add_option("--seed", a.seed, "seed for random systems and default psi");
  cmd->add_option("--upsilon", a.upsilon, "constant initial state");
  cmd->add_option("--eps", a.eps, "dynamics scale of the broken fixture");
}

struct ResolvedSystem {
  std::unique_ptr<seqadj::DifferenceSystem> system;
  std::unique_ptr<seqadj::SummandFunctional> functional;
  Vector psi;
};

ResolvedSystem resolve(const SystemArgs& a) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw seqadj::ConfigError("cannot open config '" + a.config + "'");
    try {
      in >> cfg;
    } catch (const nlohmann::json::exception& e) {
      throw seqadj::ConfigError("config: invalid JSON: " + std::string(e.what()));
    }
    static const std::vector<std::string> known{"system", "functional", "psi", "n", "m",
                                                "k", "seed", "upsilon", "eps"};
    for (const auto& item : cfg.items())
      if (std::find(known.begin(), known.end(), item.key()) == known.end())
        throw seqadj::ConfigError("config field '" + item.key() + "': unknown field");
  }
  auto pick = [&](const auto& flag, const char* key, auto fallback) {
    using T = decltype(fallback);
    if (flag) return T(*flag);
    if (cfg.contains(key)) {
      try {
        return cfg[key].template get<T>();
      } catch (const nlohmann::json::exception&) {
        throw seqadj::ConfigError(std::string("config field '") + key + "': wrong type");
      }
    }
    return fallback;
  };

  const std::string name = pick(a.system, "system", std::string());
  if (name.empty()) throw seqadj::ConfigError("--system (or config 'system') is required");
  const std::string fname = pick(a.functional, "functional", std::string("sum"));

  seqadj::SystemOptions opt;
  opt.horizon = pick(a.n, "n", long(10));
  opt.state_dim = pick(a.m, "m", long(1));
  opt.seed = pick(a.seed, "seed", default_seed());
  opt.upsilon = pick(a.upsilon, "upsilon", 1.0);
  opt.eps = pick(a.eps, "eps", 1e-3);

  std::vector<double> psi = a.psi;
  if (psi.empty() && cfg.contains("psi")) {
    try {
      psi = cfg["psi"].get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw seqadj::ConfigError("config field 'psi': expected an array of numbers");
    }
  }
  const long k_default = psi.empty() ? 1 : long(psi.size());
  opt.param_dim = pick(a.k, "k", k_default);

  if (opt.horizon < 1) throw seqadj::ConfigError("horizon must be >= 1 (got --n " +
                                                 std::to_string(opt.horizon) + ")");
  if (opt.state_dim < 1 || opt.param_dim < 1)
    throw seqadj::ConfigError("--m and --k must be >= 1");

  ResolvedSystem out;
  out.system = seqadj::builtin_system(name, opt);
  out.functional = seqadj::builtin_functional(fname, opt);
  if (psi.empty()) {
    std::mt19937_64 rng(opt.seed + 1);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    out.psi.resize(opt.param_dim);
    for (Index i = 0; i < opt.param_dim; ++i) out.psi(i) = dist(rng);
  } else {
    if (Index(psi.size()) != opt.param_dim)
      throw seqadj::ConfigError("--psi has " + std::to_string(psi.size()) +
                                " values but K = " + std::to_string(opt.param_dim));
    out.psi = Eigen::Map<const Vector>(psi.data(), Index(psi.size()));
  }
  return out;
}

seqadj::GradientReport run_method(const std::string& method, const ResolvedSystem& r,
                                  std::optional<double> step = std::nullopt) {
  if (method == "adjoint") return seqadj::gradient_adjoint(*r.system, *r.functional, r.psi);
  if (method == "forward") return seqadj::gradient_forward(*r.system, *r.functional, r.psi);
  if (method == "fd") return seqadj::gradient_fd(*r.system, *r.functional, r.psi, step);
  throw seqadj::ConfigError("unknown method '" + method + "'");
}

int cmd_grad(const SystemArgs& args, const std::string& method, std::optional<double> step) {
  const ResolvedSystem r = resolve(args);
  const auto report = run_method(method, r, step);
  std::cout << "{\"value\": " << fmt_double(report.value)
            << ", \"gradient\": " << fmt_vector(report.gradient) << ", \"method\": \""
            << seqadj::to_string(report.method) << "\", \"work\": " << fmt_work(report.work)
            << "}\n";
  return 0;
}

int cmd_check(const SystemArgs& args, double rtol, double atol) {
  const ResolvedSystem r = resolve(args);
  const auto adj = run_method("adjoint", r);
  const auto fwd = run_method("forward", r);
  const auto fd = run_method("fd", r);

  struct Pair {
    const char* name;
    const seqadj::GradientReport& a;
    const seqadj::GradientReport& b;
  };
  const Pair pairs[] = {{"adjoint-forward", adj, fwd},
                        {"adjoint-fd", adj, fd},
                        {"forward-fd", fwd, fd}};
  bool ok = true;
  std::printf("%-16s %-5s %-24s %-24s %s\n", "pair", "pass", "max_abs_err", "max_rel_err",
              "worst_index");
  for (const auto& p : pairs) {
    const auto rep = seqadj::compare_gradients(p.a, p.b, rtol, atol);
    ok = ok && rep.pass;
    std::printf("%-16s %-5s %-24s %-24s %ld\n", p.name, rep.pass ? "yes" : "no",
                fmt_double(rep.max_abs_err).c_str(), fmt_double(rep.max_rel_err).c_str(),
                long(rep.worst_index));
  }
  std::printf("rtol %s atol %s: %s\n", fmt_double(rtol).c_str(), fmt_double(atol).c_str(),
              ok ? "all pairs agree" : "MISMATCH");
  return ok ? 0 : kExitNumerical;
}

int cmd_bench(const std::vector<long>& ms, const std::vector<long>& ks,
              const std::vector<long>& ns, int reps, const std::string& out_path,
              double budget, std::optional<std::uint64_t> seed) {
  if (reps < 3) throw seqadj::ConfigError("--reps must be >= 3");
  auto positive = [](const std::vector<long>& xs, const char* flag) {
    if (xs.empty()) throw seqadj::ConfigError(std::string(flag) + " needs at least one value");
    std::vector<Index> out;
    for (long x : xs) {
      if (x < 1) throw seqadj::ConfigError(std::string(flag) + " values must be >= 1");
      out.push_back(x);
    }
    return out;
  };
  seqadj::BenchGrid grid{positive(ms, "--m"), positive(ks, "--k"), positive(ns, "--n")};
  seqadj::BenchOptions opt;
  opt.repetitions = reps;
  opt.cell_budget_seconds = budget;
  opt.seed = seed ? *seed : default_seed();

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "seqadj bench: cannot write '" << out_path << "'\n";
    return kExitNumerical;
  }
  const auto records = seqadj::bench_run(grid, opt);
  seqadj::write_bench_csv(out, records);
  out.flush();
  if (!out) {
    std::cerr << "seqadj bench: write to '" << out_path << "' failed\n";
    return kExitNumerical;
  }
  for (Index m : grid.states) {
    const auto k = seqadj::crossover_check(m, grid.horizons.front());
    std::cout << "crossover M=" << m << " K=" << (k ? std::to_string(*k) : "none") << '\n';
  }
  return 0;
}

int cmd_hmm(const std::string& config, const std::string& method, bool log_scale) {
  namespace hmm = seqadj::hmm;
  const hmm::HmmSetup setup = hmm::load_hmm_config(config);
  const auto& model = *setup.model;
  const Vector& psi = setup.psi;

  if (method == "enum") {
    const double lik = hmm::brute_force_likelihood(model, psi);
    std::cout << "{";
    if (log_scale)
      std::cout << "\"log_likelihood\": " << fmt_double(std::log(lik));
    else
      std::cout << "\"likelihood\": " << fmt_double(lik);
    if (model.param_dim() <= 8) {
      Vector g = seqadj::central_difference_gradient(
          [&](const Vector& p) { return hmm::brute_force_likelihood(model, p); }, psi);
      if (log_scale) g /= lik;
      std::cout << ", \"gradient\": " << fmt_vector(g);
    }
    std::cout << ", \"method\": \"enum\"}\n";
    return 0;
  }

  if (log_scale && method == "adjoint") {
    const auto res = hmm::scaled_log_likelihood(model, psi);
    std::cout << "{\"log_likelihood\": " << fmt_double(res.log_likelihood)
              << ", \"gradient\": " << fmt_vector(res.gradient) << ", \"method\": \"adjoint\"}\n";
    return 0;
  }

  seqadj::GradientReport rep;
  if (method == "adjoint")
    rep = hmm::gradient_adjoint_hmm(model, psi);
  else if (method == "product")
    rep = hmm::gradient_product_rule(model, psi);
  else if (method == "fd")
    rep = hmm::gradient_fd_likelihood(model, psi);
  else
    throw seqadj::ConfigError("unknown method '" + method + "'");

  if (log_scale) {
    std::cout << "{\"log_likelihood\": " << fmt_double(std::log(rep.value))
              << ", \"gradient\": " << fmt_vector(rep.gradient / rep.value);
  } else {
    std::cout << "{\"likelihood\": " << fmt_double(rep.value)
              << ", \"gradient\": " << fmt_vector(rep.gradient);
  }
  std::cout << ", \"method\": \"" << method << "\"}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradients of functionals of discrete sequences"};
  app.require_subcommand(1);

  SystemArgs grad_args;
  std::string grad_method = "adjoint";
  std::optional<double> grad_step;
  auto* grad = app.add_subcommand("grad", "gradient of a built-in system's functional");
  add_system_flags(grad, grad_args);
  grad->add_option("--method", grad_method, "adjoint | forward | fd")
      ->check(CLI::IsMember({"adjoint", "forward", "fd"}));
  grad->add_option("--step", grad_step, "finite-difference step (fd only)");

  SystemArgs check_args;
  double rtol = 1e-8, atol = 1e-10;
  auto* check = app.add_subcommand("check", "compare adjoint, forward and fd gradients");
  add_system_flags(check, check_args);
  check->add_option("--rtol", rtol, "relative tolerance (default 1e-8)");
  check->add_option("--atol", atol, "absolute tolerance (default 1e-10)");

  std::vector<long> bench_m, bench_k, bench_n;
  int reps = 5;
  std::string bench_out;
  double budget = 30.0;
  std::optional<std::uint64_t> bench_seed;
  auto* bench = app.add_subcommand("bench", "time forward vs adjoint on random-smooth systems");
  bench->add_option("--m", bench_m, "state dimensions")->delimiter(',')->required();
  bench->add_option("--k", bench_k, "parameter counts")->delimiter(',')->required();
  bench->add_option("--n", bench_n, "horizons")->delimiter(',')->required();
  bench->add_option("--reps", reps, "repetitions per cell (>= 3)");
  bench->add_option("--out", bench_out, "CSV output path")->required();
  bench->add_option("--budget", budget, "per-cell time budget in seconds");
  bench->add_option("--seed", bench_seed, "system seed");

  std::string hmm_config, hmm_method = "adjoint";
  bool hmm_log = false;
  auto* hmm_cmd = app.add_subcommand("hmm", "HMM marginal likelihood and gradient");
  hmm_cmd->add_option("--config", hmm_config, "model JSON")->required();
  hmm_cmd->add_option("--method", hmm_method, "adjoint | product | fd | enum")
      ->check(CLI::IsMember({"adjoint", "product", "fd", "enum"}));
  hmm_cmd->add_flag("--log", hmm_log, "report log-likelihood and its gradient");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "seqadj: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*grad) return cmd_grad(grad_args, grad_method, grad_step);
    if (*check) return cmd_check(check_args, rtol, atol);
    if (*bench) return cmd_bench(bench_m, bench_k, bench_n, reps, bench_out, budget, bench_seed);
    if (*hmm_cmd) return cmd_hmm(hmm_config, hmm_method, hmm_log);
  } catch (const seqadj::ConfigError& e) {
    std::cerr << "seqadj: " << e.what() << '\n';
    return kExitUsage;
  } catch (const seqadj::DimensionError& e) {
    std::cerr << "seqadj: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "seqadj: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
