// sgrom: optimize | validate | compare

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "sgrom/config.hpp"
#include "sgrom/oracle.hpp"
#include "sgrom/problems.hpp"
#include "sgrom/report.hpp"
#include "sgrom/trust_region.hpp"
#include "sgrom/validation.hpp"

namespace fs = std::filesystem;
using namespace sgrom;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMaxIters = 2;
constexpr int kExitSolver = 3;
constexpr int kExitConfig = 4;
constexpr int kExitValidation = 1;

using Summary = std::vector<std::pair<std::string, std::string>>;

std::string fmt_vec(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
  return s;
}

void add_counters(Summary& s, const QueryCounters& c) {
  s.emplace_back("hdm_primal", std::to_string(c.hdm_primal));
  s.emplace_back("hdm_adjoint", std::to_string(c.hdm_adjoint));
  s.emplace_back("hdm_sensitivity", std::to_string(c.hdm_sensitivity));
  s.emplace_back("rom_primal", std::to_string(c.rom_primal));
  s.emplace_back("rom_adjoint", std::to_string(c.rom_adjoint));
  s.emplace_back("mean_hdm_iters", fmt(c.mean_hdm_iters()));
  s.emplace_back("mean_rom_iters", fmt(c.mean_rom_iters()));
  const std::vector<double> costs = cost_curve(c);
  const char* names[] = {"cost_tau_1", "cost_tau_10", "cost_tau_100", "cost_tau_inf"};
  for (std::size_t i = 0; i < costs.size(); ++i) s.emplace_back(names[i], fmt(costs[i]));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TrOutcome {
  TrustRegionResult result;
  double final_gradient = 0.0;
  double final_model = 0.0;
};

// Runs SG-ROM-TR with per-iteration report output. Solver failures leave
// the report prefix on disk and a summary with status = failed.
TrOutcome run_tr(const RunConfig& config, const ModelProblem& problem, const fs::path& dir) {
  RunReport report(dir, echo_config(config));
  AdaptSettings settings = config.adapt;
  settings.threads = config.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const Vector mu0 = config.initial_control(problem.param_dim());

  std::optional<TrustRegionState> state;
  try {
    state.emplace(tr_init(problem, config.trust_region, mu0, settings));
    state->ws.on_event = [&](const RefinementEvent& e) { report.event(e); };
    while (true) {
      const IterationRecord& rec = tr_iterate(*state, config.trust_region);
      report.iteration(*state, rec);
      std::cout << "k=" << rec.k << " |grad m|=" << fmt(rec.model_gradient_norm) << " delta=" << fmt(rec.delta)
                << " rho=" << fmt(rec.rho) << " " << rec.radius_branch << " grid=" << rec.grid_size
                << " basis=" << rec.basis_size << " hdm_primal=" << rec.counters.hdm_primal << std::endl;
      if (state->converged || state->k >= config.trust_region.max_iters) break;
    }
  } catch (const std::exception& e) {
    Summary s{{"status", "failed"}, {"error", e.what()}};
    if (state) {
      s.emplace_back("iteration", std::to_string(state->k));
      s.emplace_back("mu", fmt_vec(state->mu));
      s.emplace_back("delta", fmt(state->delta));
      s.emplace_back("grid_size", std::to_string(state->pair_grad.grid().size()));
      s.emplace_back("basis_size", std::to_string(state->pair_grad.basis().size()));
      add_counters(s, state->ws.counters);
      report.basis(state->pair_grad.basis());
    }
    report.summary(s);
    throw;
  }

  TrOutcome out;
  out.result.mu = state->mu;
  out.result.converged = state->converged;
  out.result.history = state->history;
  out.result.counters = state->ws.counters;
  out.result.events = state->ws.events;
  out.result.grid_size = state->pair_grad.grid().size();
  out.result.basis_size = state->pair_grad.basis().size();
  const IterationRecord& last = state->history.back();
  out.final_gradient = last.model_gradient_norm;
  out.final_model = last.accepted ? last.psi_trial : last.m_center;

  report.basis(state->pair_grad.basis());
  Summary s{{"status", state->converged ? "converged" : "max-iterations"},
            {"method", "sg-rom-tr"},
            {"problem", problem.name()},
            {"iterations", std::to_string(state->history.size())},
            {"initial_gradient_norm", fmt(state->history.front().model_gradient_norm)},
            {"final_gradient_norm", fmt(out.final_gradient)},
            {"final_mu", fmt_vec(state->mu)},
            {"grid_size", std::to_string(out.result.grid_size)},
            {"basis_size", std::to_string(out.result.basis_size)}};
  add_counters(s, state->ws.counters);
  if (config.reference_level > 0) {
    const TensorReference ref = tensor_reference(problem, state->mu, config.reference_level,
                                                 config.adapt.newton, config.threads);
    s.emplace_back("reference_level", std::to_string(config.reference_level));
    s.emplace_back("reference_objective", fmt(ref.value));
    s.emplace_back("reference_gradient_norm", fmt(ref.gradient.norm()));
  }
  s.emplace_back("seconds", fmt(seconds_since(t0)));
  report.summary(s);
  return out;
}

BaselineResult run_iso(const RunConfig& config, const ModelProblem& problem, const fs::path& dir, double gtol) {
  fs::create_directories(dir);
  {
    std::ofstream echo(dir / "config.echo");
    echo << echo_config(config);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const BaselineResult r =
      sg_iso_baseline(problem, config.initial_control(problem.param_dim()), config.baseline.level,
                      config.baseline.max_iters, gtol, config.adapt.newton, config.threads);
  write_baseline_history(dir / "history.csv", r);
  for (const BaselineIterate& it : r.history)
    std::cout << "k=" << it.k << " J=" << fmt(it.value) << " |grad J|=" << fmt(it.gradient_norm)
              << " hdm_primal=" << it.counters.hdm_primal << std::endl;
  Summary s{{"status", r.converged ? "converged" : (r.line_search_failed ? "line-search-failed" : "max-iterations")},
            {"method", "sg-iso"},
            {"problem", problem.name()},
            {"level", std::to_string(config.baseline.level)},
            {"nodes", std::to_string(r.nodes)},
            {"iterations", std::to_string(r.history.size())},
            {"gtol", fmt(gtol)},
            {"final_objective", fmt(r.value)},
            {"final_gradient_norm", fmt(r.gradient_norm)},
            {"final_mu", fmt_vec(r.mu)}};
  add_counters(s, r.counters);
  s.emplace_back("seconds", fmt(seconds_since(t0)));
  CsvWriter out(dir / "summary.csv", {"key", "value"});
  for (const auto& [k, v] : s) out.row({k, v});
  return r;
}

int cmd_optimize(const RunConfig& config, const fs::path& dir) {
  const auto problem = make_problem(config.problem, config);
  if (config.method == "sg-iso") {
    const double gtol = config.baseline.gtol > 0.0 ? config.baseline.gtol : config.trust_region.gtol;
    const BaselineResult r = run_iso(config, *problem, dir, gtol);
    return r.converged ? kExitOk : kExitMaxIters;
  }
  const TrOutcome r = run_tr(config, *problem, dir);
  return r.result.converged ? kExitOk : kExitMaxIters;
}

int cmd_validate(const RunConfig& config, const fs::path& dir) {
  fs::create_directories(dir);
  const ValidateConfig& v = config.validate;
  const LinearDiffusion linear(config.linear);
  const BurgersControl burgers(config.burgers);
  const CorruptedJacobian linear_c(linear, v.corrupt_jacobian);
  const CorruptedJacobian burgers_c(burgers, v.corrupt_jacobian);
  const bool corrupt = v.corrupt_jacobian != 1.0;
  const ModelProblem& lp = corrupt ? static_cast<const ModelProblem&>(linear_c) : linear;
  const ModelProblem& bp = corrupt ? static_cast<const ModelProblem&>(burgers_c) : burgers;
  const NewtonOptions& newton = config.adapt.newton;

  BoundValidation bounds;
  std::vector<SuiteResult> suites;
  suites.push_back(fd_gradient_suite({{&lp, v.fd_tol_linear}, {&bp, v.fd_tol_burgers}}, v.n_samples, v.fd_h,
                                     config.seed, v.mu_scale, newton));
  suites.push_back(quadrature_suite());
  suites.push_back(rom_property_suite(linear, config.seed, v.mu_scale, newton));
  suites.push_back(rom_property_suite(burgers, config.seed, v.mu_scale, newton));
  suites.push_back(bound_suite(linear, v.bound_samples, config.seed, v.mu_scale, v.max_median_factor, &bounds, newton));
  if (!bounds.samples.empty()) write_bound_samples(dir / "bounds.csv", bounds);

  CsvWriter out(dir / "validation.csv", {"suite", "status", "summary"});
  bool ok = true;
  for (const SuiteResult& s : suites) {
    const std::string status = !s.passed ? "FAIL" : (s.vacuous ? "PASS (vacuous)" : "PASS");
    std::cout << status << " " << s.name << ": " << s.summary << "\n";
    for (const std::string& f : s.failures) std::cout << "    " << f << "\n";
    if (s.vacuous) std::cerr << "warning: " << s.name << " checked no samples\n";
    out.row({s.name, status, s.summary});
    ok = ok && s.passed;
  }
  return ok ? kExitOk : kExitValidation;
}

int cmd_compare(const RunConfig& config, const fs::path& dir) {
  const auto problem = make_problem(config.problem, config);
  const TrOutcome tr = run_tr(config, *problem, dir / "sg-rom-tr");
  const double gtol = config.baseline.gtol > 0.0 ? config.baseline.gtol : tr.final_gradient;
  const BaselineResult iso = run_iso(config, *problem, dir / "sg-iso", gtol);

  // Objective against cumulative cost, one row per iteration and method.
  CsvWriter curve(dir / "compare.csv", {"method", "k", "objective", "gradient_norm", "hdm_primal", "cost_tau_1",
                                        "cost_tau_10", "cost_tau_100", "cost_tau_inf"});
  auto row = [&](const std::string& method, int k, double obj, double g, const QueryCounters& c) {
    std::vector<std::string> cells{method, std::to_string(k), fmt(obj), fmt(g), std::to_string(c.hdm_primal)};
    for (double x : cost_curve(c)) cells.push_back(fmt(x));
    curve.row(cells);
  };
  for (const IterationRecord& r : tr.result.history)
    row("sg-rom-tr", r.k, r.m_center, r.model_gradient_norm, r.counters);
  for (const BaselineIterate& it : iso.history) row("sg-iso", it.k, it.value, it.gradient_norm, it.counters);

  CsvWriter table(dir / "cost_table.csv", {"method", "tau", "cost", "hdm_primal", "final_gradient_norm"});
  std::cout << "\nmethod      tau      cost            hdm_primal\n";
  for (std::size_t i = 0; i < kCostTaus.size(); ++i) {
    const double tau = kCostTaus[i];
    const double c_tr = cost_metric(tr.result.counters, tau);
    const double c_iso = cost_metric(iso.counters, tau);
    table.row({"sg-rom-tr", fmt(tau), fmt(c_tr), std::to_string(tr.result.counters.hdm_primal), fmt(tr.final_gradient)});
    table.row({"sg-iso", fmt(tau), fmt(c_iso), std::to_string(iso.counters.hdm_primal), fmt(iso.gradient_norm)});
    std::cout << "sg-rom-tr   " << tau << "\t" << c_tr << "\t" << tr.result.counters.hdm_primal << "\n"
              << "sg-iso      " << tau << "\t" << c_iso << "\t" << iso.counters.hdm_primal << "\n";
  }
  return tr.result.converged && iso.converged ? kExitOk : kExitMaxIters;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-neutral optimization with adaptive sparse grids and reduced-order models"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  app.add_option("--config", config_path, "INI configuration file");
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--threads", threads, "Worker threads for node sweeps")->check(CLI::Range(1, 256));
  app.fallthrough();
  auto* optimize = app.add_subcommand("optimize", "Run the configured method");
  auto* validate = app.add_subcommand("validate", "Run the verification suites");
  auto* compare = app.add_subcommand("compare", "Run SG-ROM-TR and SG-ISO and tabulate costs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (out) config.out = *out;
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;

  try {
    const fs::path dir(config.out);
    if (optimize->parsed()) return cmd_optimize(config, dir);
    if (validate->parsed()) return cmd_validate(config, dir);
    if (compare->parsed()) return cmd_compare(config, dir);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolver;
  }
  return kExitConfig;
}
