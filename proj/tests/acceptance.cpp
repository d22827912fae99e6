// Acceptance checks; one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "sgrom/config.hpp"
#include "sgrom/oracle.hpp"
#include "sgrom/problems.hpp"
#include "sgrom/report.hpp"
#include "sgrom/trust_region.hpp"
#include "sgrom/validation.hpp"

using namespace sgrom;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++failures;
  std::cout << "criterion " << id << " " << (ok ? "PASS" : "FAIL") << " " << name << ": " << detail << std::endl;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct FullRun {
  TrustRegionResult result;
  double seconds = 0.0;
};

// Full Burgers run with the default settings, reported into `dir`.
FullRun burgers_run(const fs::path& dir) {
  const RunConfig config;
  const BurgersControl problem;
  RunReport out(dir, echo_config(config));
  Stopwatch clock;
  FullRun run;
  run.result = tr_run(
      problem, config.trust_region, config.initial_control(problem.param_dim()), config.adapt,
      [&](const TrustRegionState& s, const IterationRecord& rec) { out.iteration(s, rec); },
      [&](const RefinementEvent& e) { out.event(e); });
  run.seconds = clock.seconds();
  return run;
}

std::string timing(double seconds) {
  std::ostringstream os;
  os << seconds << " s";
  return os.str();
}

}  // namespace

int main() {
  const fs::path scratch = fs::temp_directory_path() / "sgrom_acceptance";
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const ValidateConfig vc;

  {
    Stopwatch clock;
    const SuiteResult r = quadrature_suite();
    const double t = clock.seconds();
    report(1, "quadrature", r.passed && t < 1.0, r.summary + ", " + timing(t));
  }

  {
    LinearDiffusion lin;
    BurgersControl bur;
    Stopwatch clock;
    const SuiteResult r =
        fd_gradient_suite({{&lin, vc.fd_tol_linear}, {&bur, vc.fd_tol_burgers}}, 20, vc.fd_h, 1, vc.mu_scale);
    const double t = clock.seconds();
    report(2, "adjoint gradient", r.passed && !r.vacuous && t < 30.0, r.summary + ", " + timing(t));
  }

  {
    LinearDiffusion lin;
    BurgersControl bur;
    Stopwatch clock;
    const SuiteResult a = rom_property_suite(lin, 2, vc.mu_scale);
    const SuiteResult b = rom_property_suite(bur, 2, vc.mu_scale);
    const double t = clock.seconds();
    report(3, "ROM properties", a.passed && b.passed && t < 30.0,
           "linear: " + a.summary + "; burgers: " + b.summary + ", " + timing(t));
  }

  const FullRun run_a = burgers_run(scratch / "run_a");
  const TrustRegionResult& tr = run_a.result;

  {
    int grad_fail = 0, obj_fail = 0, obj_checked = 0, floored_fail = 0;
    for (const IterationRecord& rec : tr.history) {
      if (!(rec.phi <= rec.phi_bound)) ++grad_fail;
      if (rec.has_step) {
        ++obj_checked;
        if (!rec.objective_condition) ++obj_fail;
        if (!rec.objective_condition_effective) ++floored_fail;
      }
    }
    std::ostringstream os;
    os << "gradient condition violated at " << grad_fail << "/" << tr.history.size()
       << " exits, objective condition violated at " << obj_fail << "/" << obj_checked
       << " exits (with the resolution floor: " << floored_fail << "/" << obj_checked << ")";
    report(4, "condition enforcement", grad_fail == 0 && obj_fail == 0, os.str());
  }

  {
    bool psi_ok = true;
    for (const IterationRecord& rec : tr.history)
      if (rec.accepted && !(rec.psi_trial < rec.psi_center)) psi_ok = false;
    const double g0 = tr.history.empty() ? 0.0 : tr.history.front().model_gradient_norm;
    double best = g0;
    int hit = -1;
    for (const IterationRecord& rec : tr.history) {
      best = std::min(best, rec.model_gradient_norm);
      if (hit < 0 && rec.model_gradient_norm * 1e3 <= g0) hit = rec.k;
    }
    std::ostringstream os;
    os << "|grad m| " << g0 << " -> " << best << " (ratio " << (best > 0 ? g0 / best : 0.0) << "), 1e3 reached at k = "
       << hit << ", psi decreasing on accepted steps: " << (psi_ok ? "yes" : "no") << ", " << timing(run_a.seconds);
    report(5, "global convergence", hit >= 0 && hit <= 30 && psi_ok && run_a.seconds < 300.0, os.str());
  }

  {
    BurgersControl bur;
    const double gtol = tr.history.empty() ? 0.0 : tr.history.back().model_gradient_norm;
    Stopwatch clock;
    const RunConfig config;
    const BaselineResult iso = sg_iso_baseline(bur, Vector::Zero(bur.param_dim()), config.baseline.level,
                                               config.baseline.max_iters, gtol, config.adapt.newton);
    const double t = clock.seconds() + run_a.seconds;
    const double c_tr = cost_metric(tr.counters, kCostTaus.back());
    const double c_iso = cost_metric(iso.counters, kCostTaus.back());
    std::ostringstream os;
    os << "HDM primal " << tr.counters.hdm_primal << " vs " << iso.counters.hdm_primal << " (gtol " << gtol
       << ", baseline |grad| " << iso.gradient_norm << "), C(inf) " << c_tr << " vs " << c_iso << ", "
       << timing(t);
    const bool ok = iso.converged && 4 * tr.counters.hdm_primal <= iso.counters.hdm_primal && c_tr < c_iso && t < 600.0;
    report(6, "query efficiency", ok, os.str());
  }

  {
    LinearDiffusion lin;
    BoundValidation bv;
    const SuiteResult r = bound_suite(lin, 100, 3, vc.mu_scale, vc.max_median_factor, &bv);
    write_bound_samples(scratch / "bounds.csv", bv);
    report(7, "bound validation", r.passed && !r.vacuous, r.summary);
  }

  {
    const FullRun run_b = burgers_run(scratch / "run_b");
    const std::string a = slurp(scratch / "run_a" / "history.csv");
    const std::string b = slurp(scratch / "run_b" / "history.csv");
    std::ostringstream os;
    os << "history.csv " << a.size() << " and " << b.size() << " bytes, " << (a == b ? "identical" : "different");
    report(8, "determinism", !a.empty() && a == b, os.str());
  }

  fs::remove_all(scratch);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures;
}
