#include "sgrom/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <random>
#include <stdexcept>
#include <thread>

#include "sgrom/rom.hpp"
#include "sgrom/sparse_grid.hpp"

namespace sgrom {

Vector fd_gradient(const ModelProblem& problem, const Vector& y, const Vector& mu, double h,
                   const NewtonOptions& options) {
  if (!(h > 0.0)) throw std::invalid_argument("fd_gradient: h must be positive");
  const Vector u0 = solve_primal(problem, y, mu, std::nullopt, options).u;
  Vector g(mu.size());
  for (Eigen::Index j = 0; j < mu.size(); ++j) {
    Vector mp = mu, mm = mu;
    mp[j] += h;
    mm[j] -= h;
    const Vector up = solve_primal(problem, y, mp, u0, options).u;
    const Vector um = solve_primal(problem, y, mm, u0, options).u;
    g[j] = (problem.qoi(up, y, mp) - problem.qoi(um, y, mm)) / (2.0 * h);
  }
  return g;
}

namespace {

// HDM value and gradient at every node of a fixed rule, reduced in node
// order. `warm` holds the last state per node and is updated.
struct NodeSweep {
  double value = 0.0;
  Vector gradient;
  long newton_iters = 0;
};

NodeSweep sweep(const ModelProblem& problem, const SparseQuadrature& rule, const Vector& mu,
                std::vector<Vector>& warm, const NewtonOptions& options, int threads) {
  const std::size_t n = rule.size();
  std::vector<QoiAndGradient> results(n);
  std::vector<Vector> states(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < n;) {
      try {
        const auto& p = rule.points()[j];
        std::optional<Vector> u0;
        if (j < warm.size() && warm[j].size() == problem.state_dim()) u0 = warm[j];
        const PrimalSolution primal = solve_primal(problem, p.y, mu, u0, options);
        const AdjointSolution dual = solve_adjoint(problem, primal.u, p.y, mu);
        results[j].value = problem.qoi(primal.u, p.y, mu);
        results[j].gradient = adjoint_gradient(problem, dual.lambda, primal.u, p.y, mu);
        results[j].newton_iters = primal.newton_iters;
        states[j] = primal.u;
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const int nt = std::min<int>(std::max(1, threads), static_cast<int>(n));
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  NodeSweep out;
  out.gradient = Vector::Zero(problem.param_dim());
  for (std::size_t j = 0; j < n; ++j) {
    if (errors[j]) {
      try {
        std::rethrow_exception(errors[j]);
      } catch (const std::exception& e) {
        throw NodeEvaluationError(rule.points()[j], e.what());
      }
    }
    const double w = rule.points()[j].weight;
    out.value += w * results[j].value;
    out.gradient += w * results[j].gradient;
    out.newton_iters += results[j].newton_iters;
  }
  warm = std::move(states);
  return out;
}

SparseQuadrature reference_rule(const ModelProblem& problem, int level) {
  if (level < 1 || level > 6) throw std::invalid_argument("tensor reference: level must lie in [1, 6]");
  const Eigen::Index n_y = problem.stochastic_dim();
  if (n_y < 1 || n_y > 3) throw std::invalid_argument("tensor reference: requires 1 <= n_y <= 3");
  return tensor_rule(MultiIndex(std::vector<int>(static_cast<std::size_t>(n_y), level)));
}

}  // namespace

TensorReference tensor_reference(const ModelProblem& problem, const Vector& mu, int level,
                                 const NewtonOptions& options, int threads) {
  const SparseQuadrature rule = reference_rule(problem, level);
  std::vector<Vector> warm;
  const NodeSweep s = sweep(problem, rule, mu, warm, options, threads);
  return {s.value, s.gradient, rule.size()};
}

BaselineResult sg_iso_baseline(const ModelProblem& problem, const Vector& mu0, int level, int max_iters,
                               double gtol, const NewtonOptions& options, int threads) {
  const SparseQuadrature rule = reference_rule(problem, level);
  BaselineResult out;
  out.nodes = rule.size();
  std::vector<Vector> warm;
  auto evaluate = [&](const Vector& mu, std::vector<Vector>& states) {
    const NodeSweep s = sweep(problem, rule, mu, states, options, threads);
    out.counters.hdm_primal += static_cast<long>(rule.size());
    out.counters.hdm_adjoint += static_cast<long>(rule.size());
    out.counters.hdm_newton_iters += s.newton_iters;
    return s;
  };

  Vector x = mu0;
  NodeSweep cur = evaluate(x, warm);
  const Eigen::Index n = x.size();
  Matrix hinv = Matrix::Identity(n, n);
  auto snapshot = [&](int k, double step) {
    out.history.push_back({k, x, cur.value, cur.gradient.norm(), step, out.counters});
  };
  snapshot(0, 0.0);

  for (int k = 0; k < max_iters; ++k) {
    if (cur.gradient.norm() <= gtol) break;
    Vector p = -hinv * cur.gradient;
    double slope = cur.gradient.dot(p);
    if (!(slope < 0.0)) {
      hinv.setIdentity();
      p = -cur.gradient;
      slope = cur.gradient.dot(p);
    }
    double t = 1.0;
    bool accepted = false;
    Vector xt;
    NodeSweep trial;
    std::vector<Vector> trial_warm;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      xt = x + t * p;
      trial_warm = warm;
      trial = evaluate(xt, trial_warm);
      if (trial.value <= cur.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.line_search_failed = true;
      break;
    }
    const Vector s = xt - x;
    const Vector yv = trial.gradient - cur.gradient;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (k == 0) hinv *= sy / yv.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix v = Matrix::Identity(n, n) - rho * yv * s.transpose();
      hinv = v.transpose() * hinv * v + rho * s * s.transpose();
    }
    x = xt;
    cur = trial;
    warm = std::move(trial_warm);
    snapshot(k + 1, s.norm());
  }
  out.mu = x;
  out.value = cur.value;
  out.gradient_norm = cur.gradient.norm();
  out.converged = out.gradient_norm <= gtol;
  return out;
}

namespace {

BoundEstimate summarize(const std::vector<double>& ratios, int n_samples, int excluded) {
  BoundEstimate e;
  e.ratios = ratios;
  e.n_samples = n_samples;
  e.excluded = excluded;
  if (ratios.empty()) return e;
  std::vector<double> sorted = ratios;
  std::sort(sorted.begin(), sorted.end());
  e.max_ratio = sorted.back();
  const std::size_t m = sorted.size();
  e.median_ratio = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return e;
}

}  // namespace

BoundValidation validate_bounds(const ModelProblem& problem, const ReducedBasis& basis, int n_samples,
                                std::uint64_t seed, double mu_scale, const NewtonOptions& options) {
  if (n_samples < 0) throw std::invalid_argument("validate_bounds: n_samples must be nonnegative");
  if (basis.empty()) throw std::invalid_argument("validate_bounds: empty basis");
  constexpr double kDegenerate = 1e-14;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  BoundValidation out;
  std::vector<double> qoi_ratios, grad_ratios;
  int qoi_excluded = 0, grad_excluded = 0;
  const Matrix& phi = basis.columns();
  for (int s = 0; s < n_samples; ++s) {
    BoundSample smp;
    smp.y.resize(problem.stochastic_dim());
    smp.mu.resize(problem.param_dim());
    for (Eigen::Index j = 0; j < smp.y.size(); ++j) smp.y[j] = unit(rng);
    for (Eigen::Index j = 0; j < smp.mu.size(); ++j) smp.mu[j] = mu_scale * unit(rng);

    const QoiAndGradient hdm = reduced_qoi_and_gradient(problem, smp.y, smp.mu, options);
    const RomPrimal rp = solve_rom_primal(problem, basis, smp.y, smp.mu);
    const RomAdjoint ra = solve_rom_adjoint(problem, basis, rp.q, smp.y, smp.mu);
    const Vector u = phi * rp.q;
    const Vector lambda = phi * ra.eta;
    smp.residual = problem.residual(u, smp.y, smp.mu).norm();
    smp.adjoint_residual = adjoint_residual(problem, lambda, u, smp.y, smp.mu).norm();
    smp.qoi_error = std::abs(hdm.value - problem.qoi(u, smp.y, smp.mu));
    smp.gradient_error = (hdm.gradient - adjoint_gradient(problem, lambda, u, smp.y, smp.mu)).norm();

    if (smp.residual < kDegenerate) {
      smp.qoi_excluded = true;
      ++qoi_excluded;
    } else {
      smp.qoi_ratio = smp.qoi_error / smp.residual;
      qoi_ratios.push_back(smp.qoi_ratio);
    }
    const double denom = smp.residual + smp.adjoint_residual;
    if (denom < kDegenerate) {
      smp.gradient_excluded = true;
      ++grad_excluded;
    } else {
      smp.gradient_ratio = smp.gradient_error / denom;
      grad_ratios.push_back(smp.gradient_ratio);
    }
    out.samples.push_back(std::move(smp));
  }
  out.qoi = summarize(qoi_ratios, n_samples, qoi_excluded);
  out.gradient = summarize(grad_ratios, n_samples, grad_excluded);
  return out;
}

double cost_metric(const QueryCounters& c, double tau, double nbar_h, double nbar_r) {
  if (!(tau > 0.0)) throw std::invalid_argument("cost_metric: tau must be positive");
  if (!(nbar_h >= 1.0) || !(nbar_r >= 1.0))
    throw std::invalid_argument("cost_metric: average iteration counts must be at least 1");
  const double hdm = static_cast<double>(c.hdm_primal) +
                     static_cast<double>(c.hdm_adjoint + c.hdm_sensitivity) / nbar_h;
  if (std::isinf(tau)) return hdm;
  const double rom = static_cast<double>(c.rom_primal) + static_cast<double>(c.rom_adjoint) / nbar_r;
  return hdm + rom / tau;
}

double cost_metric(const QueryCounters& c, double tau) {
  return cost_metric(c, tau, c.mean_hdm_iters(), c.mean_rom_iters());
}

}  // namespace sgrom
