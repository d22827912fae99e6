#include "sgrom/trust_region.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sgrom {

void TrustRegionConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& rule) {
    throw std::invalid_argument("trust_region." + field + ": " + rule);
  };
  if (!(eta1 > 0.0 && eta1 < 1.0)) fail("eta1", "must lie in (0, 1)");
  if (!(eta2 > 0.0 && eta2 < 1.0)) fail("eta2", "must lie in (0, 1)");
  if (!(eta1 < eta2)) fail("eta1", "must be smaller than eta2");
  if (!(gamma > 0.0 && gamma < 1.0)) fail("gamma", "must lie in (0, 1)");
  // The published defaults sit on the boundary (eta = eta1 = 0.1), so the
  // upper bound is inclusive.
  if (!(eta > 0.0 && eta <= std::min(eta1, 1.0 - eta2))) fail("eta", "must lie in (0, min{eta1, 1 - eta2}]");
  if (!(omega > 0.0 && omega < 1.0)) fail("omega", "must lie in (0, 1)");
  if (!(kappa_phi > 0.0)) fail("kappa_phi", "must be positive");
  if (!(kappa_s > 0.0 && kappa_s < 1.0)) fail("kappa_s", "must lie in (0, 1)");
  if (!(delta0 > 0.0)) fail("delta0", "must be positive");
  if (!(delta_max >= delta0)) fail("delta_max", "must be at least delta0");
  if (!(gtol > 0.0)) fail("gtol", "must be positive");
  if (max_iters < 0) fail("max_iters", "must be nonnegative");
  if (!(forcing > 0.0)) fail("forcing", "must be positive");
  for (double b : betas)
    if (!(b > 0.0)) fail("betas", "must be positive");
  for (double a : alphas)
    if (!(a > 0.0)) fail("alphas", "must be positive");
  if (!(balance_scale > 0.0)) fail("balance_scale", "must be positive");
  if (!(gradient_floor >= 0.0)) fail("gradient_floor", "must be nonnegative");
  if (!(objective_resolution >= 0.0)) fail("objective_resolution", "must be nonnegative");
}

TrustRegionState::TrustRegionState(const ModelProblem& problem, AdaptSettings settings, SgRomPair seed,
                                   Vector mu0, double delta0)
    : mu(std::move(mu0)), delta(delta0), ws(problem, std::move(settings)), pair_grad(seed),
      pair_obj(std::move(seed)) {}

double model_value(Workspace& ws, SgRomPair& pair, const Vector& mu) {
  const SparseQuadrature& rule = pair.grid_rule();
  pair.evaluate_all(ws, rule, mu, false);
  return integrate(rule, [&](const QuadraturePoint& p) { return pair.evaluate(ws, p, mu, false).qoi; });
}

Vector model_gradient(Workspace& ws, SgRomPair& pair, const Vector& mu) {
  const SparseQuadrature& rule = pair.grid_rule();
  pair.evaluate_all(ws, rule, mu, true);
  return integrate(rule, [&](const QuadraturePoint& p) { return pair.evaluate(ws, p, mu, true).gradient; });
}

Vector model_gradient_probe(Workspace& ws, SgRomPair& pair, const Vector& mu, const Vector& base) {
  const SparseQuadrature& rule = pair.grid_rule();
  return integrate(rule, [&](const QuadraturePoint& p) {
    return pair.evaluate_uncached(ws, p, mu, true, &base).gradient;
  });
}

ReducedBasis seed_basis(const ModelProblem& problem, const Vector& mu0, const NewtonOptions& options,
                        int* newton_iters) {
  const Vector y0 = Vector::Zero(problem.stochastic_dim());
  const PrimalSolution primal = solve_primal(problem, y0, mu0, std::nullopt, options);
  const AdjointSolution dual = solve_adjoint(problem, primal.u, y0, mu0);
  ReducedBasis basis(problem.state_dim());
  basis.append(primal.u, {y0, mu0, SnapshotKind::primal, false});
  basis.append(dual.lambda, {y0, mu0, SnapshotKind::adjoint, false});
  for (Eigen::Index j = 0; j < problem.param_dim(); ++j)
    basis.append(primal_sensitivity(problem, primal.u, y0, mu0, j), {y0, mu0, SnapshotKind::sensitivity, false});
  basis.mark_sampled(y0, mu0);
  if (newton_iters) *newton_iters = primal.newton_iters;
  return basis;
}

TrustRegionState tr_init(const ModelProblem& problem, const TrustRegionConfig& config, const Vector& mu0,
                         AdaptSettings settings) {
  config.validate();
  if (mu0.size() != problem.param_dim() || !mu0.allFinite())
    throw std::invalid_argument("tr_init: mu0 must be finite with one entry per parameter");
  int newton_iters = 0;
  ReducedBasis basis = seed_basis(problem, mu0, settings.newton, &newton_iters);

  TrustRegionState state(problem, std::move(settings),
                         SgRomPair(MultiIndexSet::unit(static_cast<std::size_t>(problem.stochastic_dim())),
                                   std::move(basis)),
                         mu0, config.delta0);
  state.ws.counters.hdm_primal = 1;
  state.ws.counters.hdm_newton_iters = newton_iters;
  state.ws.counters.hdm_adjoint = 1;
  state.ws.counters.hdm_sensitivity = problem.param_dim();
  state.betas = config.betas;
  state.alphas = config.alphas;
  if (config.balance_weights) {
    state.betas = balanced_betas(state.ws, state.pair_grad, mu0, config.balance_scale);
    state.alphas = balanced_alphas(state.ws, state.pair_grad, mu0, config.balance_scale);
  }
  return state;
}

const IterationRecord& tr_iterate(TrustRegionState& state, const TrustRegionConfig& config) {
  Workspace& ws = state.ws;
  ws.iteration = state.k;
  IterationRecord rec;
  rec.k = state.k;
  rec.mu = state.mu;
  rec.delta = state.delta;

  // Gradient condition.
  const GradientRefinement gr = refine_for_gradient(ws, state.pair_grad, state.mu, state.delta,
                                                    config.kappa_phi, state.betas,
                                                    config.gradient_floor * config.gtol);
  const Vector g = gr.indicator.model_gradient;
  rec.model_gradient_norm = gr.model_gradient_norm;
  rec.phi = gr.indicator.phi;
  rec.phi_bound = config.kappa_phi * std::min(gr.model_gradient_norm, state.delta);
  rec.gradient_condition = gr.skipped || rec.phi <= rec.phi_bound;
  rec.e1 = gr.indicator.e1;
  rec.e3 = gr.indicator.e3;
  rec.e4 = gr.indicator.e4;
  rec.grid_size = state.pair_grad.grid().size();
  rec.grid_nodes = state.pair_grad.grid_rule().size();
  rec.basis_size = state.pair_grad.basis().size();

  auto finish = [&]() -> const IterationRecord& {
    rec.obj_grid_size = state.pair_obj.grid().size();
    rec.obj_basis_size = state.pair_obj.basis().size();
    rec.counters = ws.counters;
    state.history.push_back(std::move(rec));
    return state.history.back();
  };

  if (std::min(gr.model_gradient_norm, state.delta) <= config.gtol) {
    state.converged = true;
    rec.radius_branch = "stop";
    rec.delta_next = state.delta;
    state.pair_obj = state.pair_grad;
    return finish();
  }

  // Quadratic model with finite-difference Hessian-vector products.
  const Vector mu = state.mu;
  SgRomPair& pg = state.pair_grad;
  rec.m_center = model_value(ws, pg, mu);
  auto hessvec = [&](const Vector& v) -> Vector {
    const double vn = v.norm();
    if (vn == 0.0) return Vector::Zero(v.size());
    const double h = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + mu.norm()) / vn;
    return (model_gradient_probe(ws, pg, mu + h * v, mu) - model_gradient_probe(ws, pg, mu - h * v, mu)) /
           (2.0 * h);
  };
  const SubproblemStep sub = steihaug_toint(g, hessvec, state.delta, config.kappa_s);
  const Vector trial = mu + sub.step;
  rec.has_step = true;
  rec.step_norm = sub.step.norm();
  rec.predicted = sub.decrease;
  rec.cauchy_bound = sub.cauchy_bound;
  rec.cauchy_ok = sub.cauchy_satisfied();
  rec.subproblem_exit = sub.exit;
  rec.m_trial = model_value(ws, pg, trial);
  const double m_decrease = rec.m_center - rec.m_trial;

  // Objective condition and step assessment on the second pair.
  state.pair_obj = state.pair_grad;
  if (m_decrease > 0.0) {
    const double r_k = config.forcing_term(state.k);
    const ObjectiveRefinement orf =
        refine_for_objective(ws, state.pair_obj, mu, trial, m_decrease, r_k, config.eta, config.omega,
                             state.alphas, config.objective_resolution);
    const ObjectiveIndicator& oi = orf.indicator;
    rec.psi_center = oi.psi_center;
    rec.psi_trial = oi.psi_trial;
    rec.theta = oi.theta;
    rec.theta_pow = std::pow(oi.theta, config.omega);
    rec.theta_bound = config.eta * std::min(m_decrease, r_k);
    rec.objective_condition = orf.literal_satisfied();
    rec.objective_condition_effective = orf.satisfied();
    rec.objective_floor_active = orf.floor_active;
    rec.e1_obj = oi.e1_center + oi.e1_trial;
    rec.e2_obj = oi.e2_center + oi.e2_trial;
    rec.e1_obj_bound = orf.literal_thresholds[0];
    rec.e2_obj_bound = orf.literal_thresholds[1];
    rec.rho = (rec.psi_center - rec.psi_trial) / m_decrease;
  } else {
    // The model did not decrease along the step (roundoff at tiny steps or
    // nonconvexity beyond the quadratic); treat as a failed step.
    rec.psi_center = rec.m_center;
    rec.psi_trial = rec.m_trial;
    rec.rho = -std::numeric_limits<double>::infinity();
  }

  rec.accepted = rec.rho >= config.eta1;
  if (rec.rho < config.eta1) {
    rec.radius_branch = "shrink";
    state.delta = config.gamma * rec.step_norm;
  } else if (rec.rho < config.eta2) {
    rec.radius_branch = "keep";
  } else {
    rec.radius_branch = "grow";
    state.delta = std::min(2.0 * state.delta, config.delta_max);
  }
  if (!(state.delta > 0.0)) state.delta = config.gamma * rec.delta;  // zero-length step
  rec.delta_next = state.delta;
  if (rec.accepted) state.mu = trial;

  const IterationRecord& out = finish();
  // The next gradient pair starts from the objective pair.
  state.pair_grad = state.pair_obj;
  state.pair_grad.retain({state.mu});
  state.pair_obj.retain({state.mu});
  ++state.k;
  return out;
}

TrustRegionResult tr_run(const ModelProblem& problem, const TrustRegionConfig& config, const Vector& mu0,
                         AdaptSettings settings, const IterationCallback& callback,
                         const std::function<void(const RefinementEvent&)>& on_event) {
  TrustRegionState state = tr_init(problem, config, mu0, std::move(settings));
  state.ws.on_event = on_event;
  while (true) {
    const IterationRecord& rec = tr_iterate(state, config);
    if (callback) callback(state, rec);
    if (state.converged || state.k >= config.max_iters) break;
  }
  TrustRegionResult result;
  result.mu = state.mu;
  result.converged = state.converged;
  result.history = state.history;
  result.counters = state.ws.counters;
  result.events = state.ws.events;
  result.grid_size = state.pair_grad.grid().size();
  result.basis_size = state.pair_grad.basis().size();
  return result;
}

}  // namespace sgrom
