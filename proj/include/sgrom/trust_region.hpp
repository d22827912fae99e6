#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sgrom/adapt.hpp"
#include "sgrom/steihaug_toint.hpp"

namespace sgrom {

struct TrustRegionConfig {
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma = 0.5;
  double eta = 0.1;
  double omega = 0.1;
  double kappa_phi = 1.0;
  double kappa_s = 1e-4;
  double delta0 = 1.0;
  double delta_max = 1e3;
  double gtol = 1e-6;
  int max_iters = 30;
  /// r_k = forcing / (k + 1)
  double forcing = 1.0;
  Betas betas{1.0, 1.0, 1.0};
  Alphas alphas{1e-2, 1e-2};
  /// Replace betas/alphas by scale / E_i at the seed pair and mu_0.
  bool balance_weights = false;
  double balance_scale = 1.0;
  /// Lower bound, relative to the gradient guard, below which the gradient
  /// condition is not tightened further. 0 enforces it literally.
  double gradient_floor = 0.0;
  /// Resolution floor of the objective thresholds; see refine_for_objective.
  double objective_resolution = 1.0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  double forcing_term(int k) const { return forcing / (k + 1); }
};

struct IterationRecord {
  int k = 0;
  Vector mu;
  double delta = 0.0;
  double model_gradient_norm = 0.0;
  // Gradient condition as evaluated on exit of the refinement.
  double phi = 0.0;
  double phi_bound = 0.0;  // kappa_phi min{|grad m|, Delta}
  bool gradient_condition = false;
  double e1 = 0.0, e3 = 0.0, e4 = 0.0;
  // Step.
  bool has_step = false;
  double step_norm = 0.0;
  double predicted = 0.0;  // quadratic model decrease
  double cauchy_bound = 0.0;
  bool cauchy_ok = false;
  std::string subproblem_exit;
  double m_center = 0.0, m_trial = 0.0;
  // Objective condition.
  double psi_center = 0.0, psi_trial = 0.0;
  double theta = 0.0;
  double theta_pow = 0.0;    // theta^omega
  double theta_bound = 0.0;  // eta min{m decrease, r_k}
  bool objective_condition = false;          // literal thresholds, per term
  bool objective_condition_effective = false;  // thresholds after the floor
  bool objective_floor_active = false;
  double e1_obj = 0.0, e2_obj = 0.0;
  double e1_obj_bound = 0.0, e2_obj_bound = 0.0;
  double rho = 0.0;
  bool accepted = false;
  std::string radius_branch;  // shrink | keep | grow | stop
  double delta_next = 0.0;
  std::size_t grid_size = 0, grid_nodes = 0;
  Eigen::Index basis_size = 0;
  std::size_t obj_grid_size = 0;
  Eigen::Index obj_basis_size = 0;
  QueryCounters counters;
};

class TrustRegionState {
 public:
  TrustRegionState(const ModelProblem& problem, AdaptSettings settings, SgRomPair seed, Vector mu0,
                   double delta0);

  int k = 0;
  Vector mu;
  double delta = 1.0;
  Workspace ws;
  SgRomPair pair_grad;
  SgRomPair pair_obj;
  Betas betas{1.0, 1.0, 1.0};
  Alphas alphas{1e-2, 1e-2};
  std::vector<IterationRecord> history;
  bool converged = false;
};

/// m(mu) = E_I[f(Phi q(., mu), ., mu)]
double model_value(Workspace& ws, SgRomPair& pair, const Vector& mu);
/// E_I[g^lambda(Phi eta, Phi q, ., mu)]
Vector model_gradient(Workspace& ws, SgRomPair& pair, const Vector& mu);
/// Gradient at a probe parameter without touching the cache, warm-started
/// from the cached solutions at `base`.
Vector model_gradient_probe(Workspace& ws, SgRomPair& pair, const Vector& mu, const Vector& base);

/// Basis spanned by u*, lambda* and the n_mu primal sensitivities at
/// (y = 0, mu0), with (0, mu0) marked as sampled. Returns the Newton
/// iteration count of the primal solve through `newton_iters`.
ReducedBasis seed_basis(const ModelProblem& problem, const Vector& mu0, const NewtonOptions& options = {},
                        int* newton_iters = nullptr);

/// Seed pair: unit grid and the basis spanned by u*, lambda* and the n_mu
/// primal sensitivities at (y = 0, mu0).
TrustRegionState tr_init(const ModelProblem& problem, const TrustRegionConfig& config, const Vector& mu0,
                         AdaptSettings settings = {});

/// One iteration; appends to state.history and returns the new record.
const IterationRecord& tr_iterate(TrustRegionState& state, const TrustRegionConfig& config);

struct TrustRegionResult {
  Vector mu;
  bool converged = false;
  std::vector<IterationRecord> history;
  QueryCounters counters;
  std::vector<RefinementEvent> events;
  std::size_t grid_size = 0;
  Eigen::Index basis_size = 0;
};

using IterationCallback = std::function<void(const TrustRegionState&, const IterationRecord&)>;

TrustRegionResult tr_run(const ModelProblem& problem, const TrustRegionConfig& config, const Vector& mu0,
                         AdaptSettings settings = {}, const IterationCallback& callback = {},
                         const std::function<void(const RefinementEvent&)>& on_event = {});

}  // namespace sgrom
