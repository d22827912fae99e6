#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgrom/model_problem.hpp"
#include "sgrom/reduced_basis.hpp"
#include "sgrom/rom.hpp"
#include "sgrom/sparse_grid.hpp"

namespace sgrom {

/// Query counts used by the cost model.
struct QueryCounters {
  long hdm_primal = 0;
  long hdm_adjoint = 0;
  long hdm_sensitivity = 0;
  long rom_primal = 0;
  long rom_adjoint = 0;
  long hdm_newton_iters = 0;
  long rom_gn_iters = 0;

  /// Average nonlinear iterations per primal solve, at least 1.
  double mean_hdm_iters() const;
  double mean_rom_iters() const;
};

struct AdaptSettings {
  NewtonOptions newton;
  RomOptions rom;
  int max_level = kDefaultMaxLevel;
  int threads = 1;
};

struct RefinementEvent {
  int iteration = 0;
  std::string kind;
  std::string target;
  double before = 0.0;
  double after = 0.0;
  std::size_t grid_size = 0;
  Eigen::Index basis_size = 0;
};

/// Shared mutable state of a refinement run: problem, settings, counters
/// and the refinement event log.
class Workspace {
 public:
  Workspace(const ModelProblem& problem, AdaptSettings settings = {})
      : settings(std::move(settings)), problem_(&problem) {}

  const ModelProblem& problem() const { return *problem_; }

  AdaptSettings settings;
  QueryCounters counters;
  std::vector<RefinementEvent> events;
  int iteration = 0;
  std::function<void(const RefinementEvent&)> on_event;

  void log(RefinementEvent event);

 private:
  const ModelProblem* problem_;
};

class RefinementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ROM solution and derived quantities at one (node, mu).
struct NodeRom {
  RomPrimal primal;
  std::optional<RomAdjoint> adjoint;
  double residual_norm = 0.0;
  double adjoint_residual_norm = 0.0;
  double qoi = 0.0;
  Vector gradient;  // empty without adjoint
};

/// Sparse grid / reduced basis pair with a cache of ROM solutions.
class SgRomPair {
 public:
  SgRomPair(MultiIndexSet grid, ReducedBasis basis);

  const MultiIndexSet& grid() const { return grid_; }
  const ReducedBasis& basis() const { return basis_; }

  // Rules derived from the current grid.
  const SparseQuadrature& grid_rule();
  /// Rule of I united with N(I).
  const SparseQuadrature& extended_rule();
  const std::vector<MultiIndex>& grid_neighbors();
  /// Signed node weights of Delta^i for each forward neighbor, same order.
  const std::vector<SparseQuadrature>& neighbor_differences();

  /// Cached ROM state; solves if missing.
  const NodeRom& evaluate(Workspace& ws, const QuadraturePoint& point, const Vector& mu, bool adjoint);
  /// Solves every node of `quad` that is missing from the cache.
  void evaluate_all(Workspace& ws, const SparseQuadrature& quad, const Vector& mu, bool adjoint);
  /// ROM state at a parameter that is not cached (e.g. finite-difference
  /// probes); warm-started from the cache entry at `warm_mu` when present.
  NodeRom evaluate_uncached(Workspace& ws, const QuadraturePoint& point, const Vector& mu,
                            bool adjoint, const Vector* warm_mu = nullptr) const;

  /// Adds a forward neighbor to the grid. Throws LevelCapExceeded.
  void refine_grid(const MultiIndex& index, int max_level);

  /// HDM primal and adjoint solves at (y, mu); both snapshots are appended
  /// and the point is marked as sampled. Invalidates the cache when a
  /// column is added; returns the number of columns added.
  int sample(Workspace& ws, const Vector& y, const Vector& mu, const std::optional<Vector>& u0);

  /// Appends a snapshot; invalidates the cache if a column was added.
  bool append(const Vector& v, SnapshotRecord record);
  void mark_sampled(const Vector& y, const Vector& mu) { basis_.mark_sampled(y, mu); }

  /// Drops cached entries whose parameter is not in `keep`.
  void retain(const std::vector<Vector>& keep);

  std::size_t cache_size() const { return cache_.size(); }
  /// Increments whenever the basis changes.
  long basis_version() const { return basis_version_; }

 private:
  using CacheKey = std::pair<std::vector<double>, NodeKey>;
  static CacheKey make_key(const Vector& mu, const NodeKey& node);
  NodeRom solve_node(Workspace& ws, const QuadraturePoint& point, const Vector& mu, bool adjoint,
                     const std::optional<Vector>& q0) const;
  std::optional<Vector> warm_start(const CacheKey& key) const;
  void invalidate_rules();
  void record(Workspace& ws, const NodeRom& node) const;

  MultiIndexSet grid_;
  ReducedBasis basis_;
  std::map<CacheKey, NodeRom> cache_;
  std::map<CacheKey, Vector> warm_;
  Vector last_snapshot_;
  long basis_version_ = 0;

  std::optional<SparseQuadrature> grid_rule_;
  std::optional<SparseQuadrature> extended_rule_;
  std::optional<std::vector<MultiIndex>> neighbors_;
  std::optional<std::vector<SparseQuadrature>> differences_;
};

using Betas = std::array<double, 3>;   // beta_1, beta_3, beta_4
using Alphas = std::array<double, 2>;  // alpha_1, alpha_2

/// Gradient-condition indicator phi = b1 E1 + b3 E3 + b4 E4 at mu, with
/// E1 = E_{I+N}[|r|], E3 = E_{I+N}[|r^lambda|], E4 = E_N[|g|]. The
/// nonnegative integrands of E1 and E3 are integrated with |w_j|, and E4 is
/// the sum of |Delta^i[|g|]| over the neighbors; both bound the signed rules
/// from above.
struct GradientIndicator {
  double e1 = 0.0;
  double e3 = 0.0;
  double e4 = 0.0;
  double phi = 0.0;
  Betas betas{1.0, 1.0, 1.0};
  Vector model_gradient;  // E_I[g]
  std::map<MultiIndex, double> truncation;  // |Delta^i[|g|]| per neighbor
};

GradientIndicator eval_gradient_indicator(Workspace& ws, SgRomPair& pair, const Vector& mu,
                                          const Betas& betas);

/// Objective-condition indicator theta at (mu_center, mu_trial).
struct ObjectiveIndicator {
  double e1_center = 0.0, e1_trial = 0.0;
  double e2_center = 0.0, e2_trial = 0.0;
  double theta = 0.0;
  Alphas alphas{1e-2, 1e-2};
  double psi_center = 0.0, psi_trial = 0.0;  // E_I'[f] at each point
  std::map<MultiIndex, double> truncation;   // max over both points of |Delta^i[f]|
};

ObjectiveIndicator eval_objective_indicator(Workspace& ws, SgRomPair& pair, const Vector& mu_center,
                                            const Vector& mu_trial, const Alphas& alphas);

struct GradientRefinement {
  GradientIndicator indicator;
  double model_gradient_norm = 0.0;
  double guard = 0.0;                  // min{|grad m|, Delta}
  std::array<double, 3> thresholds{};  // for E1, E3, E4
  bool floor_active = false;           // guard fell below the stopping floor
  bool skipped = false;                // guard at machine level, nothing enforced
  bool saturated = false;              // a greedy sample added no basis column
  int grid_refinements = 0;
  int greedy_samples = 0;

  bool satisfied() const {
    return indicator.e1 <= thresholds[0] && indicator.e3 <= thresholds[1] &&
           indicator.e4 <= thresholds[2];
  }
};

/// Grows the grid and basis of `pair` until
///   E_i(mu) <= kappa_phi / (3 beta_i) max(min{|grad m(mu)|, Delta}, floor)
/// holds for i = 1, 3, 4. `floor` is the optimizer's stopping tolerance;
/// the literal thresholds apply whenever the guard is above it.
/// A greedy loop stops early (saturated) when the HDM snapshots at the
/// chosen node already lie in the basis to the drop tolerance: the residual
/// indicator is then at its attainable floor.
GradientRefinement refine_for_gradient(Workspace& ws, SgRomPair& pair, const Vector& mu,
                                       double delta, double kappa_phi, const Betas& betas,
                                       double floor = 0.0);

struct ObjectiveRefinement {
  ObjectiveIndicator indicator;
  std::array<double, 2> literal_thresholds{};    // for E1', E2'
  std::array<double, 2> effective_thresholds{};  // after the resolution floor
  bool floor_active = false;
  bool saturated = false;  // a greedy sample added no basis column
  int grid_refinements = 0;
  int greedy_samples = 0;

  bool satisfied() const {
    return indicator.e1_center + indicator.e1_trial <= effective_thresholds[0] &&
           indicator.e2_center + indicator.e2_trial <= effective_thresholds[1];
  }
  bool literal_satisfied() const {
    return indicator.e1_center + indicator.e1_trial <= literal_thresholds[0] &&
           indicator.e2_center + indicator.e2_trial <= literal_thresholds[1];
  }
};

/// (1 / (2 alpha)) (eta min{m_decrease, r_k})^(1 / omega)
double objective_threshold(double alpha, double eta, double m_decrease, double r_k, double omega);

/// Grows the grid and basis of `pair` until
///   E1'(mu_k) + E1'(mu_trial) <= t_1 and E2'(mu_k) + E2'(mu_trial) <= t_2
/// with t_i = max(objective_threshold(alpha_i, ...), floor_i) and
/// floor_i = resolution (1 / (2 alpha_i)) eta min{m_decrease, r_k}.
/// resolution = 0 enforces the literal thresholds. The greedy loop stops
/// early on saturation as in refine_for_gradient.
ObjectiveRefinement refine_for_objective(Workspace& ws, SgRomPair& pair, const Vector& mu_k,
                                         const Vector& mu_trial, double m_decrease, double r_k,
                                         double eta, double omega, const Alphas& alphas,
                                         double resolution = 0.0);

/// Weights that equalize the indicator terms at mu: beta_i = scale / E_i.
Betas balanced_betas(Workspace& ws, SgRomPair& pair, const Vector& mu, double scale);
Alphas balanced_alphas(Workspace& ws, SgRomPair& pair, const Vector& mu, double scale);

}  // namespace sgrom
