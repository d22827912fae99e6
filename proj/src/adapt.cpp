#include "sgrom/adapt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>
#include <thread>

namespace sgrom {

double QueryCounters::mean_hdm_iters() const {
  if (hdm_primal == 0) return 1.0;
  return std::max(1.0, static_cast<double>(hdm_newton_iters) / static_cast<double>(hdm_primal));
}

double QueryCounters::mean_rom_iters() const {
  if (rom_primal == 0) return 1.0;
  return std::max(1.0, static_cast<double>(rom_gn_iters) / static_cast<double>(rom_primal));
}

void Workspace::log(RefinementEvent event) {
  event.iteration = iteration;
  events.push_back(std::move(event));
  if (on_event) on_event(events.back());
}

// ---------------------------------------------------------------------------
// SgRomPair

SgRomPair::SgRomPair(MultiIndexSet grid, ReducedBasis basis)
    : grid_(std::move(grid)), basis_(std::move(basis)) {
  if (!is_admissible(grid_) || grid_.empty())
    throw std::invalid_argument("SgRomPair: grid must be nonempty and admissible");
}

void SgRomPair::invalidate_rules() {
  grid_rule_.reset();
  extended_rule_.reset();
  neighbors_.reset();
  differences_.reset();
}

const SparseQuadrature& SgRomPair::grid_rule() {
  if (!grid_rule_) grid_rule_ = assemble(grid_, kHardMaxLevel);
  return *grid_rule_;
}

const SparseQuadrature& SgRomPair::extended_rule() {
  if (!extended_rule_) extended_rule_ = assemble(with_neighbors(grid_), kHardMaxLevel);
  return *extended_rule_;
}

const std::vector<MultiIndex>& SgRomPair::grid_neighbors() {
  if (!neighbors_) neighbors_ = neighbors(grid_);
  return *neighbors_;
}

const std::vector<SparseQuadrature>& SgRomPair::neighbor_differences() {
  if (!differences_) {
    std::vector<SparseQuadrature> d;
    for (const auto& i : grid_neighbors()) d.push_back(difference_rule(i));
    differences_ = std::move(d);
  }
  return *differences_;
}

SgRomPair::CacheKey SgRomPair::make_key(const Vector& mu, const NodeKey& node) {
  return {std::vector<double>(mu.data(), mu.data() + mu.size()), node};
}

std::optional<Vector> SgRomPair::warm_start(const CacheKey& key) const {
  const Eigen::Index k = basis_.size();
  // Previous solution at the same node and parameter, padded with zeros.
  if (auto it = warm_.find(key); it != warm_.end() && it->second.size() <= k) {
    Vector q = Vector::Zero(k);
    q.head(it->second.size()) = it->second;
    return q;
  }
  // Nearest solved node at the same parameter.
  const NodeRom* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (auto it = cache_.lower_bound({key.first, {}}); it != cache_.end() && it->first.first == key.first;
       ++it) {
    double d = 0.0;
    for (std::size_t j = 0; j < key.second.size(); ++j) {
      const double diff = node_coordinate(key.second[j]) - node_coordinate(it->first.second[j]);
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = &it->second;
    }
  }
  if (best) return best->primal.q;
  if (last_snapshot_.size() == basis_.state_dim() && !basis_.empty())
    return Vector(basis_.columns().transpose() * last_snapshot_);
  return std::nullopt;
}

NodeRom SgRomPair::solve_node(Workspace& ws, const QuadraturePoint& point, const Vector& mu,
                              bool adjoint, const std::optional<Vector>& q0) const {
  const ModelProblem& problem = ws.problem();
  NodeRom node;
  node.primal = solve_rom_primal(problem, basis_, point.y, mu, q0, ws.settings.rom);
  const Vector u = basis_.columns() * node.primal.q;
  node.residual_norm = problem.residual(u, point.y, mu).norm();
  node.qoi = problem.qoi(u, point.y, mu);
  if (adjoint) {
    node.adjoint = solve_rom_adjoint(problem, basis_, node.primal.q, point.y, mu, ws.settings.rom);
    const Vector lambda = basis_.columns() * node.adjoint->eta;
    node.adjoint_residual_norm = adjoint_residual(problem, lambda, u, point.y, mu).norm();
    node.gradient = adjoint_gradient(problem, lambda, u, point.y, mu);
  }
  return node;
}

void SgRomPair::record(Workspace& ws, const NodeRom& node) const {
  ++ws.counters.rom_primal;
  ws.counters.rom_gn_iters += node.primal.gn_iters;
  if (node.adjoint) ++ws.counters.rom_adjoint;
}

const NodeRom& SgRomPair::evaluate(Workspace& ws, const QuadraturePoint& point, const Vector& mu,
                                   bool adjoint) {
  const CacheKey key = make_key(mu, point.key);
  auto it = cache_.find(key);
  if (it != cache_.end() && (!adjoint || it->second.adjoint)) return it->second;
  try {
    if (it != cache_.end()) {
      // Primal cached, adjoint missing.
      NodeRom& node = it->second;
      const ModelProblem& problem = ws.problem();
      node.adjoint = solve_rom_adjoint(problem, basis_, node.primal.q, point.y, mu, ws.settings.rom);
      const Vector u = basis_.columns() * node.primal.q;
      const Vector lambda = basis_.columns() * node.adjoint->eta;
      node.adjoint_residual_norm = adjoint_residual(problem, lambda, u, point.y, mu).norm();
      node.gradient = adjoint_gradient(problem, lambda, u, point.y, mu);
      ++ws.counters.rom_adjoint;
      return node;
    }
    NodeRom node = solve_node(ws, point, mu, adjoint, warm_start(key));
    record(ws, node);
    return cache_.emplace(key, std::move(node)).first->second;
  } catch (const NodeEvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw NodeEvaluationError(point, e.what());
  }
}

void SgRomPair::evaluate_all(Workspace& ws, const SparseQuadrature& quad, const Vector& mu,
                             bool adjoint) {
  std::vector<const QuadraturePoint*> missing;
  for (const auto& p : quad.points()) {
    auto it = cache_.find(make_key(mu, p.key));
    if (it == cache_.end()) {
      missing.push_back(&p);
    } else if (adjoint && !it->second.adjoint) {
      evaluate(ws, p, mu, true);
    }
  }
  if (missing.empty()) return;
  // Warm starts are taken from the cache as it was before the sweep, so the
  // result does not depend on the evaluation order or thread count.
  std::vector<std::optional<Vector>> starts;
  starts.reserve(missing.size());
  for (const auto* p : missing) starts.push_back(warm_start(make_key(mu, p->key)));

  std::vector<NodeRom> results(missing.size());
  std::vector<std::exception_ptr> errors(missing.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < missing.size();) {
      try {
        results[j] = solve_node(ws, *missing[j], mu, adjoint, starts[j]);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const int n = std::min<int>(std::max(1, ws.settings.threads), static_cast<int>(missing.size()));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < missing.size(); ++j) {
    if (errors[j]) {
      try {
        std::rethrow_exception(errors[j]);
      } catch (const std::exception& e) {
        throw NodeEvaluationError(*missing[j], e.what());
      }
    }
    record(ws, results[j]);
    cache_[make_key(mu, missing[j]->key)] = std::move(results[j]);
  }
}

NodeRom SgRomPair::evaluate_uncached(Workspace& ws, const QuadraturePoint& point, const Vector& mu,
                                     bool adjoint, const Vector* warm_mu) const {
  std::optional<Vector> q0;
  if (warm_mu) {
    if (auto it = cache_.find(make_key(*warm_mu, point.key)); it != cache_.end()) q0 = it->second.primal.q;
  }
  try {
    NodeRom node = solve_node(ws, point, mu, adjoint, q0);
    record(ws, node);
    return node;
  } catch (const std::exception& e) {
    throw NodeEvaluationError(point, e.what());
  }
}

void SgRomPair::refine_grid(const MultiIndex& index, int max_level) {
  if (index.max_level() > max_level)
    throw LevelCapExceeded("refinement to " + index.str() + " exceeds the level cap " +
                           std::to_string(max_level));
  grid_.refine(index);
  invalidate_rules();
}

bool SgRomPair::append(const Vector& v, SnapshotRecord record) {
  const Eigen::Index before = basis_.size();
  basis_.append(v, std::move(record));
  if (basis_.size() == before) return false;
  // Keep solutions as warm starts, then drop everything that depends on Phi.
  for (auto& [key, node] : cache_) warm_[key] = node.primal.q;
  cache_.clear();
  last_snapshot_ = v;
  ++basis_version_;
  return true;
}

int SgRomPair::sample(Workspace& ws, const Vector& y, const Vector& mu, const std::optional<Vector>& u0) {
  if (basis_.sampled(y, mu))
    throw std::logic_error("SgRomPair::sample: HDM already sampled at this point");
  const ModelProblem& problem = ws.problem();
  const PrimalSolution primal = solve_primal(problem, y, mu, u0, ws.settings.newton);
  ++ws.counters.hdm_primal;
  ws.counters.hdm_newton_iters += primal.newton_iters;
  const AdjointSolution dual = solve_adjoint(problem, primal.u, y, mu);
  ++ws.counters.hdm_adjoint;
  basis_.mark_sampled(y, mu);
  int added = append(primal.u, {y, mu, SnapshotKind::primal, false}) ? 1 : 0;
  added += append(dual.lambda, {y, mu, SnapshotKind::adjoint, false}) ? 1 : 0;
  last_snapshot_ = primal.u;
  return added;
}

void SgRomPair::retain(const std::vector<Vector>& keep) {
  auto kept = [&](const CacheKey& key) {
    for (const auto& mu : keep)
      if (static_cast<std::size_t>(mu.size()) == key.first.size() &&
          std::equal(key.first.begin(), key.first.end(), mu.data()))
        return true;
    return false;
  };
  std::erase_if(cache_, [&](const auto& entry) { return !kept(entry.first); });
  std::erase_if(warm_, [&](const auto& entry) { return !kept(entry.first); });
}

// ---------------------------------------------------------------------------
// Indicators

namespace {

std::string node_label(const QuadraturePoint& p) {
  std::ostringstream os;
  os.precision(17);
  os << "y=(";
  for (Eigen::Index j = 0; j < p.y.size(); ++j) os << (j ? " " : "") << p.y[j];
  os << ")";
  return os.str();
}

double density_factor(std::size_t n_y) { return std::ldexp(1.0, -static_cast<int>(n_y)); }

}  // namespace

GradientIndicator eval_gradient_indicator(Workspace& ws, SgRomPair& pair, const Vector& mu,
                                          const Betas& betas) {
  GradientIndicator ind;
  ind.betas = betas;
  const SparseQuadrature& ext = pair.extended_rule();
  pair.evaluate_all(ws, ext, mu, true);
  for (const auto& p : ext.points()) {
    const NodeRom& node = pair.evaluate(ws, p, mu, true);
    ind.e1 += std::abs(p.weight) * node.residual_norm;
    ind.e3 += std::abs(p.weight) * node.adjoint_residual_norm;
  }
  ind.model_gradient = Vector::Zero(ws.problem().param_dim());
  for (const auto& p : pair.grid_rule().points())
    ind.model_gradient += p.weight * pair.evaluate(ws, p, mu, true).gradient;

  const auto& nbrs = pair.grid_neighbors();
  const auto& diffs = pair.neighbor_differences();
  for (std::size_t n = 0; n < nbrs.size(); ++n) {
    double term = 0.0;
    for (const auto& p : diffs[n].points()) term += p.weight * pair.evaluate(ws, p, mu, true).gradient.norm();
    ind.truncation[nbrs[n]] = std::abs(term);
    ind.e4 += std::abs(term);
  }
  ind.phi = betas[0] * ind.e1 + betas[1] * ind.e3 + betas[2] * ind.e4;
  return ind;
}

ObjectiveIndicator eval_objective_indicator(Workspace& ws, SgRomPair& pair, const Vector& mu_center,
                                            const Vector& mu_trial, const Alphas& alphas) {
  ObjectiveIndicator ind;
  ind.alphas = alphas;
  const SparseQuadrature& ext = pair.extended_rule();
  const auto& nbrs = pair.grid_neighbors();
  const auto& diffs = pair.neighbor_differences();

  auto at = [&](const Vector& mu, double& e1, double& e2, double& psi) {
    pair.evaluate_all(ws, ext, mu, false);
    for (const auto& p : ext.points()) e1 += std::abs(p.weight) * pair.evaluate(ws, p, mu, false).residual_norm;
    for (const auto& p : pair.grid_rule().points()) psi += p.weight * pair.evaluate(ws, p, mu, false).qoi;
    for (std::size_t n = 0; n < nbrs.size(); ++n) {
      double term = 0.0;
      for (const auto& p : diffs[n].points()) term += p.weight * pair.evaluate(ws, p, mu, false).qoi;
      term = std::abs(term);
      e2 += term;
      double& slot = ind.truncation[nbrs[n]];
      slot = std::max(slot, term);
    }
  };
  at(mu_center, ind.e1_center, ind.e2_center, ind.psi_center);
  at(mu_trial, ind.e1_trial, ind.e2_trial, ind.psi_trial);
  ind.theta = alphas[0] * (ind.e1_center + ind.e1_trial) + alphas[1] * (ind.e2_center + ind.e2_trial);
  return ind;
}

// ---------------------------------------------------------------------------
// Refinement drivers

namespace {

// Weighted greedy pick over the nodes of I u N(I) at the given parameters;
// already sampled (y, mu) pairs are excluded. Returns false if no candidate
// with a nonzero indicator remains.
struct GreedyPick {
  const QuadraturePoint* point = nullptr;
  std::size_t mu_index = 0;
  double value = 0.0;
};

GreedyPick greedy_pick(Workspace& ws, SgRomPair& pair, const std::vector<const Vector*>& mus,
                       bool adjoint_residual_indicator) {
  GreedyPick best;
  const double rho = density_factor(pair.grid().dim());
  const SparseQuadrature& ext = pair.extended_rule();
  for (const auto& p : ext.points()) {
    for (std::size_t m = 0; m < mus.size(); ++m) {
      if (pair.basis().sampled(p.y, *mus[m])) continue;
      const NodeRom& node = pair.evaluate(ws, p, *mus[m], adjoint_residual_indicator);
      const double v =
          rho * (adjoint_residual_indicator ? node.adjoint_residual_norm : node.residual_norm);
      if (v > best.value) best = {&p, m, v};
    }
  }
  return best;
}

int take_sample(Workspace& ws, SgRomPair& pair, const GreedyPick& pick, const Vector& mu,
                bool have_adjoint) {
  const QuadraturePoint point = *pick.point;
  const NodeRom& node = pair.evaluate(ws, point, mu, have_adjoint);
  const Vector u0 = pair.basis().columns() * node.primal.q;
  return pair.sample(ws, point.y, mu, u0);
}

}  // namespace

GradientRefinement refine_for_gradient(Workspace& ws, SgRomPair& pair, const Vector& mu,
                                       double delta, double kappa_phi, const Betas& betas,
                                       double floor) {
  if (!(delta > 0.0) || !(kappa_phi > 0.0))
    throw std::invalid_argument("refine_for_gradient: delta and kappa_phi must be positive");
  GradientRefinement out;
  const int max_level = ws.settings.max_level;

  auto update = [&] {
    out.indicator = eval_gradient_indicator(ws, pair, mu, betas);
    out.model_gradient_norm = out.indicator.model_gradient.norm();
    out.guard = std::min(out.model_gradient_norm, delta);
    out.floor_active = out.guard < floor;
    const double level = std::max(out.guard, floor);
    for (int i = 0; i < 3; ++i) out.thresholds[i] = kappa_phi / (3.0 * betas[i]) * level;
    out.skipped = level <= 64.0 * std::numeric_limits<double>::epsilon();
  };
  auto event = [&](std::string kind, std::string target, double before, double after) {
    ws.log({0, std::move(kind), std::move(target), before, after, pair.grid().size(), pair.basis().size()});
  };
  auto refine_grid = [&](const char* kind) {
    const MultiIndex best = argmax_term(out.indicator.truncation);
    const double before = out.indicator.e4;
    pair.refine_grid(best, max_level);
    ++out.grid_refinements;
    update();
    event(kind, best.str(), before, out.indicator.e4);
  };
  // One greedy pick for E1 (primal) or E3 (adjoint); escalates to the grid
  // when every candidate node is already sampled.
  auto greedy = [&](bool adjoint) {
    const GreedyPick pick = greedy_pick(ws, pair, {&mu}, adjoint);
    const double before = adjoint ? out.indicator.e3 : out.indicator.e1;
    if (!pick.point) {
      refine_grid("grid-escalate");
      return;
    }
    const std::string label = node_label(*pick.point);
    const int added = take_sample(ws, pair, pick, mu, true);
    ++out.greedy_samples;
    if (added == 0) {
      out.saturated = true;
      event("greedy-saturated", label, before, before);
      return;
    }
    update();
    event(adjoint ? "greedy-adjoint" : "greedy-primal", label, before,
          adjoint ? out.indicator.e3 : out.indicator.e1);
  };

  update();
  if (out.skipped) return out;
  auto basis_done = [&] {
    return out.saturated ||
           (out.indicator.e1 <= out.thresholds[0] && out.indicator.e3 <= out.thresholds[1]);
  };
  while (!out.skipped && (out.indicator.e4 > out.thresholds[2] || !basis_done())) {
    if (out.indicator.e4 > out.thresholds[2]) refine_grid("grid-gradient");
    while (!out.skipped && !out.saturated && out.indicator.e1 > out.thresholds[0]) greedy(false);
    while (!out.skipped && !out.saturated && out.indicator.e3 > out.thresholds[1]) greedy(true);
  }
  return out;
}

double objective_threshold(double alpha, double eta, double m_decrease, double r_k, double omega) {
  return std::pow(eta * std::min(m_decrease, r_k), 1.0 / omega) / (2.0 * alpha);
}

ObjectiveRefinement refine_for_objective(Workspace& ws, SgRomPair& pair, const Vector& mu_k,
                                         const Vector& mu_trial, double m_decrease, double r_k,
                                         double eta, double omega, const Alphas& alphas,
                                         double resolution) {
  if (!(m_decrease > 0.0))
    throw std::invalid_argument("refine_for_objective: model decrease must be positive");
  ObjectiveRefinement out;
  const int max_level = ws.settings.max_level;
  for (int i = 0; i < 2; ++i) {
    out.literal_thresholds[i] = objective_threshold(alphas[i], eta, m_decrease, r_k, omega);
    const double floor = resolution * eta * std::min(m_decrease, r_k) / (2.0 * alphas[i]);
    out.effective_thresholds[i] = std::max(out.literal_thresholds[i], floor);
    out.floor_active = out.floor_active || floor > out.literal_thresholds[i];
  }
  auto update = [&] { out.indicator = eval_objective_indicator(ws, pair, mu_k, mu_trial, alphas); };
  auto e1 = [&] { return out.indicator.e1_center + out.indicator.e1_trial; };
  auto e2 = [&] { return out.indicator.e2_center + out.indicator.e2_trial; };
  auto event = [&](std::string kind, std::string target, double before, double after) {
    ws.log({0, std::move(kind), std::move(target), before, after, pair.grid().size(), pair.basis().size()});
  };
  auto refine_grid = [&](const char* kind) {
    const MultiIndex best = argmax_term(out.indicator.truncation);
    const double before = e2();
    pair.refine_grid(best, max_level);
    ++out.grid_refinements;
    update();
    event(kind, best.str(), before, e2());
  };

  update();
  while (e2() > out.effective_thresholds[1] || (!out.saturated && e1() > out.effective_thresholds[0])) {
    if (e2() > out.effective_thresholds[1]) refine_grid("grid-objective");
    while (!out.saturated && e1() > out.effective_thresholds[0]) {
      const GreedyPick pick = greedy_pick(ws, pair, {&mu_k, &mu_trial}, false);
      if (!pick.point) {
        refine_grid("grid-escalate");
        continue;
      }
      const double before = e1();
      const std::string label = node_label(*pick.point) + (pick.mu_index == 0 ? " mu_k" : " mu_trial");
      const int added = take_sample(ws, pair, pick, pick.mu_index == 0 ? mu_k : mu_trial, false);
      ++out.greedy_samples;
      if (added == 0) {
        out.saturated = true;
        event("greedy-saturated", label, before, before);
        break;
      }
      update();
      event("greedy-objective", label, before, e1());
    }
  }
  return out;
}

Betas balanced_betas(Workspace& ws, SgRomPair& pair, const Vector& mu, double scale) {
  const GradientIndicator ind = eval_gradient_indicator(ws, pair, mu, {1.0, 1.0, 1.0});
  constexpr double tiny = 1e-300;
  return {scale / std::max(ind.e1, tiny), scale / std::max(ind.e3, tiny), scale / std::max(ind.e4, tiny)};
}

Alphas balanced_alphas(Workspace& ws, SgRomPair& pair, const Vector& mu, double scale) {
  const ObjectiveIndicator ind = eval_objective_indicator(ws, pair, mu, mu, {1.0, 1.0});
  constexpr double tiny = 1e-300;
  return {scale / std::max(ind.e1_center, tiny), scale / std::max(ind.e2_center, tiny)};
}

}  // namespace sgrom
