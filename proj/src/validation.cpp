#include "sgrom/validation.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "sgrom/rom.hpp"
#include "sgrom/sparse_grid.hpp"
#include "sgrom/trust_region.hpp"

namespace sgrom {

namespace {

Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = scale * unit(rng);
  return v;
}

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

void finish(SuiteResult& r) { r.passed = r.failures.empty(); }

// Exactness degree of the nested CC rule of a level; the rules have an odd
// number of symmetric nodes.
int cc_degree(int level) { return static_cast<int>(cc_points(level)); }

double uniform_moment(int a) { return a % 2 ? 0.0 : 1.0 / (a + 1); }

}  // namespace

SuiteResult fd_gradient_suite(const std::vector<FdCase>& cases, int n_samples, double h, std::uint64_t seed,
                              double mu_scale, const NewtonOptions& options) {
  SuiteResult r;
  r.name = "fd-gradient";
  if (n_samples <= 0) {
    r.vacuous = true;
    r.passed = true;
    r.summary = "warning: no samples requested, nothing checked";
    return r;
  }
  std::ostringstream summary;
  for (const FdCase& c : cases) {
    const ModelProblem& p = *c.problem;
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int s = 0; s < n_samples; ++s) {
      const Vector y = uniform_vector(rng, p.stochastic_dim(), 1.0);
      const Vector mu = uniform_vector(rng, p.param_dim(), mu_scale);
      Vector g, fd;
      try {
        g = reduced_qoi_and_gradient(p, y, mu, options).gradient;
        fd = fd_gradient(p, y, mu, h, options);
      } catch (const SolverError& e) {
        r.failures.push_back(p.name() + " sample " + std::to_string(s) + ": " + e.what());
        continue;
      }
      const double err = (g - fd).norm() / std::max(fd.norm(), 1e-14);
      worst = std::max(worst, err);
      if (!(err <= c.tol))
        r.failures.push_back(p.name() + " sample " + std::to_string(s) + ": relative error " + sci(err) +
                             " > " + sci(c.tol));
    }
    summary << p.name() << " max rel err " << sci(worst) << " (tol " << sci(c.tol) << "); ";
  }
  r.summary = summary.str();
  finish(r);
  return r;
}

SuiteResult quadrature_suite() {
  SuiteResult r;
  r.name = "quadrature";
  double worst_weight = 0.0, worst_moment = 0.0;

  for (int a = 1; a <= 4; ++a) {
    for (int b = 1; b <= 4; ++b) {
      const SparseQuadrature sparse = assemble(MultiIndexSet::rectangular({a, b}));
      const SparseQuadrature tensor = tensor_rule(MultiIndex({a, b}));
      double err = 0.0;
      for (const QuadraturePoint& p : tensor.points()) err = std::max(err, std::abs(p.weight - sparse.weight(p.key)));
      for (const QuadraturePoint& p : sparse.points()) err = std::max(err, std::abs(p.weight - tensor.weight(p.key)));
      worst_weight = std::max(worst_weight, err);
      if (!(err <= 1e-12))
        r.failures.push_back("rectangle {1.." + std::to_string(a) + "}x{1.." + std::to_string(b) +
                             "}: weight deviation " + sci(err));
    }
  }

  // Isotropic sets {i : i_1 + i_2 <= L + 1}: exact for y1^a y2^b whenever
  // some index of the set carries the degree in both directions.
  for (int level = 1; level <= 5; ++level) {
    MultiIndexSet set(2);
    for (int i = 1; i <= level; ++i)
      for (int j = 1; i + j <= level + 1; ++j) set.insert(MultiIndex({i, j}));
    const SparseQuadrature quad = assemble(set);
    for (int a = 0; a <= 17; ++a) {
      for (int b = 0; b <= 17; ++b) {
        bool exact = false;
        for (const MultiIndex& i : set) exact = exact || (a <= cc_degree(i[0]) && b <= cc_degree(i[1]));
        if (!exact) continue;
        const double value = integrate(quad, [&](const QuadraturePoint& p) {
          return std::pow(p.y[0], a) * std::pow(p.y[1], b);
        });
        const double err = std::abs(value - uniform_moment(a) * uniform_moment(b));
        worst_moment = std::max(worst_moment, err);
        if (!(err <= 1e-10))
          r.failures.push_back("isotropic level " + std::to_string(level) + ", moment (" + std::to_string(a) +
                               "," + std::to_string(b) + "): error " + sci(err));
      }
    }
  }
  r.summary = "max weight deviation " + sci(worst_weight) + ", max moment error " + sci(worst_moment);
  finish(r);
  return r;
}

SuiteResult rom_property_suite(const ModelProblem& problem, std::uint64_t seed, double mu_scale,
                               const NewtonOptions& options) {
  SuiteResult r;
  r.name = "rom-properties:" + problem.name();
  std::mt19937_64 rng(seed);
  const Vector mu0 = Vector::Zero(problem.param_dim());
  const ReducedBasis seed_b = seed_basis(problem, mu0, options);

  struct Point {
    Vector y, mu;
  };
  auto draw = [&] {
    return Point{uniform_vector(rng, problem.stochastic_dim(), 1.0), uniform_vector(rng, problem.param_dim(), mu_scale)};
  };
  std::vector<Point> nodes;
  for (int i = 0; i < 5; ++i) nodes.push_back(draw());

  double worst_primal = 0.0, worst_adjoint = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Point& n = nodes[i];
    const PrimalSolution u = solve_primal(problem, n.y, n.mu, std::nullopt, options);
    const AdjointSolution l = solve_adjoint(problem, u.u, n.y, n.mu);
    ReducedBasis basis = seed_b;
    basis.append(u.u, {n.y, n.mu, SnapshotKind::primal, false});
    basis.append(l.lambda, {n.y, n.mu, SnapshotKind::adjoint, false});
    const RomPrimal rp = solve_rom_primal(problem, basis, n.y, n.mu, Vector(basis.columns().transpose() * u.u));
    const RomAdjoint ra = solve_rom_adjoint(problem, basis, rp.q, n.y, n.mu);
    const double primal_rel = rp.residual_norm / (1.0 + u.u.norm());
    const double dfdu = problem.qoi_state_gradient(basis.columns() * rp.q, n.y, n.mu).norm();
    const double adjoint_rel = ra.residual_norm / (1.0 + dfdu);
    worst_primal = std::max(worst_primal, primal_rel);
    worst_adjoint = std::max(worst_adjoint, adjoint_rel);
    if (!(primal_rel <= 1e-8))
      r.failures.push_back("interpolation node " + std::to_string(i) + ": primal residual " + sci(primal_rel));
    if (!(adjoint_rel <= 1e-8))
      r.failures.push_back("interpolation node " + std::to_string(i) + ": adjoint residual " + sci(adjoint_rel));
  }

  // Monotonicity: append primal snapshots at 10 further points; the ROM at
  // each node restarts from its previous optimum padded with zeros.
  ReducedBasis basis = seed_b;
  std::vector<Vector> q(nodes.size());
  std::vector<double> res(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const RomPrimal rp = solve_rom_primal(problem, basis, nodes[i].y, nodes[i].mu);
    q[i] = rp.q;
    res[i] = rp.residual_norm;
  }
  double worst_increase = 0.0;
  for (int step = 0; step < 10; ++step) {
    const Point p = draw();
    const PrimalSolution u = solve_primal(problem, p.y, p.mu, std::nullopt, options);
    basis.append(u.u, {p.y, p.mu, SnapshotKind::primal, false});
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      Vector q0 = Vector::Zero(basis.size());
      q0.head(q[i].size()) = q[i];
      const RomPrimal rp = solve_rom_primal(problem, basis, nodes[i].y, nodes[i].mu, q0);
      const double increase = rp.residual_norm - res[i];
      worst_increase = std::max(worst_increase, increase);
      if (!(increase <= 1e-12))
        r.failures.push_back("append " + std::to_string(step) + ", node " + std::to_string(i) +
                             ": residual grew by " + sci(increase));
      q[i] = rp.q;
      res[i] = rp.residual_norm;
    }
  }
  r.summary = "interpolation primal " + sci(worst_primal) + ", adjoint " + sci(worst_adjoint) +
              "; largest residual increase " + sci(worst_increase) + "; final basis " +
              std::to_string(basis.size());
  finish(r);
  return r;
}

SuiteResult bound_suite(const ModelProblem& problem, int n_samples, std::uint64_t seed, double mu_scale,
                        double max_median_factor, BoundValidation* out, const NewtonOptions& options) {
  SuiteResult r;
  r.name = "bounds:" + problem.name();
  if (n_samples <= 0) {
    r.vacuous = true;
    r.passed = true;
    r.summary = "warning: no samples requested, nothing checked";
    return r;
  }
  const ReducedBasis basis = seed_basis(problem, Vector::Zero(problem.param_dim()), options);
  BoundValidation v = validate_bounds(problem, basis, n_samples, seed, mu_scale, options);
  auto check = [&](const BoundEstimate& e, const std::string& family) {
    for (double x : e.ratios)
      if (!std::isfinite(x)) r.failures.push_back(family + ": non-finite ratio");
    if (e.ratios.empty()) return;
    if (!(e.max_ratio <= max_median_factor * e.median_ratio))
      r.failures.push_back(family + ": max " + sci(e.max_ratio) + " exceeds " + sci(max_median_factor) +
                           " x median " + sci(e.median_ratio));
  };
  check(v.qoi, "qoi");
  check(v.gradient, "gradient");
  r.summary = "basis " + std::to_string(basis.size()) + "; qoi ratio max " + sci(v.qoi.max_ratio) + " median " +
              sci(v.qoi.median_ratio) + " (excluded " + std::to_string(v.qoi.excluded) +
              "); gradient ratio max " + sci(v.gradient.max_ratio) + " median " + sci(v.gradient.median_ratio) +
              " (excluded " + std::to_string(v.gradient.excluded) + ")";
  if (out) *out = std::move(v);
  finish(r);
  return r;
}

}  // namespace sgrom
