#include <doctest.h>

#include <cmath>
#include <random>

#include "sgrom/problems.hpp"
#include "sgrom/steihaug_toint.hpp"
#include "sgrom/trust_region.hpp"

using namespace sgrom;

namespace {

// Linear diffusion without randomness in the conductivity, so the
// objective is a deterministic quadratic in mu.
LinearDiffusion deterministic_linear() {
  LinearDiffusionOptions o;
  o.n_u = 31;
  o.n_mu = 4;
  o.kappa_y1 = 0.0;
  o.kappa_y2 = 0.0;
  return LinearDiffusion(o);
}

// Normal equations (h S^T S + alpha I) mu = h S^T t with S = A^{-1} B.
Vector analytic_minimizer(const LinearDiffusion& p) {
  const Matrix a = p.stiffness(Vector::Zero(2));
  const Matrix s = a.lu().solve(p.control_load());
  const double h = p.mesh_width();
  const Matrix lhs = h * s.transpose() * s + p.alpha() * Matrix::Identity(p.param_dim(), p.param_dim());
  return lhs.ldlt().solve(h * s.transpose() * p.target());
}

}  // namespace

TEST_CASE("Steihaug-Toint with identity Hessian, interior") {
  Vector g(3);
  g << 1.0, -2.0, 0.5;
  const SubproblemStep s = steihaug_toint(g, [](const Vector& v) { return v; }, 10.0, 1e-4);
  CHECK((s.step + g).norm() <= 1e-12);
  CHECK(s.decrease == doctest::Approx(0.5 * g.squaredNorm()));
  CHECK(s.exit == "interior");
  CHECK(s.cauchy_satisfied());
}

TEST_CASE("Steihaug-Toint with identity Hessian, boundary") {
  Vector g(2);
  g << 3.0, 4.0;
  const SubproblemStep s = steihaug_toint(g, [](const Vector& v) { return v; }, 1.0, 1e-4);
  CHECK((s.step + g / g.norm()).norm() <= 1e-12);
  CHECK(s.exit == "boundary");
  CHECK(s.step.norm() <= 1.0 * (1.0 + 1e-12));
}

TEST_CASE("Steihaug-Toint matches the Newton decrease on SPD problems") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(5, 5);
  for (int i = 0; i < 25; ++i) m(i / 5, i % 5) = n(rng);
  const Matrix h = m * m.transpose() + Matrix::Identity(5, 5);
  Vector g(5);
  for (int i = 0; i < 5; ++i) g[i] = n(rng);
  const SubproblemStep s = steihaug_toint(g, [&](const Vector& v) { return Vector(h * v); }, 1e6, 1e-4);
  CHECK(s.decrease == doctest::Approx(0.5 * g.dot(h.ldlt().solve(g))).epsilon(1e-8));
}

TEST_CASE("Steihaug-Toint follows negative curvature to the boundary") {
  Vector g(2);
  g << 1.0, 0.0;
  const SubproblemStep s = steihaug_toint(g, [](const Vector& v) { return Vector(-v); }, 2.0, 1e-4);
  CHECK(s.exit == "negative-curvature");
  CHECK(s.step.norm() == doctest::Approx(2.0));
  CHECK(s.decrease > 0.0);
}

TEST_CASE("Steihaug-Toint with zero gradient") {
  const SubproblemStep s = steihaug_toint(Vector::Zero(3), [](const Vector& v) { return v; }, 1.0, 1e-4);
  CHECK(s.step.norm() == 0.0);
  CHECK(s.decrease == 0.0);
}

TEST_CASE("trust-region config validation names the field") {
  TrustRegionConfig c;
  CHECK_NOTHROW(c.validate());
  c.eta2 = 0.05;
  try {
    c.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("trust_region.", 0) == 0);
  }
  TrustRegionConfig d;
  d.omega = 1.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  CHECK(TrustRegionConfig{}.forcing_term(3) == doctest::Approx(0.25));
}

TEST_CASE("tr_init builds the seed pair") {
  BurgersControl p;
  TrustRegionConfig c;
  TrustRegionState s = tr_init(p, c, Vector::Zero(p.param_dim()));
  CHECK(s.pair_grad.grid().size() == 1);
  CHECK(s.pair_grad.grid_rule().size() == 1);
  CHECK(s.pair_grad.basis().size() <= 2 + p.param_dim());
  CHECK(s.delta == c.delta0);
  CHECK(s.ws.counters.hdm_primal == 1);
  CHECK_THROWS_AS(tr_init(p, c, Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("deterministic quadratic converges to the analytic minimizer") {
  const LinearDiffusion p = deterministic_linear();
  const Vector target = analytic_minimizer(p);
  TrustRegionConfig c;
  c.gtol = 1e-9;
  const TrustRegionResult r = tr_run(p, c, Vector::Zero(p.param_dim()));
  CHECK(r.converged);
  CHECK(r.history.size() <= 15);
  CHECK((r.mu - target).norm() <= 1e-6);

  for (const IterationRecord& rec : r.history) {
    if (!rec.has_step) continue;
    CHECK(rec.step_norm <= rec.delta * (1.0 + 1e-12));
    CHECK(rec.cauchy_ok);
    CHECK(rec.gradient_condition);
    if (rec.accepted) CHECK(rec.psi_trial < rec.psi_center);
    const int branches = (rec.radius_branch == "shrink") + (rec.radius_branch == "keep") + (rec.radius_branch == "grow");
    CHECK(branches == 1);
    if (!rec.accepted) CHECK(rec.delta_next < rec.delta);
  }
}

TEST_CASE("starting at the minimizer stops without further HDM queries") {
  const LinearDiffusion p = deterministic_linear();
  TrustRegionConfig c;
  c.gtol = 1e-8;
  const TrustRegionResult r = tr_run(p, c, analytic_minimizer(p));
  CHECK(r.converged);
  CHECK(r.history.size() <= 2);
  CHECK(r.counters.hdm_primal == 1);
}

TEST_CASE("model gradient approaches the model derivative as the ROM resolves the nodes") {
  BurgersControl p;
  TrustRegionConfig c;
  TrustRegionState s = tr_init(p, c, Vector::Zero(p.param_dim()));
  const Vector mu = Vector::Constant(p.param_dim(), 0.01);
  s.pair_grad.refine_grid(MultiIndex({2, 1}), 10);
  const double h = 1e-5;
  auto fd_gap = [&] {
    const Vector g = model_gradient(s.ws, s.pair_grad, mu);
    double gap = 0.0;
    for (Eigen::Index j = 0; j < p.param_dim(); ++j) {
      const Vector e = Vector::Unit(p.param_dim(), j);
      const double fd =
          (model_value(s.ws, s.pair_grad, mu + h * e) - model_value(s.ws, s.pair_grad, mu - h * e)) / (2 * h);
      gap = std::max(gap, std::abs(fd - g[j]));
    }
    return gap / g.norm();
  };
  const double coarse = fd_gap();
  for (const QuadraturePoint& q : s.pair_grad.grid_rule().points())
    if (!s.pair_grad.basis().sampled(q.y, mu)) s.pair_grad.sample(s.ws, q.y, mu, std::nullopt);
  const double fine = fd_gap();
  CHECK(fine <= 0.1 * coarse);
}

TEST_CASE("first Burgers iteration obeys the step contracts") {
  BurgersControl p;
  TrustRegionConfig c;
  TrustRegionState s = tr_init(p, c, Vector::Zero(p.param_dim()));
  const IterationRecord& rec = tr_iterate(s, c);
  CHECK(rec.k == 0);
  CHECK(rec.gradient_condition);
  CHECK(rec.has_step);
  CHECK(rec.step_norm <= rec.delta * (1.0 + 1e-12));
  CHECK(rec.cauchy_ok);
  CHECK(rec.m_center > rec.m_trial);
  if (rec.accepted) {
    CHECK(rec.psi_trial < rec.psi_center);
    CHECK((s.mu - rec.mu).norm() == doctest::Approx(rec.step_norm));
  } else {
    CHECK(s.mu == rec.mu);
  }
  CHECK(s.k == 1);
  CHECK(s.history.size() == 1);
}
