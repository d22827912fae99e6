#include <doctest.h>

#include <cmath>
#include <random>

#include "sgrom/oracle.hpp"
#include "sgrom/problems.hpp"

using namespace sgrom;

namespace {

Vector random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * u(rng);
  return v;
}

BurgersOptions homogeneous_burgers() {
  BurgersOptions o;
  o.inflow_base = 0.0;
  o.inflow_amplitude = 0.0;
  o.reference_level = 1;
  return o;
}

// Second-order Taylor remainder of the residual along v for two step sizes.
std::pair<double, double> taylor_remainders(const ModelProblem& p, const Vector& u, const Vector& y,
                                            const Vector& mu, const Vector& v) {
  const Vector r0 = p.residual(u, y, mu);
  const Vector jv = p.jacobian_state(u, y, mu) * v;
  auto rem = [&](double h) { return (p.residual(u + h * v, y, mu) - r0 - h * jv).norm(); };
  return {rem(1e-3), rem(1e-4)};
}

}  // namespace

TEST_CASE("Burgers residual vanishes for zero data") {
  BurgersControl p(homogeneous_burgers());
  const Vector u = Vector::Zero(p.state_dim());
  const Vector y = Vector::Zero(2);
  CHECK(p.residual(u, y, Vector::Zero(p.param_dim())).norm() == 0.0);
  const PrimalSolution s = solve_primal(p, Vector::Constant(2, 0.3), Vector::Zero(p.param_dim()));
  CHECK(s.u.norm() <= 1e-12);
}

TEST_CASE("linear diffusion residual is affine in u") {
  LinearDiffusion p;
  std::mt19937_64 rng(1);
  const Vector u = random_vector(rng, p.state_dim());
  const Vector y = random_vector(rng, 2);
  const Vector mu = random_vector(rng, p.param_dim());
  const Vector zero = Vector::Zero(p.state_dim());
  CHECK((p.residual(u, y, mu) - p.residual(zero, y, mu) - p.stiffness(y) * u).norm() <= 1e-12);
}

TEST_CASE("state Jacobians are consistent with the residual") {
  std::mt19937_64 rng(2);
  LinearDiffusion lin;
  BurgersControl bur;
  for (const ModelProblem* p : {static_cast<const ModelProblem*>(&lin), static_cast<const ModelProblem*>(&bur)}) {
    const Vector u = random_vector(rng, p->state_dim());
    const Vector v = random_vector(rng, p->state_dim());
    const Vector y = random_vector(rng, 2);
    const Vector mu = random_vector(rng, p->param_dim());
    const auto [r3, r4] = taylor_remainders(*p, u, y, mu, v);
    if (p == &lin) {
      CHECK(r3 <= 1e-12);
    } else {
      // O(h^2): a tenfold smaller step shrinks the remainder about 100 times.
      CHECK(r4 <= 0.02 * r3);
    }
    const Matrix j = p->jacobian_state(u, y, mu);
    CHECK((p->jacobian_state_product(u, y, mu, v) - j * v).norm() <= 1e-12 * (1.0 + (j * v).norm()));
    CHECK((p->jacobian_state_transpose_product(u, y, mu, v) - j.transpose() * v).norm() <=
          1e-12 * (1.0 + (j.transpose() * v).norm()));
  }
}

TEST_CASE("parameter Jacobian and QoI partials match finite differences") {
  std::mt19937_64 rng(3);
  BurgersControl p;
  const Vector u = random_vector(rng, p.state_dim());
  const Vector y = random_vector(rng, 2);
  const Vector mu = random_vector(rng, p.param_dim());
  const double h = 1e-6;
  const Matrix jp = p.jacobian_param(u, y, mu);
  const Vector fu = p.qoi_state_gradient(u, y, mu);
  const Vector fm = p.qoi_param_gradient(u, y, mu);
  for (Eigen::Index j = 0; j < p.param_dim(); ++j) {
    const Vector e = Vector::Unit(p.param_dim(), j);
    const Vector col = (p.residual(u, y, mu + h * e) - p.residual(u, y, mu - h * e)) / (2 * h);
    CHECK((col - jp.col(j)).norm() <= 1e-8);
    const double d = (p.qoi(u, y, mu + h * e) - p.qoi(u, y, mu - h * e)) / (2 * h);
    CHECK(std::abs(d - fm[j]) <= 1e-6 * (1.0 + std::abs(fm[j])));
  }
  for (Eigen::Index i = 0; i < p.state_dim(); i += 13) {
    const Vector e = Vector::Unit(p.state_dim(), i);
    const double d = (p.qoi(u + h * e, y, mu) - p.qoi(u - h * e, y, mu)) / (2 * h);
    CHECK(std::abs(d - fu[i]) <= 1e-6 * (1.0 + std::abs(fu[i])));
  }
}

TEST_CASE("linear diffusion solves in one Newton step") {
  LinearDiffusion p;
  const PrimalSolution s = solve_primal(p, Vector::Constant(2, 0.5), Vector::Constant(p.param_dim(), 1.0));
  CHECK(s.newton_iters == 1);
  CHECK(s.residual_norm <= 1e-12);
}

TEST_CASE("Burgers Newton converges and reports its residual") {
  BurgersControl p;
  const Vector y = Vector::Constant(2, -0.6);
  const Vector mu = Vector::Constant(p.param_dim(), 0.2);
  const PrimalSolution s = solve_primal(p, y, mu);
  CHECK(s.residual_norm == doctest::Approx(p.residual(s.u, y, mu).norm()).epsilon(1e-10));
  CHECK(s.residual_norm <= 1e-10);
  CHECK(s.newton_iters > 1);
}

TEST_CASE("Newton failure carries the last iterate") {
  BurgersControl p;
  NewtonOptions o;
  o.max_iters = 1;
  try {
    solve_primal(p, Vector::Zero(2), Vector::Constant(p.param_dim(), 0.3), std::nullopt, o);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.last_iterate().size() == p.state_dim());
    CHECK(e.residual_norm() > 0.0);
  }
}

TEST_CASE("Burgers discretization converges at second order") {
  const Vector y = Vector::Constant(2, 0.3);
  std::vector<Vector> sols;
  for (Eigen::Index n : {63, 127, 255}) {
    BurgersOptions o;
    o.n_u = n;
    o.reference_level = 1;
    BurgersControl p(o);
    sols.push_back(solve_primal(p, y, Vector::Constant(p.param_dim(), 0.1)).u);
  }
  // Discrepancies at the nodes of the coarsest mesh.
  auto gap = [&](const Vector& coarse, const Vector& fine) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < 63; ++i) {
      const Eigen::Index ratio = (fine.size() + 1) / 64;
      const Eigen::Index ic = (i + 1) * ((coarse.size() + 1) / 64) - 1;
      m = std::max(m, std::abs(coarse[ic] - fine[(i + 1) * ratio - 1]));
    }
    return m;
  };
  const double e1 = gap(sols[0], sols[1]);
  const double e2 = gap(sols[1], sols[2]);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("adjoint residual vanishes at the adjoint solution") {
  BurgersControl p;
  const Vector y = Vector::Constant(2, 0.1);
  const Vector mu = Vector::Constant(p.param_dim(), -0.1);
  const PrimalSolution s = solve_primal(p, y, mu);
  const AdjointSolution a = solve_adjoint(p, s.u, y, mu);
  CHECK(adjoint_residual(p, a.lambda, s.u, y, mu).norm() <= 1e-12);
  CHECK(a.residual_norm <= 1e-12);
}

TEST_CASE("adjoint gradient matches finite differences on both problems") {
  std::mt19937_64 rng(4);
  LinearDiffusion lin;
  BurgersControl bur;
  for (int s = 0; s < 3; ++s) {
    const Vector y = random_vector(rng, 2);
    const Vector mu_l = random_vector(rng, lin.param_dim(), 0.5);
    const Vector mu_b = random_vector(rng, bur.param_dim(), 0.5);
    const Vector gl = reduced_qoi_and_gradient(lin, y, mu_l).gradient;
    const Vector gb = reduced_qoi_and_gradient(bur, y, mu_b).gradient;
    CHECK((gl - fd_gradient(lin, y, mu_l, 1e-5)).norm() <= 1e-6 * gl.norm());
    CHECK((gb - fd_gradient(bur, y, mu_b, 1e-5)).norm() <= 1e-5 * gb.norm());
  }
}

TEST_CASE("primal sensitivities are directional derivatives of the state") {
  BurgersControl p;
  const Vector y = Vector::Constant(2, -0.2);
  const Vector mu = Vector::Constant(p.param_dim(), 0.05);
  const PrimalSolution s = solve_primal(p, y, mu);
  const double h = 1e-6;
  for (Eigen::Index j : {0, 5}) {
    const Vector e = Vector::Unit(p.param_dim(), j);
    const Vector fd = (solve_primal(p, y, mu + h * e, s.u).u - solve_primal(p, y, mu - h * e, s.u).u) / (2 * h);
    CHECK((fd - primal_sensitivity(p, s.u, y, mu, j)).norm() <= 1e-6 * (1.0 + fd.norm()));
  }
}

TEST_CASE("dimension mismatches are rejected") {
  LinearDiffusion p;
  CHECK_THROWS_AS(p.residual(Vector::Zero(3), Vector::Zero(2), Vector::Zero(p.param_dim())), std::invalid_argument);
  CHECK_THROWS_AS(p.residual(Vector::Zero(p.state_dim()), Vector::Zero(3), Vector::Zero(p.param_dim())),
                  std::invalid_argument);
}

TEST_CASE("problem parameters are validated") {
  LinearDiffusionOptions o;
  o.kappa_y1 = 0.8;
  o.kappa_y2 = 0.3;
  CHECK_THROWS_AS(LinearDiffusion{o}, std::invalid_argument);
  BurgersOptions b;
  b.inv_nu_left = -1.0;
  CHECK_THROWS_AS(BurgersControl{b}, std::invalid_argument);
}

TEST_CASE("Burgers viscosity interpolates between the endpoints") {
  BurgersControl p;
  CHECK(p.viscosity(Vector::Constant(2, -1.0)) == doctest::Approx(1.0 / 10.0));
  CHECK(p.viscosity(Vector::Constant(2, 1.0)) == doctest::Approx(1.0 / 60.0));
  Vector y(2);
  y << 0.0, 1.0;
  CHECK(p.inflow(y) == doctest::Approx(1.25));
}
