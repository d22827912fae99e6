#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "sgrom/oracle.hpp"
#include "sgrom/problems.hpp"
#include "sgrom/trust_region.hpp"

using namespace sgrom;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("fd_gradient matches the adjoint gradient on linear diffusion") {
  LinearDiffusion p;
  const Vector y = vec({0.3, -0.7});
  Vector mu(p.param_dim());
  for (Eigen::Index j = 0; j < mu.size(); ++j) mu[j] = 0.1 * std::sin(1.0 + j);
  const Vector g = reduced_qoi_and_gradient(p, y, mu).gradient;
  const Vector fd = fd_gradient(p, y, mu, 1e-5);
  CHECK((g - fd).norm() / fd.norm() <= 1e-6);
}

TEST_CASE("fd_gradient of a pure regularizer is alpha mu") {
  test::PolynomialProblem p(0.0, 0.5);
  const Vector mu = vec({0.4, -1.2});
  const Vector fd = fd_gradient(p, vec({0.2, 0.1}), mu, 1e-4);
  CHECK((fd - 0.5 * mu).norm() <= 1e-8);
}

TEST_CASE("fd_gradient error is V-shaped in h") {
  BurgersControl p;
  const Vector y = vec({0.2, -0.4});
  const Vector mu = Vector::Constant(p.param_dim(), 0.1);
  const Vector g = reduced_qoi_and_gradient(p, y, mu).gradient;
  std::vector<double> err;
  for (double h : {1e-1, 1e-5, 1e-11}) err.push_back((fd_gradient(p, y, mu, h) - g).norm());
  CHECK(err[1] < err[0]);
  CHECK(err[1] < err[2]);
}

TEST_CASE("tensor_reference integrates polynomials exactly") {
  test::PolynomialProblem p;
  const Vector mu = vec({0.3, -0.2});
  // y2^6 needs 9 points per dimension; 5 points are exact to degree 5 only.
  const TensorReference ref = tensor_reference(p, mu, 4);
  CHECK(ref.nodes == 81);
  CHECK(std::abs(tensor_reference(p, mu, 3).value - p.mean(mu)) > 1e-4);
  CHECK(std::abs(ref.value - p.mean(mu)) <= 1e-10);
  CHECK((ref.gradient - p.mean_gradient(mu)).norm() <= 1e-10);
}

TEST_CASE("tensor_reference level 1 is the single node y = 0") {
  BurgersControl p;
  const Vector mu = Vector::Constant(p.param_dim(), 0.05);
  const TensorReference ref = tensor_reference(p, mu, 1);
  CHECK(ref.nodes == 1);
  CHECK(ref.value == doctest::Approx(reduced_qoi(p, Vector::Zero(2), mu)).epsilon(1e-14));
}

TEST_CASE("tensor_reference agrees with the sparse assembly of the full rectangle") {
  LinearDiffusion p;
  const Vector mu = Vector::Constant(p.param_dim(), 0.2);
  for (int level = 1; level <= 4; ++level) {
    const TensorReference ref = tensor_reference(p, mu, level);
    const SparseQuadrature rule = assemble(MultiIndexSet::rectangular({level, level}));
    const double sparse = integrate(rule, [&](const QuadraturePoint& q) { return reduced_qoi(p, q.y, mu); });
    CHECK(std::abs(ref.value - sparse) <= 1e-12);
  }
}

TEST_CASE("tensor_reference rejects unsupported sizes") {
  LinearDiffusion p;
  CHECK_THROWS_AS(tensor_reference(p, Vector::Zero(p.param_dim()), 7), std::invalid_argument);
  CHECK_THROWS_AS(tensor_reference(p, Vector::Zero(p.param_dim()), 0), std::invalid_argument);
}

TEST_CASE("sg_iso_baseline finds the minimizer of a quadratic") {
  test::PolynomialProblem p(1.0, 0.5);
  // grad = alpha mu + (0, 1/3) vanishes at mu = (0, -2/3).
  const BaselineResult r = sg_iso_baseline(p, vec({1.0, 1.0}), 3, 50, 1e-10);
  CHECK(r.converged);
  CHECK((r.mu - vec({0.0, -2.0 / 3.0})).norm() <= 1e-6);
  CHECK(r.counters.rom_primal == 0);
  CHECK(r.counters.hdm_primal == static_cast<long>(r.history.back().counters.hdm_primal));
}

TEST_CASE("sg_iso_baseline returns mu0 when the gradient vanishes") {
  test::PolynomialProblem p(0.0, 0.5);
  const BaselineResult r = sg_iso_baseline(p, Vector::Zero(2), 3, 50, 1e-12);
  CHECK(r.converged);
  CHECK(r.history.size() == 1);
  CHECK(r.mu.norm() == 0.0);
  CHECK(r.counters.hdm_primal == 25);
}

TEST_CASE("validate_bounds on linear diffusion with the seed basis") {
  LinearDiffusion p;
  const ReducedBasis basis = seed_basis(p, Vector::Zero(p.param_dim()));
  const BoundValidation v = validate_bounds(p, basis, 100, 7, 0.5);
  CHECK(v.qoi.n_samples == 100);
  CHECK(v.qoi.ratios.size() + static_cast<std::size_t>(v.qoi.excluded) == 100);
  for (double r : v.qoi.ratios) CHECK(std::isfinite(r));
  for (double r : v.gradient.ratios) CHECK(std::isfinite(r));
  CHECK(v.qoi.max_ratio >= v.qoi.median_ratio);
  CHECK(v.gradient.max_ratio >= v.gradient.median_ratio);
}

TEST_CASE("validate_bounds ratios scale with the quantity of interest") {
  LinearDiffusion p;
  const test::ScaledQoi scaled(p, 10.0);
  const ReducedBasis basis = seed_basis(p, Vector::Zero(p.param_dim()));
  const BoundValidation a = validate_bounds(p, basis, 10, 3, 0.5);
  const BoundValidation b = validate_bounds(scaled, basis, 10, 3, 0.5);
  REQUIRE(a.qoi.ratios.size() == b.qoi.ratios.size());
  for (std::size_t i = 0; i < a.qoi.ratios.size(); ++i)
    CHECK(b.qoi.ratios[i] == doctest::Approx(10.0 * a.qoi.ratios[i]).epsilon(1e-8));
}

TEST_CASE("validate_bounds with a full-space basis excludes every sample") {
  LinearDiffusionOptions o;
  o.n_u = 15;
  o.n_mu = 3;
  LinearDiffusion p(o);
  ReducedBasis basis(p.state_dim());
  for (Eigen::Index i = 0; i < p.state_dim(); ++i)
    basis.append(Vector::Unit(p.state_dim(), i), {Vector::Zero(2), Vector::Zero(3), SnapshotKind::primal, false});
  const BoundValidation v = validate_bounds(p, basis, 5, 1);
  CHECK(v.qoi.excluded == 5);
  CHECK(v.qoi.ratios.empty());
}

TEST_CASE("cost_metric arithmetic") {
  QueryCounters c;
  c.hdm_primal = 10;
  c.hdm_adjoint = 10;
  CHECK(cost_metric(c, 1.0, 5.0, 5.0) == doctest::Approx(12.0));
  c.rom_primal = 100;
  c.rom_adjoint = 50;
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(cost_metric(c, inf, 5.0, 5.0) == doctest::Approx(12.0));
  CHECK(cost_metric(c, 10.0, 5.0, 5.0) == doctest::Approx(12.0 + (100.0 + 10.0) / 10.0));
  CHECK_THROWS_AS(cost_metric(c, 0.0, 5.0, 5.0), std::invalid_argument);
  CHECK_THROWS_AS(cost_metric(c, 1.0, 0.5, 5.0), std::invalid_argument);
}

TEST_CASE("cost_metric of an HDM-only run does not depend on tau") {
  QueryCounters c;
  c.hdm_primal = 289;
  c.hdm_adjoint = 289;
  c.hdm_newton_iters = 289 * 4;
  const double base = cost_metric(c, 1.0);
  for (double tau : {10.0, 100.0, std::numeric_limits<double>::infinity()}) CHECK(cost_metric(c, tau) == base);
}

TEST_CASE("CorruptedJacobian disagrees with finite differences") {
  LinearDiffusion p;
  const CorruptedJacobian bad(p, 1.5);
  const Vector y = vec({0.1, 0.2});
  const Vector mu = Vector::Constant(p.param_dim(), 0.1);
  const Vector g = reduced_qoi_and_gradient(bad, y, mu).gradient;
  const Vector fd = fd_gradient(bad, y, mu, 1e-5);
  CHECK((g - fd).norm() / fd.norm() > 1e-3);
}
