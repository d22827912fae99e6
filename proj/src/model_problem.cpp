#include "sgrom/model_problem.hpp"

#include <cmath>
#include <limits>

namespace sgrom {

void ModelProblem::check_dims(const Vector& u, const Vector& y, const Vector& mu) const {
  if (u.size() != state_dim() || y.size() != stochastic_dim() || mu.size() != param_dim())
    throw std::invalid_argument(name() + ": dimension mismatch (u " + std::to_string(u.size()) +
                                ", y " + std::to_string(y.size()) + ", mu " +
                                std::to_string(mu.size()) + ")");
}

Vector ModelProblem::initial_guess(const Vector&, const Vector&) const { return Vector::Zero(state_dim()); }

namespace {

PrimalSolution newton(const ModelProblem& problem, const Vector& y, const Vector& mu, Vector u,
                      const NewtonOptions& options) {
  Vector r = problem.residual(u, y, mu);
  double rnorm = r.norm();
  const double tol = options.tol_abs + options.tol_rel * rnorm;
  int it = 0;
  while (rnorm > tol) {
    if (it == options.max_iters)
      throw SolverError("solve_primal: no convergence after " + std::to_string(it) +
                            " Newton iterations (|r| = " + std::to_string(rnorm) + ")",
                        u, rnorm);
    const Vector du = problem.jacobian_state(u, y, mu).partialPivLu().solve(-r);
    if (!du.allFinite()) throw SolverError("solve_primal: singular Jacobian", u, rnorm);
    double step = 1.0;
    Vector trial = u + du;
    Vector rtrial = problem.residual(trial, y, mu);
    int halvings = 0;
    while (!(rtrial.norm() < rnorm) && halvings < options.max_halvings) {
      step *= 0.5;
      trial = u + step * du;
      rtrial = problem.residual(trial, y, mu);
      ++halvings;
    }
    ++it;
    if (!(rtrial.norm() < rnorm)) {
      // Roundoff floor: accept the full step if it does not blow up.
      if (rtrial.norm() <= 10.0 * tol) {
        u = std::move(trial);
        r = std::move(rtrial);
        rnorm = r.norm();
        break;
      }
      throw SolverError("solve_primal: line search failed", u, rnorm);
    }
    u = std::move(trial);
    r = std::move(rtrial);
    rnorm = r.norm();
  }
  return {std::move(u), rnorm, it};
}

}  // namespace

PrimalSolution solve_primal(const ModelProblem& problem, const Vector& y, const Vector& mu,
                            const std::optional<Vector>& u0, const NewtonOptions& options) {
  Vector u = u0 ? *u0 : problem.initial_guess(y, mu);
  if (!u.allFinite()) throw std::invalid_argument("solve_primal: non-finite initial guess");
  problem.check_dims(u, y, mu);
  if (u0 || options.continuation_steps <= 0) return newton(problem, y, mu, std::move(u), options);
  try {
    return newton(problem, y, mu, std::move(u), options);
  } catch (const SolverError& first) {
    // Continuation in the control from mu = 0.
    const Vector zero = Vector::Zero(mu.size());
    Vector v = problem.initial_guess(y, zero);
    int iters = 0;
    try {
      for (int k = 0; k <= options.continuation_steps; ++k) {
        const Vector mk = (static_cast<double>(k) / options.continuation_steps) * mu;
        PrimalSolution s = newton(problem, y, mk, std::move(v), options);
        iters += s.newton_iters;
        v = std::move(s.u);
        if (k == options.continuation_steps) return {std::move(v), s.residual_norm, iters};
      }
    } catch (const SolverError&) {
    }
    throw first;
  }
}

Vector adjoint_residual(const ModelProblem& problem, const Vector& lambda, const Vector& u,
                        const Vector& y, const Vector& mu) {
  problem.check_dims(u, y, mu);
  if (lambda.size() != u.size()) throw std::invalid_argument("adjoint_residual: dimension mismatch");
  return problem.jacobian_state_transpose_product(u, y, mu, lambda) -
         problem.qoi_state_gradient(u, y, mu);
}

AdjointSolution solve_adjoint(const ModelProblem& problem, const Vector& u, const Vector& y,
                              const Vector& mu) {
  problem.check_dims(u, y, mu);
  const Matrix jt = problem.jacobian_state(u, y, mu).transpose();
  const Eigen::FullPivLU<Matrix> lu(jt);
  if (!lu.isInvertible()) throw SolverError("solve_adjoint: singular Jacobian transpose");
  AdjointSolution out;
  out.lambda = lu.solve(problem.qoi_state_gradient(u, y, mu));
  out.residual_norm = adjoint_residual(problem, out.lambda, u, y, mu).norm();
  return out;
}

Vector adjoint_gradient(const ModelProblem& problem, const Vector& lambda, const Vector& u,
                        const Vector& y, const Vector& mu) {
  problem.check_dims(u, y, mu);
  if (lambda.size() != u.size()) throw std::invalid_argument("adjoint_gradient: dimension mismatch");
  return problem.qoi_param_gradient(u, y, mu) -
         problem.jacobian_param(u, y, mu).transpose() * lambda;
}

Vector primal_sensitivity(const ModelProblem& problem, const Vector& u, const Vector& y,
                          const Vector& mu, Eigen::Index j) {
  problem.check_dims(u, y, mu);
  if (j < 0 || j >= problem.param_dim()) throw std::invalid_argument("primal_sensitivity: bad index");
  const Eigen::FullPivLU<Matrix> lu(problem.jacobian_state(u, y, mu));
  if (!lu.isInvertible()) throw SolverError("primal_sensitivity: singular Jacobian");
  return lu.solve(-problem.jacobian_param(u, y, mu).col(j));
}

double reduced_qoi(const ModelProblem& problem, const Vector& y, const Vector& mu,
                   const NewtonOptions& options) {
  const auto sol = solve_primal(problem, y, mu, std::nullopt, options);
  return problem.qoi(sol.u, y, mu);
}

QoiAndGradient reduced_qoi_and_gradient(const ModelProblem& problem, const Vector& y,
                                        const Vector& mu, const NewtonOptions& options) {
  const auto sol = solve_primal(problem, y, mu, std::nullopt, options);
  const auto adj = solve_adjoint(problem, sol.u, y, mu);
  return {problem.qoi(sol.u, y, mu), adjoint_gradient(problem, adj.lambda, sol.u, y, mu),
          sol.newton_iters};
}

}  // namespace sgrom
