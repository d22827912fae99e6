#include "sgrom/rom.hpp"

#include <cmath>
#include <limits>

namespace sgrom {

namespace {

Vector weighted(const Matrix& r_factor, const Vector& v) {
  return r_factor.size() == 0 ? v : Vector(r_factor * v);
}

Matrix weighted(const Matrix& r_factor, const Matrix& v) {
  return r_factor.size() == 0 ? v : Matrix(r_factor * v);
}


// Second-order part sum_i r_i Phi^T (d^2 r_i / du^2) Phi of the Hessian of
// 1/2 |r|^2, by forward differences of (dr/du)^T r along the columns.
Matrix second_order_term(const ModelProblem& problem, const Matrix& phi, const Vector& u, const Vector& y,
                         const Vector& mu, const Vector& r, const Matrix& weight) {
  const Vector wr = weight.size() == 0 ? r : Vector(weight.transpose() * r);
  const Eigen::Index k = phi.cols();
  const Vector base = problem.jacobian_state_transpose_product(u, y, mu, wr);
  const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + u.norm());
  Matrix s(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Vector shifted = problem.jacobian_state_transpose_product(u + eps * phi.col(j), y, mu, wr);
    s.col(j) = phi.transpose() * ((shifted - base) / eps);
  }
  return 0.5 * (s + s.transpose());
}

}  // namespace

RomPrimal solve_rom_primal(const ModelProblem& problem, const ReducedBasis& basis, const Vector& y,
                           const Vector& mu, const std::optional<Vector>& q0,
                           const RomOptions& options) {
  if (basis.empty()) throw std::invalid_argument("solve_rom_primal: empty basis");
  if (basis.state_dim() != problem.state_dim())
    throw std::invalid_argument("solve_rom_primal: basis dimension mismatch");
  const Matrix& phi = basis.columns();
  Vector q = q0 ? *q0 : Vector::Zero(basis.size());
  if (q.size() != basis.size()) throw std::invalid_argument("solve_rom_primal: q0 dimension mismatch");

  Vector u = phi * q;
  Vector r = weighted(options.primal_weight, problem.residual(u, y, mu));
  double rnorm = r.norm();
  const double tol = options.stationarity_tol * (1.0 + rnorm);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double prev_gnorm = std::numeric_limits<double>::infinity();
  bool newton = false;

  for (int it = 0;; ++it) {
    const Matrix jphi = weighted(options.primal_weight, problem.jacobian_state_product(u, y, mu, phi));
    const Vector grad = jphi.transpose() * r;
    const double gnorm = grad.norm();
    // Stationarity, or the gradient is at the roundoff level of J^T r.
    const double floor = 1e3 * eps * jphi.norm() * rnorm;
    if (gnorm <= tol || gnorm <= floor) return {std::move(q), rnorm, it};
    if (it == options.max_iters)
      throw SolverError("solve_rom_primal: no convergence after " + std::to_string(it) + " iterations", u,
                        rnorm);

    // Gauss-Newton while it contracts; once it stalls (large residuals)
    // the second-order term is added.
    newton = newton || gnorm > 0.5 * prev_gnorm;
    prev_gnorm = gnorm;
    Vector dq;
    if (!newton) {
      dq = Eigen::ColPivHouseholderQR<Matrix>(jphi).solve(-r);
    } else {
      Matrix h = jphi.transpose() * jphi;
      h += second_order_term(problem, phi, u, y, mu, r, options.primal_weight);
      const double scale = h.diagonal().cwiseAbs().maxCoeff();
      double shift = 0.0;
      for (int attempt = 0; attempt < 40; ++attempt) {
        Eigen::LLT<Matrix> llt(h + shift * Matrix::Identity(h.rows(), h.cols()));
        if (llt.info() == Eigen::Success) {
          dq = llt.solve(-grad);
          break;
        }
        shift = shift == 0.0 ? 1e-10 * scale : 10.0 * shift;
      }
      if (dq.size() == 0) dq = Eigen::ColPivHouseholderQR<Matrix>(jphi).solve(-r);
    }

    double step = 1.0;
    Vector qt, ut, rt;
    bool decreased = false;
    for (int k = 0; k <= options.max_halvings; ++k, step *= 0.5) {
      qt = q + step * dq;
      ut = phi * qt;
      rt = weighted(options.primal_weight, problem.residual(ut, y, mu));
      if (rt.norm() < rnorm) {
        decreased = true;
        break;
      }
    }
    if (!decreased) {
      if (gnorm <= 1e6 * floor + tol) return {std::move(q), rnorm, it};
      throw SolverError("solve_rom_primal: line search failed", u, rnorm);
    }
    q = std::move(qt);
    u = std::move(ut);
    r = std::move(rt);
    rnorm = r.norm();
  }
}

RomAdjoint solve_rom_adjoint(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                             const Vector& y, const Vector& mu, const RomOptions& options) {
  if (basis.empty()) throw std::invalid_argument("solve_rom_adjoint: empty basis");
  if (q.size() != basis.size()) throw std::invalid_argument("solve_rom_adjoint: q dimension mismatch");
  const Matrix& phi = basis.columns();
  const Vector u = phi * q;
  const Matrix a =
      weighted(options.adjoint_weight, problem.jacobian_state_transpose_product(u, y, mu, phi));
  const Vector b = weighted(options.adjoint_weight, problem.qoi_state_gradient(u, y, mu));
  const Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() < a.cols())
    throw SolverError("solve_rom_adjoint: rank-deficient reduced adjoint operator");
  RomAdjoint out;
  out.eta = qr.solve(b);
  out.residual_norm = (a * out.eta - b).norm();
  return out;
}

double rom_qoi(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
               const Vector& y, const Vector& mu) {
  return problem.qoi(basis.columns() * q, y, mu);
}

Vector rom_gradient(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                    const Vector& eta, const Vector& y, const Vector& mu) {
  const Matrix& phi = basis.columns();
  return adjoint_gradient(problem, phi * eta, phi * q, y, mu);
}

double rom_residual_norm(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                         const Vector& y, const Vector& mu) {
  return problem.residual(basis.columns() * q, y, mu).norm();
}

double rom_adjoint_residual_norm(const ModelProblem& problem, const ReducedBasis& basis,
                                 const Vector& q, const Vector& eta, const Vector& y,
                                 const Vector& mu) {
  const Matrix& phi = basis.columns();
  return adjoint_residual(problem, phi * eta, phi * q, y, mu).norm();
}

}  // namespace sgrom
