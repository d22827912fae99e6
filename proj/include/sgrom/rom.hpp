#pragma once

#include <optional>

#include "sgrom/model_problem.hpp"
#include "sgrom/reduced_basis.hpp"

namespace sgrom {

struct RomOptions {
  double stationarity_tol = 1e-10;
  int max_iters = 50;
  int max_halvings = 30;
  /// Upper-triangular factor R of an SPD residual weighting Theta = R^T R;
  /// empty means Theta = I.
  Matrix primal_weight;
  Matrix adjoint_weight;
};

struct RomPrimal {
  Vector q;
  double residual_norm = 0.0;
  int gn_iters = 0;
};

struct RomAdjoint {
  Vector eta;
  double residual_norm = 0.0;
};

/// Minimum-residual primal ROM: Gauss-Newton on 1/2 |r(Phi q, y, mu)|_Theta^2
/// with backtracking, switching to Newton (second-order term by differences
/// of the Jacobian) once Gauss-Newton stops contracting. Stops when
/// |(J Phi)^T Theta r| <= tol (1 + |r(Phi q0)|).
RomPrimal solve_rom_primal(const ModelProblem& problem, const ReducedBasis& basis, const Vector& y,
                           const Vector& mu, const std::optional<Vector>& q0 = std::nullopt,
                           const RomOptions& options = {});

/// Minimum-residual adjoint ROM: least squares
/// min |(dr/du)^T Phi eta - (df/du)^T|_Theta_lambda at u = Phi q.
RomAdjoint solve_rom_adjoint(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                             const Vector& y, const Vector& mu, const RomOptions& options = {});

/// f(Phi q, y, mu)
double rom_qoi(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
               const Vector& y, const Vector& mu);

/// Adjoint-based gradient estimate g^lambda(Phi eta, Phi q, y, mu).
Vector rom_gradient(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                    const Vector& eta, const Vector& y, const Vector& mu);

/// |r(Phi q, y, mu)| (Euclidean)
double rom_residual_norm(const ModelProblem& problem, const ReducedBasis& basis, const Vector& q,
                         const Vector& y, const Vector& mu);

/// |r^lambda(Phi eta, Phi q, y, mu)| (Euclidean)
double rom_adjoint_residual_norm(const ModelProblem& problem, const ReducedBasis& basis,
                                 const Vector& q, const Vector& eta, const Vector& y,
                                 const Vector& mu);

}  // namespace sgrom
