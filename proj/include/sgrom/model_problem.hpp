#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sgrom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Parametrized nonlinear system r(u, y, mu) = 0 with a quantity of
/// interest f(u, y, mu). Implementations must be stateless: every member is
/// const and may be called concurrently.
class ModelProblem {
 public:
  virtual ~ModelProblem() = default;

  virtual std::string name() const = 0;
  virtual Eigen::Index state_dim() const = 0;
  virtual Eigen::Index stochastic_dim() const = 0;
  virtual Eigen::Index param_dim() const = 0;

  virtual Vector residual(const Vector& u, const Vector& y, const Vector& mu) const = 0;
  /// dr/du as a dense n_u x n_u matrix.
  virtual Matrix jacobian_state(const Vector& u, const Vector& y, const Vector& mu) const = 0;
  /// (dr/du) V. Problems with structured Jacobians override this.
  virtual Matrix jacobian_state_product(const Vector& u, const Vector& y, const Vector& mu,
                                        const Matrix& v) const {
    return jacobian_state(u, y, mu) * v;
  }
  /// (dr/du)^T V.
  virtual Matrix jacobian_state_transpose_product(const Vector& u, const Vector& y,
                                                  const Vector& mu, const Matrix& v) const {
    return jacobian_state(u, y, mu).transpose() * v;
  }
  /// dr/dmu as a dense n_u x n_mu matrix.
  virtual Matrix jacobian_param(const Vector& u, const Vector& y, const Vector& mu) const = 0;

  virtual double qoi(const Vector& u, const Vector& y, const Vector& mu) const = 0;
  virtual Vector qoi_state_gradient(const Vector& u, const Vector& y, const Vector& mu) const = 0;
  virtual Vector qoi_param_gradient(const Vector& u, const Vector& y, const Vector& mu) const = 0;

  /// Spatial coordinates of the state unknowns, for export.
  virtual Vector mesh() const = 0;

  /// Newton starting point when the caller gives none.
  virtual Vector initial_guess(const Vector& y, const Vector& mu) const;

  void check_dims(const Vector& u, const Vector& y, const Vector& mu) const;
};

struct NewtonOptions {
  double tol_abs = 1e-12;
  double tol_rel = 1e-12;
  int max_iters = 50;
  int max_halvings = 30;
  /// Steps of the mu-continuation tried when Newton from the default guess
  /// fails; 0 disables it.
  int continuation_steps = 8;
};

struct PrimalSolution {
  Vector u;
  double residual_norm = 0.0;
  int newton_iters = 0;
};

struct AdjointSolution {
  Vector lambda;
  double residual_norm = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Vector last_iterate = {}, double residual_norm = 0.0)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), residual_norm_(residual_norm) {}
  const Vector& last_iterate() const { return last_iterate_; }
  double residual_norm() const { return residual_norm_; }

 private:
  Vector last_iterate_;
  double residual_norm_;
};

/// Damped Newton iteration on r(., y, mu) from u0 (zero if absent).
PrimalSolution solve_primal(const ModelProblem& problem, const Vector& y, const Vector& mu,
                            const std::optional<Vector>& u0 = std::nullopt,
                            const NewtonOptions& options = {});

/// (dr/du)^T lambda - (df/du)^T
Vector adjoint_residual(const ModelProblem& problem, const Vector& lambda, const Vector& u,
                        const Vector& y, const Vector& mu);

AdjointSolution solve_adjoint(const ModelProblem& problem, const Vector& u, const Vector& y,
                              const Vector& mu);

/// df/dmu - lambda^T dr/dmu
Vector adjoint_gradient(const ModelProblem& problem, const Vector& lambda, const Vector& u,
                        const Vector& y, const Vector& mu);

/// Solution of (dr/du) s = -(dr/dmu) e_j.
Vector primal_sensitivity(const ModelProblem& problem, const Vector& u, const Vector& y,
                          const Vector& mu, Eigen::Index j);

/// Reduced functional F(y, mu) = f(u*(y, mu), y, mu).
double reduced_qoi(const ModelProblem& problem, const Vector& y, const Vector& mu,
                   const NewtonOptions& options = {});

/// F(y, mu) and its adjoint gradient from one primal and one adjoint solve.
struct QoiAndGradient {
  double value = 0.0;
  Vector gradient;
  int newton_iters = 0;
};
QoiAndGradient reduced_qoi_and_gradient(const ModelProblem& problem, const Vector& y,
                                        const Vector& mu, const NewtonOptions& options = {});

}  // namespace sgrom
