#pragma once

#include <memory>
#include <string>

#include "sgrom/model_problem.hpp"

namespace sgrom {

/// Tridiagonal matrix stored by diagonals; lower[i] couples row i to i-1,
/// upper[i] couples row i to i+1.
struct Tridiagonal {
  Vector lower, diag, upper;

  Matrix dense() const;
  Matrix times(const Matrix& v) const;
  Matrix transpose_times(const Matrix& v) const;
};

/// Common structure of the bundled 1D control problems on (0, 1): a
/// tridiagonal finite-difference operator on a uniform grid of interior
/// nodes, a distributed control sum_j mu_j b_j(x) with hat functions b_j,
/// and the tracking functional
///   f = h/2 |u - target|^2 + alpha/2 |mu|^2.
/// Residuals are scaled by the mesh width (weak-form scaling).
class TrackingProblem1D : public ModelProblem {
 public:
  TrackingProblem1D(Eigen::Index n_u, Eigen::Index n_y, Eigen::Index n_mu, double alpha);

  Eigen::Index state_dim() const override { return n_u_; }
  Eigen::Index stochastic_dim() const override { return n_y_; }
  Eigen::Index param_dim() const override { return n_mu_; }

  Vector residual(const Vector& u, const Vector& y, const Vector& mu) const override;
  Matrix jacobian_state(const Vector& u, const Vector& y, const Vector& mu) const override;
  Matrix jacobian_state_product(const Vector& u, const Vector& y, const Vector& mu,
                                const Matrix& v) const override;
  Matrix jacobian_state_transpose_product(const Vector& u, const Vector& y, const Vector& mu,
                                          const Matrix& v) const override;
  Matrix jacobian_param(const Vector& u, const Vector& y, const Vector& mu) const override;

  double qoi(const Vector& u, const Vector& y, const Vector& mu) const override;
  Vector qoi_state_gradient(const Vector& u, const Vector& y, const Vector& mu) const override;
  Vector qoi_param_gradient(const Vector& u, const Vector& y, const Vector& mu) const override;

  Vector mesh() const override;

  double mesh_width() const { return h_; }
  double alpha() const { return alpha_; }
  const Vector& target() const { return target_; }
  /// Column j holds h * b_j(x_i).
  const Matrix& control_load() const { return load_; }

  /// Hat function j (0-based) evaluated at x.
  double hat(Eigen::Index j, double x) const;

 protected:
  /// Spatial operator without the control term.
  virtual Vector operator_residual(const Vector& u, const Vector& y) const = 0;
  virtual Tridiagonal operator_jacobian(const Vector& u, const Vector& y) const = 0;

  void set_target(Vector target) { target_ = std::move(target); }

  Eigen::Index n_u_, n_y_, n_mu_;
  double alpha_;
  double h_;
  Vector target_;
  Matrix load_;
};

struct LinearDiffusionOptions {
  Eigen::Index n_u = 63;
  Eigen::Index n_y = 2;
  Eigen::Index n_mu = 8;
  double alpha = 0.1;
  double kappa_y1 = 0.5;
  double kappa_y2 = 0.25;
};

/// -(kappa(x, y) p')' = sum_j mu_j b_j(x), p(0) = p(1) = 0, with
/// kappa = 1 + a1 y1 sin(pi x) + a2 y2 cos(2 pi x). The tracking target is
/// x (1 - x) / 2.
class LinearDiffusion final : public TrackingProblem1D {
 public:
  explicit LinearDiffusion(const LinearDiffusionOptions& options = {});
  std::string name() const override { return "linear-diffusion"; }

  double conductivity(double x, const Vector& y) const;
  /// Stiffness matrix A(y) so that r(u) = A(y) u - B mu.
  Matrix stiffness(const Vector& y) const;

 protected:
  Vector operator_residual(const Vector& u, const Vector& y) const override;
  Tridiagonal operator_jacobian(const Vector& u, const Vector& y) const override;

 private:
  LinearDiffusionOptions opts_;
};

struct BurgersOptions {
  Eigen::Index n_u = 127;
  Eigen::Index n_mu = 8;
  double alpha = 0.1;
  // 1/nu(y1) = inv_nu_left (1 - y1) + inv_nu_right (1 + y1)
  double inv_nu_left = 5.0;
  double inv_nu_right = 30.0;
  // u(0) = inflow_base + inflow_amplitude y2
  double inflow_base = 1.0;
  double inflow_amplitude = 0.25;
  // Tensor Clenshaw-Curtis level used to compute the uncontrolled mean.
  int reference_level = 4;
};

/// -nu(y1) u'' + u u' = sum_j mu_j b_j(x), u(0) = u_0 + a y2, u(1) = 0,
/// central differences in conservative form. The tracking target is the
/// uncontrolled (mu = 0) mean state.
class BurgersControl final : public TrackingProblem1D {
 public:
  explicit BurgersControl(const BurgersOptions& options = {});
  std::string name() const override { return "burgers-control"; }

  double viscosity(const Vector& y) const;
  double inflow(const Vector& y) const;
  /// Linear profile between the boundary values.
  Vector initial_guess(const Vector& y, const Vector& mu) const override;

 protected:
  Vector operator_residual(const Vector& u, const Vector& y) const override;
  Tridiagonal operator_jacobian(const Vector& u, const Vector& y) const override;

 private:
  BurgersOptions opts_;
};

}  // namespace sgrom
