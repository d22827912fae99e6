#include "sgrom/problems.hpp"

#include <cmath>
#include <numbers>

#include "sgrom/sparse_grid.hpp"

namespace sgrom {

Matrix Tridiagonal::dense() const {
  const Eigen::Index n = diag.size();
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = diag[i];
    if (i > 0) a(i, i - 1) = lower[i];
    if (i + 1 < n) a(i, i + 1) = upper[i];
  }
  return a;
}

Matrix Tridiagonal::times(const Matrix& v) const {
  const Eigen::Index n = diag.size();
  Matrix out(n, v.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = diag[i] * v.row(i);
    if (i > 0) out.row(i) += lower[i] * v.row(i - 1);
    if (i + 1 < n) out.row(i) += upper[i] * v.row(i + 1);
  }
  return out;
}

Matrix Tridiagonal::transpose_times(const Matrix& v) const {
  const Eigen::Index n = diag.size();
  Matrix out(n, v.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.row(i) = diag[i] * v.row(i);
    if (i + 1 < n) out.row(i) += lower[i + 1] * v.row(i + 1);
    if (i > 0) out.row(i) += upper[i - 1] * v.row(i - 1);
  }
  return out;
}

TrackingProblem1D::TrackingProblem1D(Eigen::Index n_u, Eigen::Index n_y, Eigen::Index n_mu,
                                     double alpha)
    : n_u_(n_u), n_y_(n_y), n_mu_(n_mu), alpha_(alpha) {
  if (n_u < 3 || n_y < 1 || n_mu < 1) throw std::invalid_argument("TrackingProblem1D: bad dimensions");
  if (!(alpha >= 0.0)) throw std::invalid_argument("TrackingProblem1D: alpha must be >= 0");
  h_ = 1.0 / static_cast<double>(n_u + 1);
  target_ = Vector::Zero(n_u);
  load_.resize(n_u, n_mu);
  for (Eigen::Index i = 0; i < n_u; ++i)
    for (Eigen::Index j = 0; j < n_mu; ++j) load_(i, j) = h_ * hat(j, (i + 1) * h_);
}

double TrackingProblem1D::hat(Eigen::Index j, double x) const {
  const double w = 1.0 / static_cast<double>(n_mu_ + 1);
  const double c = (j + 1) * w;
  return std::max(0.0, 1.0 - std::abs(x - c) / w);
}

Vector TrackingProblem1D::residual(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return operator_residual(u, y) - load_ * mu;
}

Matrix TrackingProblem1D::jacobian_state(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return operator_jacobian(u, y).dense();
}

Matrix TrackingProblem1D::jacobian_state_product(const Vector& u, const Vector& y, const Vector& mu,
                                                 const Matrix& v) const {
  check_dims(u, y, mu);
  return operator_jacobian(u, y).times(v);
}

Matrix TrackingProblem1D::jacobian_state_transpose_product(const Vector& u, const Vector& y,
                                                           const Vector& mu, const Matrix& v) const {
  check_dims(u, y, mu);
  return operator_jacobian(u, y).transpose_times(v);
}

Matrix TrackingProblem1D::jacobian_param(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return -load_;
}

double TrackingProblem1D::qoi(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return 0.5 * h_ * (u - target_).squaredNorm() + 0.5 * alpha_ * mu.squaredNorm();
}

Vector TrackingProblem1D::qoi_state_gradient(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return h_ * (u - target_);
}

Vector TrackingProblem1D::qoi_param_gradient(const Vector& u, const Vector& y, const Vector& mu) const {
  check_dims(u, y, mu);
  return alpha_ * mu;
}

Vector TrackingProblem1D::mesh() const {
  return Vector::LinSpaced(n_u_, h_, 1.0 - h_);
}

// ---------------------------------------------------------------------------

LinearDiffusion::LinearDiffusion(const LinearDiffusionOptions& options)
    : TrackingProblem1D(options.n_u, options.n_y, options.n_mu, options.alpha), opts_(options) {
  if (options.n_y > 2) throw std::invalid_argument("linear-diffusion supports n_y <= 2");
  if (std::abs(options.kappa_y1) + std::abs(options.kappa_y2) >= 1.0)
    throw std::invalid_argument("linear-diffusion: conductivity amplitudes must sum below 1");
  Vector t(n_u_);
  for (Eigen::Index i = 0; i < n_u_; ++i) {
    const double x = (i + 1) * h_;
    t[i] = 0.5 * x * (1.0 - x);
  }
  set_target(std::move(t));
}

double LinearDiffusion::conductivity(double x, const Vector& y) const {
  double k = 1.0 + opts_.kappa_y1 * y[0] * std::sin(std::numbers::pi * x);
  if (n_y_ > 1) k += opts_.kappa_y2 * y[1] * std::cos(2.0 * std::numbers::pi * x);
  return k;
}

Tridiagonal LinearDiffusion::operator_jacobian(const Vector& /*u*/, const Vector& y) const {
  Tridiagonal t{Vector::Zero(n_u_), Vector::Zero(n_u_), Vector::Zero(n_u_)};
  for (Eigen::Index i = 0; i < n_u_; ++i) {
    const double x = (i + 1) * h_;
    const double kw = conductivity(x - 0.5 * h_, y) / h_;
    const double ke = conductivity(x + 0.5 * h_, y) / h_;
    t.diag[i] = kw + ke;
    t.lower[i] = -kw;
    t.upper[i] = -ke;
  }
  return t;
}

Vector LinearDiffusion::operator_residual(const Vector& u, const Vector& y) const {
  return operator_jacobian(u, y).times(u);
}

Matrix LinearDiffusion::stiffness(const Vector& y) const {
  return operator_jacobian(Vector::Zero(n_u_), y).dense();
}

// ---------------------------------------------------------------------------

BurgersControl::BurgersControl(const BurgersOptions& options)
    : TrackingProblem1D(options.n_u, 2, options.n_mu, options.alpha), opts_(options) {
  if (!(options.inv_nu_left > 0.0 && options.inv_nu_right > 0.0))
    throw std::invalid_argument("burgers-control: inverse viscosity must be positive");
  if (options.reference_level < 1) throw std::invalid_argument("burgers-control: reference_level >= 1");
  // Uncontrolled mean state by tensor Clenshaw-Curtis quadrature.
  const auto quad = tensor_rule(MultiIndex({options.reference_level, options.reference_level}));
  const Vector mu0 = Vector::Zero(n_mu_);
  Vector mean = Vector::Zero(n_u_);
  for (const auto& p : quad.points()) mean += p.weight * solve_primal(*this, p.y, mu0).u;
  set_target(std::move(mean));
}

double BurgersControl::viscosity(const Vector& y) const {
  return 1.0 / (opts_.inv_nu_left * (1.0 - y[0]) + opts_.inv_nu_right * (1.0 + y[0]));
}

double BurgersControl::inflow(const Vector& y) const { return opts_.inflow_base + opts_.inflow_amplitude * y[1]; }

Vector BurgersControl::initial_guess(const Vector& y, const Vector&) const {
  return inflow(y) * (Vector::Ones(state_dim()) - mesh());
}

Vector BurgersControl::operator_residual(const Vector& u, const Vector& y) const {
  const double nu_h = viscosity(y) / h_;
  const double left = inflow(y);
  Vector r(n_u_);
  for (Eigen::Index i = 0; i < n_u_; ++i) {
    const double um = i > 0 ? u[i - 1] : left;
    const double up = i + 1 < n_u_ ? u[i + 1] : 0.0;
    r[i] = -nu_h * (up - 2.0 * u[i] + um) + 0.25 * (up * up - um * um);
  }
  return r;
}

Tridiagonal BurgersControl::operator_jacobian(const Vector& u, const Vector& y) const {
  const double nu_h = viscosity(y) / h_;
  Tridiagonal t{Vector::Zero(n_u_), Vector::Constant(n_u_, 2.0 * nu_h), Vector::Zero(n_u_)};
  for (Eigen::Index i = 0; i < n_u_; ++i) {
    if (i > 0) t.lower[i] = -nu_h - 0.5 * u[i - 1];
    if (i + 1 < n_u_) t.upper[i] = -nu_h + 0.5 * u[i + 1];
  }
  return t;
}

}  // namespace sgrom
