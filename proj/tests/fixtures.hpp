#pragma once

#include <cmath>

#include "sgrom/model_problem.hpp"

namespace sgrom::test {

// Scalar state u = p(y, mu) with
//   p = y1^4 y2^6 + 3 y1^2 + coupling mu_1 y2^2,   f = u + alpha/2 |mu|^2,
// so E[F] = 1/35 + 1 + coupling mu_1 / 3 + alpha/2 |mu|^2 exactly.
class PolynomialProblem final : public ModelProblem {
 public:
  explicit PolynomialProblem(double coupling = 1.0, double alpha = 0.5) : coupling_(coupling), alpha_(alpha) {}

  std::string name() const override { return "polynomial"; }
  Eigen::Index state_dim() const override { return 1; }
  Eigen::Index stochastic_dim() const override { return 2; }
  Eigen::Index param_dim() const override { return 2; }

  double p(const Vector& y, const Vector& mu) const {
    return std::pow(y[0], 4) * std::pow(y[1], 6) + 3.0 * y[0] * y[0] + coupling_ * mu[1] * y[1] * y[1];
  }
  Vector residual(const Vector& u, const Vector& y, const Vector& mu) const override {
    return Vector::Constant(1, u[0] - p(y, mu));
  }
  Matrix jacobian_state(const Vector&, const Vector&, const Vector&) const override { return Matrix::Identity(1, 1); }
  Matrix jacobian_param(const Vector&, const Vector& y, const Vector&) const override {
    Matrix j(1, 2);
    j << 0.0, -coupling_ * y[1] * y[1];
    return j;
  }
  double qoi(const Vector& u, const Vector&, const Vector& mu) const override {
    return u[0] + 0.5 * alpha_ * mu.squaredNorm();
  }
  Vector qoi_state_gradient(const Vector&, const Vector&, const Vector&) const override { return Vector::Ones(1); }
  Vector qoi_param_gradient(const Vector&, const Vector&, const Vector& mu) const override { return alpha_ * mu; }
  Vector mesh() const override { return Vector::Zero(1); }

  double mean(const Vector& mu) const { return 1.0 / 35.0 + 1.0 + coupling_ * mu[1] / 3.0 + 0.5 * alpha_ * mu.squaredNorm(); }
  Vector mean_gradient(const Vector& mu) const {
    Vector g = alpha_ * mu;
    g[1] += coupling_ / 3.0;
    return g;
  }

 private:
  double coupling_;
  double alpha_;
};

// Multiplies the quantity of interest of a problem by a constant.
class ScaledQoi final : public ModelProblem {
 public:
  ScaledQoi(const ModelProblem& base, double s) : base_(base), s_(s) {}
  std::string name() const override { return base_.name() + "-scaled"; }
  Eigen::Index state_dim() const override { return base_.state_dim(); }
  Eigen::Index stochastic_dim() const override { return base_.stochastic_dim(); }
  Eigen::Index param_dim() const override { return base_.param_dim(); }
  Vector residual(const Vector& u, const Vector& y, const Vector& mu) const override { return base_.residual(u, y, mu); }
  Matrix jacobian_state(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.jacobian_state(u, y, mu);
  }
  Matrix jacobian_param(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.jacobian_param(u, y, mu);
  }
  double qoi(const Vector& u, const Vector& y, const Vector& mu) const override { return s_ * base_.qoi(u, y, mu); }
  Vector qoi_state_gradient(const Vector& u, const Vector& y, const Vector& mu) const override {
    return s_ * base_.qoi_state_gradient(u, y, mu);
  }
  Vector qoi_param_gradient(const Vector& u, const Vector& y, const Vector& mu) const override {
    return s_ * base_.qoi_param_gradient(u, y, mu);
  }
  Vector mesh() const override { return base_.mesh(); }

 private:
  const ModelProblem& base_;
  double s_;
};

}  // namespace sgrom::test
