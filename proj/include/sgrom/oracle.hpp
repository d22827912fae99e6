#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "sgrom/adapt.hpp"
#include "sgrom/model_problem.hpp"
#include "sgrom/reduced_basis.hpp"

namespace sgrom {

/// Central differences of F(y, .) = f(u*(y, .), y, .).
Vector fd_gradient(const ModelProblem& problem, const Vector& y, const Vector& mu, double h,
                   const NewtonOptions& options = {});

struct TensorReference {
  double value = 0.0;
  Vector gradient;
  std::size_t nodes = 0;
};

/// Full tensor Clenshaw-Curtis quadrature of F and grad F with HDM solves.
/// Requires level <= 6 and n_y <= 3.
TensorReference tensor_reference(const ModelProblem& problem, const Vector& mu, int level,
                                 const NewtonOptions& options = {}, int threads = 1);

struct BaselineIterate {
  int k = 0;
  Vector mu;
  double value = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
  QueryCounters counters;
};

struct BaselineResult {
  Vector mu;
  double value = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  bool line_search_failed = false;
  std::size_t nodes = 0;
  QueryCounters counters;
  std::vector<BaselineIterate> history;
};

/// SG-ISO: BFGS with backtracking on the fixed tensor-grid objective of the
/// given level, HDM only. Stops at |grad| <= gtol or after max_iters.
BaselineResult sg_iso_baseline(const ModelProblem& problem, const Vector& mu0, int level, int max_iters,
                               double gtol, const NewtonOptions& options = {}, int threads = 1);

struct BoundEstimate {
  std::vector<double> ratios;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  int n_samples = 0;
  int excluded = 0;
};

struct BoundSample {
  Vector y, mu;
  double qoi_error = 0.0, gradient_error = 0.0;
  double residual = 0.0, adjoint_residual = 0.0;
  double qoi_ratio = 0.0, gradient_ratio = 0.0;
  bool qoi_excluded = false, gradient_excluded = false;
};

struct BoundValidation {
  BoundEstimate qoi;       // |F - F_r| / |r|
  BoundEstimate gradient;  // |grad F - g_hat| / (|r| + |r^lambda|)
  std::vector<BoundSample> samples;
};

/// Samples y uniformly on [-1, 1]^n_y and mu uniformly on
/// [-mu_scale, mu_scale]^n_mu with a 64-bit Mersenne twister.
BoundValidation validate_bounds(const ModelProblem& problem, const ReducedBasis& basis, int n_samples,
                                std::uint64_t seed, double mu_scale = 1.0,
                                const NewtonOptions& options = {});

/// C = n_hp + n_ha / nbar_h + (n_rp + n_ra / nbar_r) / tau. Linear HDM
/// solves (adjoints and sensitivities) count as adjoint queries.
/// tau = infinity drops the ROM term.
double cost_metric(const QueryCounters& counters, double tau, double nbar_h, double nbar_r);
/// Same with the measured average iteration counts.
double cost_metric(const QueryCounters& counters, double tau);

/// Wraps a problem and scales dr/dmu by `factor`, leaving the residual
/// intact, so adjoint gradients disagree with finite differences.
class CorruptedJacobian final : public ModelProblem {
 public:
  CorruptedJacobian(const ModelProblem& base, double factor) : base_(base), factor_(factor) {}

  std::string name() const override { return base_.name() + "-corrupted"; }
  Eigen::Index state_dim() const override { return base_.state_dim(); }
  Eigen::Index stochastic_dim() const override { return base_.stochastic_dim(); }
  Eigen::Index param_dim() const override { return base_.param_dim(); }
  Vector residual(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.residual(u, y, mu);
  }
  Matrix jacobian_state(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.jacobian_state(u, y, mu);
  }
  Matrix jacobian_param(const Vector& u, const Vector& y, const Vector& mu) const override {
    return factor_ * base_.jacobian_param(u, y, mu);
  }
  double qoi(const Vector& u, const Vector& y, const Vector& mu) const override { return base_.qoi(u, y, mu); }
  Vector qoi_state_gradient(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.qoi_state_gradient(u, y, mu);
  }
  Vector qoi_param_gradient(const Vector& u, const Vector& y, const Vector& mu) const override {
    return base_.qoi_param_gradient(u, y, mu);
  }
  Vector mesh() const override { return base_.mesh(); }
  Vector initial_guess(const Vector& y, const Vector& mu) const override { return base_.initial_guess(y, mu); }

 private:
  const ModelProblem& base_;
  double factor_;
};

}  // namespace sgrom
