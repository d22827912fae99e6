#pragma once

#include <functional>
#include <string>

#include "sgrom/model_problem.hpp"

namespace sgrom {

struct SubproblemStep {
  Vector step;
  double decrease = 0.0;     // -(g^T s + 1/2 s^T H s)
  double curvature = 1.0;    // 1 + largest |Rayleigh quotient| seen
  double cauchy_bound = 0.0; // kappa_s |g| min{|g| / curvature, Delta}
  int iterations = 0;
  std::string exit;          // "interior", "boundary", "negative-curvature", "zero-gradient", "max-iters"

  bool cauchy_satisfied() const { return decrease >= cauchy_bound; }
};

/// Truncated conjugate gradients for min g^T s + 1/2 s^T H s, |s| <= delta.
SubproblemStep steihaug_toint(const Vector& gradient, const std::function<Vector(const Vector&)>& hessvec,
                              double delta, double kappa_s, double rel_tol = 1e-8, int max_iters = -1);

}  // namespace sgrom
