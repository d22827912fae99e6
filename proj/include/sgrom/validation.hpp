#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgrom/model_problem.hpp"
#include "sgrom/oracle.hpp"

namespace sgrom {

struct SuiteResult {
  std::string name;
  bool passed = false;
  bool vacuous = false;  // nothing was tested
  std::string summary;
  std::vector<std::string> failures;
};

/// Problem under test together with its finite-difference tolerance.
struct FdCase {
  const ModelProblem* problem = nullptr;
  double tol = 1e-6;
};

/// Adjoint gradient against central differences at n_samples random
/// (y, mu) per problem; relative error |g - g_fd| / max(|g_fd|, 1e-14).
/// n_samples = 0 passes vacuously.
SuiteResult fd_gradient_suite(const std::vector<FdCase>& cases, int n_samples, double h, std::uint64_t seed,
                              double mu_scale = 1.0, const NewtonOptions& options = {});

/// Combination technique against tensor rules on every rectangle up to
/// {1..4}^2 (weights to 1e-12), and moments of the uniform density on
/// isotropic total-level sets (to 1e-10).
SuiteResult quadrature_suite();

/// Interpolation of the primal and adjoint ROMs after adding the HDM
/// snapshots at a point, and non-increasing primal residuals at 5 nodes
/// over 10 successive appends.
SuiteResult rom_property_suite(const ModelProblem& problem, std::uint64_t seed, double mu_scale = 1.0,
                               const NewtonOptions& options = {});

/// validate_bounds with the seed basis at mu = 0; passes when every ratio
/// is finite and max <= max_median_factor * median for both families.
SuiteResult bound_suite(const ModelProblem& problem, int n_samples, std::uint64_t seed, double mu_scale,
                        double max_median_factor, BoundValidation* out = nullptr,
                        const NewtonOptions& options = {});

}  // namespace sgrom
