#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgrom/adapt.hpp"
#include "sgrom/problems.hpp"
#include "sgrom/trust_region.hpp"

namespace sgrom {

/// Invalid configuration; key() is the "section.key" path when known.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct BaselineConfig {
  int level = 5;
  int max_iters = 100;
  /// Gradient tolerance; 0 means "the final SG-ROM-TR gradient" in compare.
  double gtol = 0.0;
};

struct ValidateConfig {
  int n_samples = 20;
  double fd_h = 1e-5;
  double fd_tol_linear = 1e-6;
  double fd_tol_burgers = 1e-5;
  int bound_samples = 100;
  /// Controls are drawn from [-mu_scale, mu_scale]^n_mu.
  double mu_scale = 0.5;
  double max_median_factor = 10.0;
  /// Scales dr/dmu of the validated problems; 1 leaves them intact.
  double corrupt_jacobian = 1.0;
};

struct RunConfig {
  std::string method = "sg-rom-tr";  // sg-rom-tr | sg-iso
  std::string problem = "burgers-control";
  std::uint64_t seed = 20240101;
  int threads = 1;
  std::string out = "run";

  LinearDiffusionOptions linear;
  BurgersOptions burgers;
  /// Initial control, one entry per parameter or a single broadcast value.
  std::vector<double> mu0{0.0};

  TrustRegionConfig trust_region;
  AdaptSettings adapt;
  BaselineConfig baseline;
  ValidateConfig validate;
  /// Tensor level of the reported reference objective; 0 disables it.
  int reference_level = 0;

  /// Text of the parsed file, echoed into reports.
  std::string source;

  Vector initial_control(Eigen::Index n_mu) const;
};

/// Parses an INI file. Unknown sections or keys and out-of-range values
/// raise ConfigError naming the key.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Canonical "section.key = value" listing of every setting.
std::string echo_config(const RunConfig& config);

std::unique_ptr<ModelProblem> make_problem(const std::string& name, const RunConfig& config);

}  // namespace sgrom
