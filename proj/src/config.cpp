#include "sgrom/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <type_traits>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace sgrom {

namespace {

double to_double(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  double v = 0.0;
  if (!(is >> v) || !(is >> std::ws).eof() || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  long v = 0;
  if (!(is >> v) || !(is >> std::ws).eof()) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(key, "empty list entry");
    out.push_back(to_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class Get>
Setter real_field(Get get, double lo, double hi, bool lo_open = false) {
  return [=](RunConfig& c, const std::string& key, const std::string& v) {
    const double x = to_double(key, v);
    if (x < lo || x > hi || (lo_open && x == lo)) {
      std::ostringstream os;
      os << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
      throw ConfigError(key, os.str());
    }
    get(c) = x;
  };
}

template <class Get>
Setter int_field(Get get, long lo, long hi) {
  return [=](RunConfig& c, const std::string& key, const std::string& v) {
    const long x = to_long(key, v);
    if (x < lo || x > hi)
      throw ConfigError(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                 std::to_string(hi) + "]");
    get(c) = static_cast<std::remove_reference_t<decltype(get(c))>>(x);
  };
}

constexpr double kInf = std::numeric_limits<double>::infinity();

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["run.method"] = [](RunConfig& c, const std::string& key, const std::string& v) {
      if (v != "sg-rom-tr" && v != "sg-iso") throw ConfigError(key, "expected sg-rom-tr or sg-iso");
      c.method = v;
    };
    t["run.problem"] = [](RunConfig& c, const std::string& key, const std::string& v) {
      if (v != "burgers-control" && v != "linear-diffusion")
        throw ConfigError(key, "expected burgers-control or linear-diffusion");
      c.problem = v;
    };
    t["run.seed"] = [](RunConfig& c, const std::string& key, const std::string& v) {
      const long x = to_long(key, v);
      if (x < 0) throw ConfigError(key, "must be nonnegative");
      c.seed = static_cast<std::uint64_t>(x);
    };
    t["run.threads"] = int_field([](RunConfig& c) -> int& { return c.threads; }, 1, 256);
    t["run.out"] = [](RunConfig& c, const std::string&, const std::string& v) { c.out = v; };
    t["run.mu0"] = [](RunConfig& c, const std::string& key, const std::string& v) { c.mu0 = to_list(key, v); };
    t["run.reference_level"] = int_field([](RunConfig& c) -> int& { return c.reference_level; }, 0, 6);

    t["linear_diffusion.n_u"] = int_field([](RunConfig& c) -> Eigen::Index& { return c.linear.n_u; }, 3, 4095);
    t["linear_diffusion.n_y"] = int_field([](RunConfig& c) -> Eigen::Index& { return c.linear.n_y; }, 1, 2);
    t["linear_diffusion.n_mu"] = int_field([](RunConfig& c) -> Eigen::Index& { return c.linear.n_mu; }, 1, 256);
    t["linear_diffusion.alpha"] = real_field([](RunConfig& c) -> double& { return c.linear.alpha; }, 0.0, kInf, true);
    t["linear_diffusion.kappa_y1"] = real_field([](RunConfig& c) -> double& { return c.linear.kappa_y1; }, 0.0, 0.9);
    t["linear_diffusion.kappa_y2"] = real_field([](RunConfig& c) -> double& { return c.linear.kappa_y2; }, 0.0, 0.9);

    t["burgers.n_u"] = int_field([](RunConfig& c) -> Eigen::Index& { return c.burgers.n_u; }, 3, 4095);
    t["burgers.n_mu"] = int_field([](RunConfig& c) -> Eigen::Index& { return c.burgers.n_mu; }, 1, 256);
    t["burgers.alpha"] = real_field([](RunConfig& c) -> double& { return c.burgers.alpha; }, 0.0, kInf, true);
    t["burgers.inv_nu_left"] = real_field([](RunConfig& c) -> double& { return c.burgers.inv_nu_left; }, 0.0, kInf, true);
    t["burgers.inv_nu_right"] = real_field([](RunConfig& c) -> double& { return c.burgers.inv_nu_right; }, 0.0, kInf, true);
    t["burgers.inflow_base"] = real_field([](RunConfig& c) -> double& { return c.burgers.inflow_base; }, -kInf, kInf);
    t["burgers.inflow_amplitude"] =
        real_field([](RunConfig& c) -> double& { return c.burgers.inflow_amplitude; }, -kInf, kInf);
    t["burgers.reference_level"] = int_field([](RunConfig& c) -> int& { return c.burgers.reference_level; }, 1, 8);

    auto tr = [](double TrustRegionConfig::*field) {
      return [field](RunConfig& c) -> double& { return c.trust_region.*field; };
    };
    t["trust_region.eta1"] = real_field(tr(&TrustRegionConfig::eta1), 0.0, 1.0, true);
    t["trust_region.eta2"] = real_field(tr(&TrustRegionConfig::eta2), 0.0, 1.0, true);
    t["trust_region.gamma"] = real_field(tr(&TrustRegionConfig::gamma), 0.0, 1.0, true);
    t["trust_region.eta"] = real_field(tr(&TrustRegionConfig::eta), 0.0, 1.0, true);
    t["trust_region.omega"] = real_field(tr(&TrustRegionConfig::omega), 0.0, 1.0, true);
    t["trust_region.kappa_phi"] = real_field(tr(&TrustRegionConfig::kappa_phi), 0.0, kInf, true);
    t["trust_region.kappa_s"] = real_field(tr(&TrustRegionConfig::kappa_s), 0.0, 1.0, true);
    t["trust_region.delta0"] = real_field(tr(&TrustRegionConfig::delta0), 0.0, kInf, true);
    t["trust_region.delta_max"] = real_field(tr(&TrustRegionConfig::delta_max), 0.0, kInf, true);
    t["trust_region.gtol"] = real_field(tr(&TrustRegionConfig::gtol), 0.0, kInf, true);
    t["trust_region.forcing"] = real_field(tr(&TrustRegionConfig::forcing), 0.0, kInf, true);
    t["trust_region.gradient_floor"] = real_field(tr(&TrustRegionConfig::gradient_floor), 0.0, kInf);
    t["trust_region.objective_resolution"] = real_field(tr(&TrustRegionConfig::objective_resolution), 0.0, kInf);
    t["trust_region.max_iters"] = int_field([](RunConfig& c) -> int& { return c.trust_region.max_iters; }, 0, 100000);

    t["indicators.beta1"] = real_field([](RunConfig& c) -> double& { return c.trust_region.betas[0]; }, 0.0, kInf, true);
    t["indicators.beta3"] = real_field([](RunConfig& c) -> double& { return c.trust_region.betas[1]; }, 0.0, kInf, true);
    t["indicators.beta4"] = real_field([](RunConfig& c) -> double& { return c.trust_region.betas[2]; }, 0.0, kInf, true);
    t["indicators.alpha1"] = real_field([](RunConfig& c) -> double& { return c.trust_region.alphas[0]; }, 0.0, kInf, true);
    t["indicators.alpha2"] = real_field([](RunConfig& c) -> double& { return c.trust_region.alphas[1]; }, 0.0, kInf, true);
    t["indicators.balance"] = [](RunConfig& c, const std::string& key, const std::string& v) {
      c.trust_region.balance_weights = to_bool(key, v);
    };
    t["indicators.balance_scale"] =
        real_field([](RunConfig& c) -> double& { return c.trust_region.balance_scale; }, 0.0, kInf, true);
    t["indicators.max_level"] = int_field([](RunConfig& c) -> int& { return c.adapt.max_level; }, 1, kHardMaxLevel);

    t["solver.newton_tol_abs"] = real_field([](RunConfig& c) -> double& { return c.adapt.newton.tol_abs; }, 0.0, 1.0);
    t["solver.newton_tol_rel"] = real_field([](RunConfig& c) -> double& { return c.adapt.newton.tol_rel; }, 0.0, 1.0);
    t["solver.newton_max_iters"] = int_field([](RunConfig& c) -> int& { return c.adapt.newton.max_iters; }, 1, 10000);
    t["solver.newton_continuation"] =
        int_field([](RunConfig& c) -> int& { return c.adapt.newton.continuation_steps; }, 0, 1000);
    t["solver.rom_stationarity_tol"] =
        real_field([](RunConfig& c) -> double& { return c.adapt.rom.stationarity_tol; }, 0.0, 1.0, true);
    t["solver.rom_max_iters"] = int_field([](RunConfig& c) -> int& { return c.adapt.rom.max_iters; }, 1, 10000);

    t["baseline.level"] = int_field([](RunConfig& c) -> int& { return c.baseline.level; }, 1, 6);
    t["baseline.max_iters"] = int_field([](RunConfig& c) -> int& { return c.baseline.max_iters; }, 0, 100000);
    t["baseline.gtol"] = real_field([](RunConfig& c) -> double& { return c.baseline.gtol; }, 0.0, kInf);

    t["validate.n_samples"] = int_field([](RunConfig& c) -> int& { return c.validate.n_samples; }, 0, 100000);
    t["validate.fd_h"] = real_field([](RunConfig& c) -> double& { return c.validate.fd_h; }, 0.0, 1.0, true);
    t["validate.fd_tol_linear"] = real_field([](RunConfig& c) -> double& { return c.validate.fd_tol_linear; }, 0.0, 1.0, true);
    t["validate.fd_tol_burgers"] = real_field([](RunConfig& c) -> double& { return c.validate.fd_tol_burgers; }, 0.0, 1.0, true);
    t["validate.bound_samples"] = int_field([](RunConfig& c) -> int& { return c.validate.bound_samples; }, 0, 100000);
    t["validate.mu_scale"] = real_field([](RunConfig& c) -> double& { return c.validate.mu_scale; }, 0.0, kInf);
    t["validate.max_median_factor"] =
        real_field([](RunConfig& c) -> double& { return c.validate.max_median_factor; }, 1.0, kInf);
    t["validate.corrupt_jacobian"] =
        real_field([](RunConfig& c) -> double& { return c.validate.corrupt_jacobian; }, -kInf, kInf);
    return t;
  }();
  return table;
}

}  // namespace

Vector RunConfig::initial_control(Eigen::Index n_mu) const {
  if (mu0.size() == 1) return Vector::Constant(n_mu, mu0[0]);
  if (static_cast<Eigen::Index>(mu0.size()) != n_mu)
    throw ConfigError("run.mu0", "expected 1 or " + std::to_string(n_mu) + " entries, got " +
                                     std::to_string(mu0.size()));
  return Eigen::Map<const Vector>(mu0.data(), n_mu);
}

RunConfig parse_config(std::istream& is) {
  std::stringstream buffer;
  buffer << is.rdbuf();
  RunConfig config;
  config.source = buffer.str();

  boost::property_tree::ptree tree;
  try {
    std::istringstream in(config.source);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(section, "keys must belong to a section");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      auto it = table.find(key);
      if (it == table.end()) throw ConfigError(key, "unknown key");
      it->second(config, key, value.data());
    }
  }
  try {
    config.trust_region.validate();
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    throw ConfigError(what.substr(0, what.find(':')), what.substr(what.find(':') + 2));
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  return parse_config(in);
}

std::string echo_config(const RunConfig& c) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  const auto& tr = c.trust_region;
  os << "run.method = " << c.method << "\n"
     << "run.problem = " << c.problem << "\n"
     << "run.seed = " << c.seed << "\n"
     << "run.threads = " << c.threads << "\n"
     << "run.mu0 = ";
  for (std::size_t j = 0; j < c.mu0.size(); ++j) os << (j ? ", " : "") << c.mu0[j];
  os << "\n"
     << "run.reference_level = " << c.reference_level << "\n"
     << "linear_diffusion.n_u = " << c.linear.n_u << "\n"
     << "linear_diffusion.n_y = " << c.linear.n_y << "\n"
     << "linear_diffusion.n_mu = " << c.linear.n_mu << "\n"
     << "linear_diffusion.alpha = " << c.linear.alpha << "\n"
     << "linear_diffusion.kappa_y1 = " << c.linear.kappa_y1 << "\n"
     << "linear_diffusion.kappa_y2 = " << c.linear.kappa_y2 << "\n"
     << "burgers.n_u = " << c.burgers.n_u << "\n"
     << "burgers.n_mu = " << c.burgers.n_mu << "\n"
     << "burgers.alpha = " << c.burgers.alpha << "\n"
     << "burgers.inv_nu_left = " << c.burgers.inv_nu_left << "\n"
     << "burgers.inv_nu_right = " << c.burgers.inv_nu_right << "\n"
     << "burgers.inflow_base = " << c.burgers.inflow_base << "\n"
     << "burgers.inflow_amplitude = " << c.burgers.inflow_amplitude << "\n"
     << "burgers.reference_level = " << c.burgers.reference_level << "\n"
     << "trust_region.eta1 = " << tr.eta1 << "\n"
     << "trust_region.eta2 = " << tr.eta2 << "\n"
     << "trust_region.gamma = " << tr.gamma << "\n"
     << "trust_region.eta = " << tr.eta << "\n"
     << "trust_region.omega = " << tr.omega << "\n"
     << "trust_region.kappa_phi = " << tr.kappa_phi << "\n"
     << "trust_region.kappa_s = " << tr.kappa_s << "\n"
     << "trust_region.delta0 = " << tr.delta0 << "\n"
     << "trust_region.delta_max = " << tr.delta_max << "\n"
     << "trust_region.gtol = " << tr.gtol << "\n"
     << "trust_region.max_iters = " << tr.max_iters << "\n"
     << "trust_region.forcing = " << tr.forcing << "\n"
     << "trust_region.gradient_floor = " << tr.gradient_floor << "\n"
     << "trust_region.objective_resolution = " << tr.objective_resolution << "\n"
     << "indicators.beta1 = " << tr.betas[0] << "\n"
     << "indicators.beta3 = " << tr.betas[1] << "\n"
     << "indicators.beta4 = " << tr.betas[2] << "\n"
     << "indicators.alpha1 = " << tr.alphas[0] << "\n"
     << "indicators.alpha2 = " << tr.alphas[1] << "\n"
     << "indicators.balance = " << (tr.balance_weights ? "true" : "false") << "\n"
     << "indicators.balance_scale = " << tr.balance_scale << "\n"
     << "indicators.max_level = " << c.adapt.max_level << "\n"
     << "solver.newton_tol_abs = " << c.adapt.newton.tol_abs << "\n"
     << "solver.newton_tol_rel = " << c.adapt.newton.tol_rel << "\n"
     << "solver.newton_max_iters = " << c.adapt.newton.max_iters << "\n"
     << "solver.newton_continuation = " << c.adapt.newton.continuation_steps << "\n"
     << "solver.rom_stationarity_tol = " << c.adapt.rom.stationarity_tol << "\n"
     << "solver.rom_max_iters = " << c.adapt.rom.max_iters << "\n"
     << "baseline.level = " << c.baseline.level << "\n"
     << "baseline.max_iters = " << c.baseline.max_iters << "\n"
     << "baseline.gtol = " << c.baseline.gtol << "\n"
     << "validate.n_samples = " << c.validate.n_samples << "\n"
     << "validate.fd_h = " << c.validate.fd_h << "\n"
     << "validate.fd_tol_linear = " << c.validate.fd_tol_linear << "\n"
     << "validate.fd_tol_burgers = " << c.validate.fd_tol_burgers << "\n"
     << "validate.bound_samples = " << c.validate.bound_samples << "\n"
     << "validate.mu_scale = " << c.validate.mu_scale << "\n"
     << "validate.max_median_factor = " << c.validate.max_median_factor << "\n"
     << "validate.corrupt_jacobian = " << c.validate.corrupt_jacobian << "\n";
  return os.str();
}

std::unique_ptr<ModelProblem> make_problem(const std::string& name, const RunConfig& config) {
  if (name == "linear-diffusion") return std::make_unique<LinearDiffusion>(config.linear);
  if (name == "burgers-control") return std::make_unique<BurgersControl>(config.burgers);
  throw ConfigError("run.problem", "unknown problem '" + name + "'");
}

}  // namespace sgrom
