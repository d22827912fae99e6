#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgrom/config.hpp"
#include "sgrom/problems.hpp"
#include "sgrom/report.hpp"
#include "sgrom/validation.hpp"

using namespace sgrom;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("empty config yields the documented defaults") {
  const RunConfig c = parse("");
  CHECK(c.method == "sg-rom-tr");
  CHECK(c.problem == "burgers-control");
  CHECK(c.trust_region.eta1 == 0.1);
  CHECK(c.trust_region.eta2 == 0.75);
  CHECK(c.trust_region.gamma == 0.5);
  CHECK(c.trust_region.eta == 0.1);
  CHECK(c.trust_region.omega == 0.1);
  CHECK(c.trust_region.kappa_phi == 1.0);
  CHECK(c.trust_region.betas == Betas{1.0, 1.0, 1.0});
  CHECK(c.trust_region.alphas == Alphas{1e-2, 1e-2});
  CHECK(c.burgers.n_u == 127);
  CHECK(c.initial_control(8) == Vector::Zero(8));
}

TEST_CASE("config values are parsed by section") {
  const RunConfig c = parse(
      "[run]\nproblem = linear-diffusion\nmu0 = 0.5\nseed = 7\n"
      "[trust_region]\nkappa_phi = 0.5\nmax_iters = 12\n"
      "[indicators]\nbeta1 = 2\nbalance = true\n"
      "[linear_diffusion]\nn_u = 31\n");
  CHECK(c.problem == "linear-diffusion");
  CHECK(c.seed == 7);
  CHECK(c.trust_region.kappa_phi == 0.5);
  CHECK(c.trust_region.max_iters == 12);
  CHECK(c.trust_region.betas[0] == 2.0);
  CHECK(c.trust_region.balance_weights);
  CHECK(c.linear.n_u == 31);
  CHECK(c.initial_control(3) == Vector::Constant(3, 0.5));
  CHECK(c.source.find("kappa_phi") != std::string::npos);
}

TEST_CASE("config errors name the key") {
  auto key_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("no error");
  };
  CHECK(key_of("[trust_region]\nbogus = 1\n") == "trust_region.bogus");
  CHECK(key_of("[nowhere]\nx = 1\n") == "nowhere.x");
  CHECK(key_of("[trust_region]\ngamma = 2\n") == "trust_region.gamma");
  CHECK(key_of("[trust_region]\neta1 = abc\n") == "trust_region.eta1");
  CHECK(key_of("[trust_region]\neta2 = 0.05\n").rfind("trust_region.", 0) == 0);
  CHECK(key_of("[run]\nproblem = heat\n") == "run.problem");
  CHECK_THROWS_AS(parse("[run]\nmu0 = 1, 2\n").initial_control(8), ConfigError);
  CHECK_THROWS_AS(make_problem("heat", RunConfig{}), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/file.ini"), ConfigError);
}

TEST_CASE("config echo lists every section") {
  const std::string echo = echo_config(RunConfig{});
  for (const char* key : {"run.method", "trust_region.omega", "indicators.alpha2", "solver.rom_max_iters",
                          "baseline.level", "validate.n_samples", "burgers.n_u", "linear_diffusion.n_u"})
    CHECK(echo.find(key) != std::string::npos);
}

TEST_CASE("number formatting round-trips and is locale independent") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 12345.0}) CHECK(std::stod(fmt(v)) == v);
  CHECK(fmt(0.5) == "0.5");
  CHECK(fmt(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("CSV writer quotes and checks column counts") {
  const fs::path dir = fs::temp_directory_path() / "sgrom_test_csv";
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "t.csv", {"a", "b"});
    w.row({"1", "x,y"});
    CHECK_THROWS_AS(w.row({"1"}), std::logic_error);
  }
  CHECK(slurp(dir / "t.csv") == "a,b\n1,\"x,y\"\n");
  fs::remove_all(dir);
}

TEST_CASE("history rows match the header") {
  IterationRecord r;
  r.mu = Vector::Zero(2);
  CHECK(history_row(r).size() == history_header().size());
  CHECK(event_row(RefinementEvent{}).size() == event_header().size());
  CHECK(cost_curve(QueryCounters{}).size() == kCostTaus.size());
}

TEST_CASE("validation suites pass on the bundled problems") {
  LinearDiffusion lin;
  BurgersControl bur;
  CHECK(quadrature_suite().passed);
  CHECK(fd_gradient_suite({{&lin, 1e-6}, {&bur, 1e-5}}, 3, 1e-5, 11, 0.5).passed);
  CHECK(rom_property_suite(lin, 11, 0.5).passed);
  CHECK(bound_suite(lin, 20, 1, 0.5, 10.0).passed);
}

TEST_CASE("corrupted Jacobian fails the finite-difference suite") {
  LinearDiffusion lin;
  const CorruptedJacobian bad(lin, 1.1);
  const SuiteResult r = fd_gradient_suite({{&bad, 1e-6}}, 3, 1e-5, 11, 0.5);
  CHECK_FALSE(r.passed);
  CHECK(r.failures.size() == 3);
}

TEST_CASE("zero samples pass vacuously") {
  LinearDiffusion lin;
  const SuiteResult r = fd_gradient_suite({{&lin, 1e-6}}, 0, 1e-5, 11);
  CHECK(r.passed);
  CHECK(r.vacuous);
  CHECK(r.summary.find("warning") != std::string::npos);
  CHECK(bound_suite(lin, 0, 1, 0.5, 10.0).vacuous);
}
