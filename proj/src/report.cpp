#include "sgrom/report.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace sgrom {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string fmt_vec(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += fmt(v[i]);
  }
  return s;
}

std::string fmt_index(const MultiIndex& index) {
  std::string s;
  for (std::size_t i = 0; i < index.dim(); ++i) {
    if (i) s += ' ';
    s += std::to_string(index[i]);
  }
  return s;
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string flag(bool b) { return b ? "1" : "0"; }

}  // namespace

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw std::logic_error("CsvWriter: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << quoted(cells[i]);
  }
  out_ << '\n';
  out_.flush();
}

std::vector<std::string> history_header() {
  return {"k", "mu", "delta", "grad_norm", "phi", "phi_bound", "gradient_condition", "e1", "e3", "e4",
          "step_norm", "predicted", "cauchy_bound", "cauchy_ok", "subproblem_exit", "m_center", "m_trial",
          "psi_center", "psi_trial", "theta", "theta_pow", "theta_bound", "objective_condition",
          "objective_condition_effective", "objective_floor_active", "e1_obj", "e2_obj", "e1_obj_bound",
          "e2_obj_bound", "rho", "accepted", "radius_branch", "delta_next", "grid_size", "grid_nodes",
          "basis_size", "obj_grid_size", "obj_basis_size", "hdm_primal", "hdm_adjoint", "hdm_sensitivity",
          "rom_primal", "rom_adjoint", "hdm_newton_iters", "rom_gn_iters"};
}

std::vector<std::string> history_row(const IterationRecord& r) {
  const QueryCounters& c = r.counters;
  return {std::to_string(r.k), fmt_vec(r.mu), fmt(r.delta), fmt(r.model_gradient_norm), fmt(r.phi),
          fmt(r.phi_bound), flag(r.gradient_condition), fmt(r.e1), fmt(r.e3), fmt(r.e4), fmt(r.step_norm),
          fmt(r.predicted), fmt(r.cauchy_bound), flag(r.cauchy_ok), r.subproblem_exit, fmt(r.m_center),
          fmt(r.m_trial), fmt(r.psi_center), fmt(r.psi_trial), fmt(r.theta), fmt(r.theta_pow),
          fmt(r.theta_bound), flag(r.objective_condition), flag(r.objective_condition_effective),
          flag(r.objective_floor_active), fmt(r.e1_obj), fmt(r.e2_obj), fmt(r.e1_obj_bound),
          fmt(r.e2_obj_bound), fmt(r.rho), flag(r.accepted), r.radius_branch, fmt(r.delta_next),
          std::to_string(r.grid_size), std::to_string(r.grid_nodes), std::to_string(r.basis_size),
          std::to_string(r.obj_grid_size), std::to_string(r.obj_basis_size), std::to_string(c.hdm_primal),
          std::to_string(c.hdm_adjoint), std::to_string(c.hdm_sensitivity), std::to_string(c.rom_primal),
          std::to_string(c.rom_adjoint), std::to_string(c.hdm_newton_iters), std::to_string(c.rom_gn_iters)};
}

std::vector<std::string> event_header() {
  return {"iteration", "kind", "target", "before", "after", "grid_size", "basis_size"};
}

std::vector<std::string> event_row(const RefinementEvent& e) {
  return {std::to_string(e.iteration), e.kind, e.target, fmt(e.before), fmt(e.after),
          std::to_string(e.grid_size), std::to_string(e.basis_size)};
}

std::vector<double> cost_curve(const QueryCounters& counters) {
  std::vector<double> out;
  for (double tau : kCostTaus) out.push_back(cost_metric(counters, tau));
  return out;
}

RunReport::RunReport(const std::filesystem::path& dir, const std::string& config_echo)
    : dir_((std::filesystem::create_directories(dir / "grids"), dir)),
      history_(dir / "history.csv", history_header()),
      events_(dir / "events.csv", event_header()) {
  std::ofstream echo(dir_ / "config.echo");
  echo << config_echo;
}

void RunReport::iteration(const TrustRegionState& state, const IterationRecord& rec) {
  history_.row(history_row(rec));
  std::ofstream grid(dir_ / "grids" / ("iter_" + std::to_string(rec.k) + ".txt"));
  grid << "# gradient grid, " << state.pair_grad.grid().size() << " indices\n";
  for (const MultiIndex& index : state.pair_grad.grid()) grid << fmt_index(index) << '\n';
  grid << "# objective grid, " << state.pair_obj.grid().size() << " indices\n";
  for (const MultiIndex& index : state.pair_obj.grid()) grid << fmt_index(index) << '\n';
}

void RunReport::event(const RefinementEvent& e) { events_.row(event_row(e)); }

void RunReport::basis(const ReducedBasis& basis) {
  CsvWriter out(dir_ / "basis.csv", {"column", "kind", "y", "mu", "dropped"});
  int column = 0;
  for (const SnapshotRecord& s : basis.provenance()) {
    out.row({s.dropped ? "" : std::to_string(column), to_string(s.kind), fmt_vec(s.y), fmt_vec(s.mu), flag(s.dropped)});
    if (!s.dropped) ++column;
  }
}

void RunReport::summary(const std::vector<std::pair<std::string, std::string>>& entries) {
  CsvWriter out(dir_ / "summary.csv", {"key", "value"});
  for (const auto& [key, value] : entries) out.row({key, value});
}

void write_baseline_history(const std::filesystem::path& path, const BaselineResult& result) {
  CsvWriter out(path, {"k", "mu", "value", "grad_norm", "step", "hdm_primal", "hdm_adjoint"});
  for (const BaselineIterate& it : result.history)
    out.row({std::to_string(it.k), fmt_vec(it.mu), fmt(it.value), fmt(it.gradient_norm), fmt(it.step),
             std::to_string(it.counters.hdm_primal), std::to_string(it.counters.hdm_adjoint)});
}

void write_bound_samples(const std::filesystem::path& path, const BoundValidation& validation) {
  CsvWriter out(path, {"sample", "y", "mu", "qoi_error", "gradient_error", "residual", "adjoint_residual",
                       "qoi_ratio", "gradient_ratio", "qoi_excluded", "gradient_excluded"});
  for (std::size_t i = 0; i < validation.samples.size(); ++i) {
    const BoundSample& s = validation.samples[i];
    out.row({std::to_string(i), fmt_vec(s.y), fmt_vec(s.mu), fmt(s.qoi_error), fmt(s.gradient_error),
             fmt(s.residual), fmt(s.adjoint_residual), fmt(s.qoi_ratio), fmt(s.gradient_ratio),
             flag(s.qoi_excluded), flag(s.gradient_excluded)});
  }
}

}  // namespace sgrom
