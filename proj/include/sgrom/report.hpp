#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "sgrom/adapt.hpp"
#include "sgrom/oracle.hpp"
#include "sgrom/trust_region.hpp"

namespace sgrom {

/// Formats a double with 17 significant digits in the classic locale.
std::string fmt(double v);

/// Comma-separated table with a header row, flushed after every row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::vector<std::string> history_header();
std::vector<std::string> history_row(const IterationRecord& rec);

std::vector<std::string> event_header();
std::vector<std::string> event_row(const RefinementEvent& event);

/// Cost C(tau) for tau in {1, 10, 100, inf}.
std::vector<double> cost_curve(const QueryCounters& counters);
inline const std::vector<double> kCostTaus{1.0, 10.0, 100.0, std::numeric_limits<double>::infinity()};

/// Output directory of one run: config.echo, history.csv, events.csv,
/// grids/iter_k.txt, basis.csv and summary.csv.
class RunReport {
 public:
  RunReport(const std::filesystem::path& dir, const std::string& config_echo);

  const std::filesystem::path& dir() const { return dir_; }
  void iteration(const TrustRegionState& state, const IterationRecord& rec);
  void event(const RefinementEvent& event);
  void basis(const ReducedBasis& basis);
  void summary(const std::vector<std::pair<std::string, std::string>>& entries);

 private:
  std::filesystem::path dir_;
  CsvWriter history_;
  CsvWriter events_;
};

void write_baseline_history(const std::filesystem::path& path, const BaselineResult& result);
void write_bound_samples(const std::filesystem::path& path, const BoundValidation& validation);

}  // namespace sgrom
