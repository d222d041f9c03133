#pragma once

// Weight sweeps over seeds and methods, and their CSV artifacts.
//
// results CSV, one row per (wt, seed, method), sorted in that order:
//   wt, seed, method, weighted_total, objective_time_s, end_to_end_s,
//   energy_J, ao_iters, wall_ms, status
// summary CSV, one row per (wt, method):
//   wt, method, rows, ok_rows, then the mean of each numeric column over
//   the rows that produced an allocation (status ok or nonconverged).
//
// status is "ok", "nonconverged", "infeasible: <constraint>" or
// "error: <message>". Floats are written with 17 significant digits.
// Everything except wall_ms is independent of the thread count.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlsplit/orchestrator.hpp"
#include "vlsplit/scenario.hpp"

namespace vlsplit::cli {

struct SweepConfig {
  std::vector<double> time_weights{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Method> methods{Method::proposed, Method::rlor, Method::rrol};
  ScenarioParams params;
  AoOptions solver;
  std::filesystem::path output_dir = ".";

  /// Throws InvalidArgument on empty lists or weights outside [0, 1].
  void validate() const;
};

/// Keys: wt, seeds, methods, params, solver, output_dir. Missing keys keep defaults.
SweepConfig sweep_config_from_json(const nlohmann::json& doc);

/// Keys: ao_tolerance, ao_max_rounds, sqp_kkt_tolerance, sqp_max_iterations,
/// frac_tolerance, frac_max_outer_iterations, frac_damping.
AoOptions solver_options_from_json(const nlohmann::json& doc, AoOptions base = {});

struct SweepRow {
  double wt = 0.0;
  std::uint64_t seed = 0;
  Method method = Method::proposed;
  double weighted_total = 0.0;
  double objective_time = 0.0;
  double end_to_end = 0.0;
  double energy = 0.0;
  int ao_iters = 0;
  double wall_ms = 0.0;
  std::string status;

  bool ok() const { return status == "ok"; }
  bool has_result() const { return status == "ok" || status == "nonconverged"; }
};

struct SummaryRow {
  double wt = 0.0;
  Method method = Method::proposed;
  int rows = 0;
  int ok_rows = 0;
  double weighted_total = 0.0;
  double objective_time = 0.0;
  double end_to_end = 0.0;
  double energy = 0.0;
  double ao_iters = 0.0;
  double wall_ms = 0.0;
};

/// Seed for the random baselines of one scenario, derived from the global seed.
std::uint64_t baseline_seed(std::uint64_t global_seed, std::uint64_t scenario_seed);

/// Status string for one finished run (see the header comment).
std::string run_status(const Scenario& scenario, const MethodResult& result);

/// One run on an existing scenario. Exceptions become an "error: ..." status;
/// `full` (optional) receives the complete result when one was produced.
SweepRow evaluate(const Scenario& scenario, double wt, Method method, std::uint64_t baseline_seed,
                  const AoOptions& options, MethodResult* full = nullptr);

/// Runs every (wt, seed, method) on `threads` workers; rows come back in canonical order.
std::vector<SweepRow> run_sweep(const SweepConfig& config, int threads, std::uint64_t global_seed);

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows);

/// printf("%.17g").
std::string format_double(double value);

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace vlsplit::cli
