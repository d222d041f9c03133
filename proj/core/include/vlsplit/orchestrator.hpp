#pragma once

// Alternating optimization over the two sub-problems, the two random
// baselines, a grid oracle for small instances and the reporting metrics.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vlsplit/allocation.hpp"
#include "vlsplit/scenario.hpp"
#include "vlsplit/subproblem1.hpp"
#include "vlsplit/subproblem2.hpp"

namespace vlsplit {

struct AoOptions {
  double relative_tolerance = 1e-4;
  int max_rounds = 20;
  SqpOptions sqp;
  FracOptions frac;
};

/// One AO round. Round 0 is the initial allocation.
struct AoRound {
  int round = 0;
  double weighted_total = 0.0;
  double sp1_residual = 0.0;
  double sp2_residual = 0.0;
  bool sp1_converged = true;
  bool sp2_converged = true;
  double sp1_ms = 0.0;
  double sp2_ms = 0.0;
};

struct AoTrace {
  std::vector<AoRound> rounds;
  bool converged = false;  // stopping rule met and both sub-solvers converged in the last round
  std::string message;

  /// Number of AO rounds run (round 0 excluded).
  int iterations() const { return rounds.empty() ? 0 : static_cast<int>(rounds.size()) - 1; }
};

struct AoResult {
  Allocation allocation;
  CostBreakdown cost;
  AoTrace trace;
};

/// alpha = round(L/2), f = f_max/2, f_rsu = f_max_m/N_m, p = p_max/2, b = b_max/N_m.
Allocation initial_allocation(const Scenario& scenario);

AoResult alternating_optimize(const Scenario& scenario, const Weights& weights, const AoOptions& options = {});

enum class Method { proposed, rlor, rrol };

std::string to_string(Method method);
/// Accepts "proposed", "rlor", "rrol"; throws InvalidArgument otherwise.
Method parse_method(const std::string& name);

/// RLOR: random split, optimized resources. RROL: random resources, optimized split.
/// `converged` (optional out) reports whether the inner solvers converged.
Allocation baseline_allocate(Method kind, const Scenario& scenario, const Weights& weights, std::uint64_t seed,
                             const AoOptions& options = {}, bool* converged = nullptr);

/// Best layer split for fixed resources, by per-vehicle enumeration of 1..L.
std::vector<int> best_layers_for(const Scenario& scenario, const Weights& weights,
                                 const std::vector<double>& vehicle_frequency,
                                 const std::vector<double>& rsu_frequency);

struct GridSpec {
  int box_points = 20;     // uniform points on [floor, max] for f and p
  int simplex_units = 20;  // per-RSU shares are k / simplex_units, k >= 1
  double max_evaluations = 1e8;
};

struct OracleResult {
  Allocation allocation;
  double objective = 0.0;
  double evaluations = 0.0;
};

/// Exhaustive search over integer splits and the resource grids. Uses the
/// exact separation of the objective into a compute part and an uplink part
/// and, within each, into independent RSU groups. Throws InvalidArgument if
/// the search would exceed `max_evaluations`.
OracleResult brute_force_oracle(const Scenario& scenario, const Weights& weights, const GridSpec& grid = {},
                                const VariableFloors& floors = {});

/// Number of term evaluations brute_force_oracle would perform.
double oracle_evaluations(const Scenario& scenario, const GridSpec& grid);

struct CompletionTime {
  double objective_time = 0.0;  // sum of local and remote compute time, s
  double end_to_end = 0.0;      // mean per-vehicle compute + uplink time, s
};

CompletionTime completion_time_metric(const Scenario& scenario, const Allocation& alloc);

/// Runs one method end to end and reports the evaluated cost.
struct MethodResult {
  Method method = Method::proposed;
  Allocation allocation;
  CostBreakdown cost;
  CompletionTime completion;
  AoTrace trace;  // empty rounds for baselines
  bool converged = false;
};

MethodResult run_method(Method method, const Scenario& scenario, const Weights& weights, std::uint64_t seed,
                        const AoOptions& options = {});

}  // namespace vlsplit
