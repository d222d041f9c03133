#pragma once

// Layer split and GPU frequencies with power and bandwidth held fixed.
//
// The integer layer split alpha is relaxed to [1, L], the relaxed problem is
// solved by SQP on the analytic Lagrangian derivatives, and alpha is then
// rounded and the frequencies re-optimized with alpha fixed.
//
// Lagrangian variable order used by eval_gradient / eval_hessian:
//   [alpha(N), f(N), f_rsu(N), lambda(N), mu(N), gamma(N), sigma(M)]
// where lambda, mu, gamma price 1 - alpha <= 0, alpha - L <= 0, f - f_max <= 0
// and sigma prices sum_n chi_nm f_nm - f_max_m = 0.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vlsplit/allocation.hpp"
#include "vlsplit/qp.hpp"
#include "vlsplit/scenario.hpp"

namespace vlsplit {

struct SqpState {
  Eigen::VectorXd alpha;           // continuous layers kept local
  Eigen::VectorXd vehicle_freq;    // f_n
  Eigen::VectorXd rsu_freq;        // f_{n, chi(n)}
  Eigen::VectorXd lambda, mu, gamma;  // per vehicle, >= 0
  Eigen::VectorXd sigma;              // per RSU
  // Multipliers of the frequency floors (not part of the closed-form Lagrangian).
  Eigen::VectorXd vehicle_floor_dual, rsu_floor_dual;
  int iteration = 0;
  double kkt_residual = 0.0;
};

/// Iteration history shared by the sub-solvers and the AO driver.
struct SolverDiagnostics {
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
  std::vector<double> objective_trace;
  std::vector<double> residual_trace;
  std::string message;
};

struct SqpOptions {
  double kkt_tolerance = 1e-6;
  int max_iterations = 200;
  bool full_step = false;  // skip the merit line search
  VariableFloors floors;
};

struct StepDiagnostics {
  double step_norm = 0.0;    // infinity norm of the scaled QP step
  double step_length = 1.0;  // accepted line-search fraction
  double merit_before = 0.0;
  double merit_after = 0.0;
  double kkt_residual = 0.0;  // at the state the step was computed from
  double regularization = 0.0;
  int qp_iterations = 0;
  bool line_search_failed = false;
};

/// alpha = L/2, f = f_max/2, f_nm = f_max_m / N_m, multipliers zero.
SqpState initial_sqp_state(const Scenario& scenario);

/// SqpState from an integer allocation (multipliers zero).
SqpState sqp_state_from(const Scenario& scenario, const Allocation& alloc);

/// Compute part of the objective: local and RSU delay/energy, no uplink energy.
double eval_objective(const SqpState& state, const Scenario& scenario, const Weights& weights);

/// Full Lagrangian value including the multiplier terms.
double eval_lagrangian(const SqpState& state, const Scenario& scenario, const Weights& weights);

/// Gradient of the Lagrangian in the variable order documented above.
Eigen::VectorXd eval_gradient(const SqpState& state, const Scenario& scenario, const Weights& weights);

/// Symmetric Hessian of the Lagrangian, same ordering.
Eigen::MatrixXd eval_hessian(const SqpState& state, const Scenario& scenario, const Weights& weights);

/// Packs/unpacks the Lagrangian variable vector.
Eigen::VectorXd pack_lagrangian_point(const SqpState& state);
SqpState unpack_lagrangian_point(const Eigen::VectorXd& z, const Scenario& scenario);

/// One SQP iteration. With `fix_alpha` only the frequencies move.
/// Throws SolverError when the QP subproblem fails.
std::pair<SqpState, StepDiagnostics> sqp_step(const SqpState& state, const Scenario& scenario,
                                              const Weights& weights, const SqpOptions& options = {},
                                              bool fix_alpha = false);

struct Subproblem1Result {
  std::vector<int> layers_local;
  Eigen::VectorXd vehicle_freq;
  Eigen::VectorXd rsu_freq;
  double objective = 0.0;           // eval_objective at the returned point
  double relaxed_objective = 0.0;   // before rounding
  SqpState relaxed;                 // continuous SQP end point
  SolverDiagnostics diagnostics;          // relaxed SQP
  SolverDiagnostics repair_diagnostics;   // frequency-only pass after rounding
};

/// Runs SQP on the relaxed problem (from `warm_start` if given), rounds
/// alpha, repairs frequencies. Never returns a point worse than the start.
Subproblem1Result solve_subproblem1(const Scenario& scenario, const Weights& weights,
                                    const SqpOptions& options = {},
                                    const std::optional<SqpState>& warm_start = std::nullopt);

/// Frequency-only SQP with the integer split fixed.
Subproblem1Result optimize_frequencies(const Scenario& scenario, const Weights& weights,
                                       const std::vector<int>& layers_local, const SqpOptions& options = {},
                                       const std::optional<SqpState>& warm_start = std::nullopt);

/// Nearest integer with x.5 rounded down, clamped to [1, layers].
int round_layers(double alpha, int layers);

}  // namespace vlsplit
