#pragma once

// Transmit power and bandwidth with the layer split and frequencies fixed.
//
// Minimizes sum_n w_e * p_n * payload_n / R_n(p_n, b_n) subject to the power
// box and per-RSU bandwidth budgets. The sum of ratios is handled through
// epigraph variables beta and parametric weights nu: the inner problem
//   min sum_n nu_n (p_n payload_n - beta_n R_n(p_n, b_n))
// is convex and solved by Newton-SQP; the outer loop re-estimates
// beta_n = p_n payload_n / R_n and nu_n = w_e / R_n until they are consistent.

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vlsplit/allocation.hpp"
#include "vlsplit/scenario.hpp"
#include "vlsplit/subproblem1.hpp"

namespace vlsplit {

/// R(p, b) = b log2(1 + g p / (N0 b)) and its derivatives.
struct RateDerivatives {
  double rate = 0.0;
  double dp = 0.0, db = 0.0;
  double dpp = 0.0, dpb = 0.0, dbb = 0.0;
};

RateDerivatives rate_derivatives(double power, double bandwidth, double gain, double noise_psd);

/// x^T Hess(R) x via the closed form -g^2 (b x1 - p x2)^2 / (ln2 b (N0 b + g p)^2).
/// Throws InvalidArgument unless power > 0 and bandwidth > 0.
double rate_quadratic_form(double power, double bandwidth, double gain, double noise_psd,
                           const Eigen::Vector2d& probe);

struct FracState {
  Eigen::VectorXd power;      // W
  Eigen::VectorXd bandwidth;  // Hz
  Eigen::VectorXd beta;       // J, epigraph values
  Eigen::VectorXd nu;         // s/bit scale
  int outer_iteration = 0;
  double residual_norm = 0.0;
};

struct FracOptions {
  double tolerance = 1e-8;        // outer fixed-point residual
  int max_outer_iterations = 50;
  double inner_tolerance = 1e-8;  // projected-gradient stationarity
  int max_inner_iterations = 300;
  double damping = 1.0;           // xi in (0, 1]
  // Adds the curvature of the true objective that the inner model lacks as a
  // proximal term centred at the current point. Fixed points are unchanged.
  // Only used without damping.
  bool curvature_correction = true;
  VariableFloors floors;
};

struct InnerResult {
  Eigen::VectorXd power;
  Eigen::VectorXd bandwidth;
  double objective = 0.0;  // sum nu (p payload - beta R), unscaled
  double stationarity = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Convex inner problem for fixed (beta, nu). Starts from `start` when given,
/// otherwise from the default initial point. Non-convergence is reported
/// through `converged` with the last (best) iterate.
InnerResult solve_inner(const Eigen::VectorXd& nu, const Eigen::VectorXd& beta, const Scenario& scenario,
                        const FracOptions& options = {},
                        const std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& start = std::nullopt);

/// beta_n = p_n payload_n / R_n, nu_n = w_e / R_n. With damping < 1 the new
/// values are blended with `previous` (beta, nu). Throws InfeasibleLink on zero rate.
std::pair<Eigen::VectorXd, Eigen::VectorXd> update_parameters(
    const Eigen::VectorXd& power, const Eigen::VectorXd& bandwidth, const Scenario& scenario, const Weights& weights,
    double damping = 1.0, const std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& previous = std::nullopt);

/// max_n max(|p payload - beta R| / (p payload), |nu R - w_e| / w_e).
double fixed_point_residual(const FracState& state, const Scenario& scenario, const Weights& weights);

/// sum_n w_e * E_n^com.
double comm_objective(const Eigen::VectorXd& power, const Eigen::VectorXd& bandwidth, const Scenario& scenario,
                      const Weights& weights);

/// p = p_max / 2, b = b_max / N_m.
std::pair<Eigen::VectorXd, Eigen::VectorXd> initial_power_bandwidth(const Scenario& scenario);

struct Subproblem2Result {
  Eigen::VectorXd power;
  Eigen::VectorXd bandwidth;
  FracState state;               // final parameters, recomputed at (power, bandwidth)
  double objective = 0.0;        // comm_objective at the returned point
  double initial_objective = 0.0;
  SolverDiagnostics diagnostics;  // objective_trace holds comm_objective per outer step
};

Subproblem2Result solve_subproblem2(
    const Scenario& scenario, const Weights& weights, const FracOptions& options = {},
    const std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& warm_start = std::nullopt);

}  // namespace vlsplit
