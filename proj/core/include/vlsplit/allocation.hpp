#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "vlsplit/model.hpp"
#include "vlsplit/scenario.hpp"

namespace vlsplit {

/// Lower bounds that keep 1/f, 1/f^2 and the Shannon term finite.
struct VariableFloors {
  double frequency_fraction = 1e-3;  // f >= 1e-3 * f_max (vehicle and RSU)
  double bandwidth_hz = 1e3;         // b >= 1 kHz
  double power_watts = 1e-2;         // p >= min(10 mW, p_max / 2), independent of p_max otherwise

  double vehicle_frequency(const VehicleHardware& hw) const { return frequency_fraction * hw.f_max; }
  double rsu_frequency(const RsuHardware& hw) const { return frequency_fraction * hw.f_max; }
  double power(const VehicleHardware& hw) const { return std::min(power_watts, 0.5 * hw.p_max); }
};

/// Decision variables. `rsu_frequency[n]` is f_{n,m} for the RSU vehicle n is associated with.
struct Allocation {
  std::vector<int> layers_local;       // alpha_n in {1..layers}
  std::vector<double> power;           // p_n, W
  std::vector<double> bandwidth;       // b_n, Hz
  std::vector<double> vehicle_frequency;  // f_n, cycles/s
  std::vector<double> rsu_frequency;      // f_{n,m}, cycles/s
};

struct CostBreakdown {
  // per vehicle
  std::vector<double> local_time;    // alpha_n * T_n
  std::vector<double> local_energy;  // alpha_n * E_n
  std::vector<double> comm_energy;   // E_n^com
  std::vector<double> vehicle_cost;  // Cost_n^V
  // per RSU
  std::vector<double> remote_time;   // sum_n chi (L - alpha_n) T_nm
  std::vector<double> remote_energy;
  std::vector<double> rsu_cost;      // Cost_m^R
  double weighted_total = 0.0;

  double total_time() const;    // sum of local and remote compute time
  double total_energy() const;  // compute + uplink energy
};

struct FeasibilityTolerance {
  double bound_rel = 1e-9;     // box constraints, relative to the bound
  double equality_rel = 1e-6;  // per-RSU sums
};

/// Throws FeasibilityError naming the first violated constraint
/// ("layers", "power", "bandwidth", "vehicle_frequency", "rsu_frequency", "shape").
void check_feasibility(const Scenario& scenario, const Allocation& alloc,
                       const FeasibilityTolerance& tol = {});

/// Non-throwing variant; empty string when feasible.
std::string feasibility_violation(const Scenario& scenario, const Allocation& alloc,
                                  const FeasibilityTolerance& tol = {});

/// Weighted delay/energy objective with its components.
CostBreakdown total_cost(const Scenario& scenario, const Allocation& alloc, const Weights& weights);

/// Rate of vehicle n on its associated link.
double vehicle_rate(const Scenario& scenario, int n, double power, double bandwidth);

}  // namespace vlsplit
