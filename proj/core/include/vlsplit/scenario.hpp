#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "vlsplit/model.hpp"

namespace vlsplit {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct VehicleState {
  Point position;
  std::int64_t token_count = 1;  // drives the FLOPs model
  double payload_bits = 1.0;     // uplink size at the split point
  VehicleHardware hardware;
};

struct RsuState {
  Point position;
  RsuHardware hardware;
};

/// Knobs for `generate_scenario`. Defaults reproduce the 20-vehicle / 5-RSU
/// urban setting; LLM and GPU constants are explicit assumptions.
struct ScenarioParams {
  double arena_side = 1000.0;  // m
  int vehicle_count = 20;
  int rsu_count = 5;
  std::int64_t token_min = 128;
  std::int64_t token_max = 1024;
  LLMProfile llm;
  VehicleHardware vehicle;
  RsuHardware rsu;
  double noise_psd = std::pow(10.0, -16.4);  // -134 dBm per Hz, in W/Hz
  double shadow_sigma_db = 8.0;
  double min_distance = 1.0;  // m, clamp before the log
  double bits_per_activation = 16.0;
  bool paper_literal_payload = false;  // payload_bits = token_count
  std::uint64_t seed = 1;

  void validate() const;
};

struct Scenario {
  ScenarioParams params;  // generation metadata
  std::vector<VehicleState> vehicles;
  std::vector<RsuState> rsus;
  Eigen::MatrixXd gains;  // linear, vehicles x rsus
  double noise_psd = 0.0;
  std::vector<int> association;  // vehicle -> rsu index
  LLMProfile llm;
  std::uint64_t seed = 0;

  int vehicle_count() const { return static_cast<int>(vehicles.size()); }
  int rsu_count() const { return static_cast<int>(rsus.size()); }
  int layer_count() const { return static_cast<int>(llm.layer_count); }

  /// psi(d_n) for vehicle n.
  double flops(int n) const;
  /// Gain of vehicle n towards its associated RSU.
  double link_gain(int n) const { return gains(n, association[static_cast<std::size_t>(n)]); }
  const RsuHardware& rsu_of(int n) const {
    return rsus[static_cast<std::size_t>(association[static_cast<std::size_t>(n)])].hardware;
  }
  /// Vehicles associated to RSU m, in increasing index order.
  std::vector<int> vehicles_on(int m) const;
  /// RSUs with at least one associated vehicle.
  std::vector<int> occupied_rsus() const;

  /// Throws InvalidArgument when any structural invariant fails.
  void validate() const;
};

/// 128.1 + 37.6 log10(d_km) path loss plus `shadow_db`, returned as a linear gain.
double channel_gain(double distance_m, double shadow_db);

/// Strongest-gain association; ties go to the lowest RSU index.
std::vector<int> associate(const Eigen::MatrixXd& gains);

/// Deterministic for a given `params.seed`.
Scenario generate_scenario(const ScenarioParams& params);

/// Copy of `scenario` keeping only the listed vehicles (in the given order).
Scenario restrict_to(const Scenario& scenario, const std::vector<int>& vehicle_ids);

}  // namespace vlsplit
