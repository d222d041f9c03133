#pragma once

// Closed-form cost model for split transformer inference: per-layer FLOPs,
// GPU compute delay and energy, FDMA Shannon rate and uplink energy.
//
// Everything here is a pure function of its arguments.

#include <cstdint>

namespace vlsplit {

struct LLMProfile {
  std::int64_t hidden_size = 4096;  // h
  std::int64_t layer_count = 32;    // total transformer layers
  std::int64_t batch_size = 1;      // B

  void validate() const;
};

/// Delay/energy preference. Build through `Weights::from_time()` so that
/// the energy weight is always derived as 1 - time.
struct Weights {
  double time = 0.5;
  double energy = 0.5;

  static Weights from_time(double time_weight);
  void validate() const;
};

struct VehicleHardware {
  double f_max = 1.5e9;           // cycles/s
  double cores = 2048;            // C^V
  double flops_per_cycle = 2;     // D^V, per core
  double kappa = 1e-27;           // W/(cycles/s)^3
  double p_max = 20.0;            // W

  void validate() const;
};

struct RsuHardware {
  double f_max = 2.0e9;
  double cores = 10240;
  double flops_per_cycle = 2;
  double kappa = 1e-27;
  double b_max = 20e6;            // Hz

  void validate() const;
};

/// Forward-pass FLOPs of one transformer layer for `token_count` tokens:
/// 24*B*d*h^2 + 4*B*d^2*h.
double flops_per_layer(std::int64_t token_count, const LLMProfile& profile);

/// Seconds to run `flops` on a GPU at frequency `f`.
double layer_time(double flops, double f, double cores, double flops_per_cycle);

/// Joules to run `flops` at frequency `f` under the cubic power model
/// power = kappa * f^3.
double layer_energy(double flops, double f, double cores, double flops_per_cycle, double kappa);

/// Shannon rate in bits/s with `noise_psd` in W/Hz (noise power = noise_psd * b).
double link_rate(double power, double bandwidth, double gain, double noise_psd);

/// Uplink energy for `payload_bits` at `rate` while transmitting at `power`.
double comm_energy(double power, double payload_bits, double rate);

}  // namespace vlsplit
