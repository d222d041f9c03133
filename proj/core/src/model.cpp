#include "vlsplit/model.hpp"

#include <cmath>
#include <string>

#include "vlsplit/errors.hpp"

namespace vlsplit {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(std::string(what) + " must be positive and finite, got " +
                          std::to_string(value));
  }
}

}  // namespace

void LLMProfile::validate() const {
  if (hidden_size < 1) throw InvalidArgument("hidden_size must be >= 1");
  if (layer_count < 1) throw InvalidArgument("layer_count must be >= 1");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
}

Weights Weights::from_time(double time_weight) {
  Weights w{time_weight, 1.0 - time_weight};
  w.validate();
  return w;
}

void Weights::validate() const {
  if (!(time >= 0.0) || !(energy >= 0.0)) {
    throw InvalidArgument("weights must be non-negative");
  }
  if (std::abs(time + energy - 1.0) > 1e-12) {
    throw InvalidArgument("weights must sum to 1");
  }
}

void VehicleHardware::validate() const {
  require_positive(f_max, "vehicle f_max");
  require_positive(cores, "vehicle cores");
  require_positive(flops_per_cycle, "vehicle flops_per_cycle");
  require_positive(kappa, "vehicle kappa");
  require_positive(p_max, "vehicle p_max");
}

void RsuHardware::validate() const {
  require_positive(f_max, "rsu f_max");
  require_positive(cores, "rsu cores");
  require_positive(flops_per_cycle, "rsu flops_per_cycle");
  require_positive(kappa, "rsu kappa");
  require_positive(b_max, "rsu b_max");
}

double flops_per_layer(std::int64_t token_count, const LLMProfile& profile) {
  if (token_count < 1) throw InvalidArgument("token_count must be >= 1");
  profile.validate();
  const double b = static_cast<double>(profile.batch_size);
  const double d = static_cast<double>(token_count);
  const double h = static_cast<double>(profile.hidden_size);
  return 24.0 * b * d * h * h + 4.0 * b * d * d * h;
}

double layer_time(double flops, double f, double cores, double flops_per_cycle) {
  if (!(flops >= 0.0)) throw InvalidArgument("flops must be non-negative");
  require_positive(f, "frequency");
  require_positive(cores, "cores");
  require_positive(flops_per_cycle, "flops_per_cycle");
  return flops / (f * cores * flops_per_cycle);
}

double layer_energy(double flops, double f, double cores, double flops_per_cycle, double kappa) {
  if (!(flops >= 0.0)) throw InvalidArgument("flops must be non-negative");
  require_positive(f, "frequency");
  require_positive(cores, "cores");
  require_positive(flops_per_cycle, "flops_per_cycle");
  require_positive(kappa, "kappa");
  return kappa * f * f * flops / (cores * flops_per_cycle);
}

double link_rate(double power, double bandwidth, double gain, double noise_psd) {
  if (!(power >= 0.0)) throw InvalidArgument("power must be non-negative");
  require_positive(bandwidth, "bandwidth");
  require_positive(gain, "gain");
  require_positive(noise_psd, "noise_psd");
  return bandwidth * std::log2(1.0 + gain * power / (noise_psd * bandwidth));
}

double comm_energy(double power, double payload_bits, double rate) {
  if (!(rate > 0.0)) throw InfeasibleLink("link rate must be positive");
  if (!(power >= 0.0)) throw InvalidArgument("power must be non-negative");
  if (!(payload_bits >= 0.0)) throw InvalidArgument("payload must be non-negative");
  return power * payload_bits / rate;
}

}  // namespace vlsplit
