#include "vlsplit/scenario.hpp"

#include <cmath>
#include <random>
#include <string>

#include "vlsplit/errors.hpp"

namespace vlsplit {

void ScenarioParams::validate() const {
  if (vehicle_count < 1) throw InvalidArgument("vehicle count must be >= 1");
  if (rsu_count < 1) throw InvalidArgument("rsu count must be >= 1");
  if (!(arena_side > 0.0)) throw InvalidArgument("arena side must be positive");
  if (token_min < 1 || token_max < token_min) throw InvalidArgument("invalid token-count range");
  if (!(noise_psd > 0.0)) throw InvalidArgument("noise_psd must be positive");
  if (!(shadow_sigma_db >= 0.0)) throw InvalidArgument("shadow sigma must be non-negative");
  if (!(min_distance > 0.0)) throw InvalidArgument("min_distance must be positive");
  if (!(bits_per_activation > 0.0)) throw InvalidArgument("bits_per_activation must be positive");
  llm.validate();
  vehicle.validate();
  rsu.validate();
}

double Scenario::flops(int n) const {
  return flops_per_layer(vehicles[static_cast<std::size_t>(n)].token_count, llm);
}

std::vector<int> Scenario::vehicles_on(int m) const {
  std::vector<int> out;
  for (int n = 0; n < vehicle_count(); ++n) {
    if (association[static_cast<std::size_t>(n)] == m) out.push_back(n);
  }
  return out;
}

std::vector<int> Scenario::occupied_rsus() const {
  std::vector<bool> used(rsus.size(), false);
  for (int m : association) used[static_cast<std::size_t>(m)] = true;
  std::vector<int> out;
  for (int m = 0; m < rsu_count(); ++m) {
    if (used[static_cast<std::size_t>(m)]) out.push_back(m);
  }
  return out;
}

void Scenario::validate() const {
  if (vehicles.empty()) throw InvalidArgument("scenario has no vehicles");
  if (rsus.empty()) throw InvalidArgument("scenario has no RSUs");
  llm.validate();
  if (!(noise_psd > 0.0)) throw InvalidArgument("noise_psd must be positive");
  if (gains.rows() != vehicle_count() || gains.cols() != rsu_count()) {
    throw InvalidArgument("gain matrix must be vehicles x rsus");
  }
  if (!(gains.array() > 0.0).all() || !gains.allFinite()) {
    throw InvalidArgument("all channel gains must be positive");
  }
  if (association.size() != vehicles.size()) {
    throw InvalidArgument("association must map every vehicle");
  }
  for (int m : association) {
    if (m < 0 || m >= rsu_count()) throw InvalidArgument("association references unknown RSU");
  }
  for (const auto& v : vehicles) {
    if (v.token_count < 1) throw InvalidArgument("token_count must be >= 1");
    if (!(v.payload_bits >= 1.0)) throw InvalidArgument("payload_bits must be >= 1");
    v.hardware.validate();
  }
  for (const auto& r : rsus) r.hardware.validate();
}

double channel_gain(double distance_m, double shadow_db) {
  if (!(distance_m > 0.0)) throw InvalidArgument("distance must be positive");
  const double path_loss_db = 128.1 + 37.6 * std::log10(distance_m / 1000.0) + shadow_db;
  return std::pow(10.0, -path_loss_db / 10.0);
}

std::vector<int> associate(const Eigen::MatrixXd& gains) {
  if (gains.cols() == 0) throw InvalidArgument("cannot associate without RSUs");
  std::vector<int> out(static_cast<std::size_t>(gains.rows()));
  for (Eigen::Index n = 0; n < gains.rows(); ++n) {
    Eigen::Index best = 0;
    for (Eigen::Index m = 1; m < gains.cols(); ++m) {
      if (gains(n, m) > gains(n, best)) best = m;
    }
    out[static_cast<std::size_t>(n)] = static_cast<int>(best);
  }
  return out;
}

Scenario generate_scenario(const ScenarioParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> coord(0.0, params.arena_side);
  std::uniform_int_distribution<std::int64_t> tokens(params.token_min, params.token_max);

  Scenario s;
  s.params = params;
  s.llm = params.llm;
  s.noise_psd = params.noise_psd;
  s.seed = params.seed;

  s.rsus.resize(static_cast<std::size_t>(params.rsu_count));
  for (auto& r : s.rsus) {
    r.position = {coord(rng), coord(rng)};
    r.hardware = params.rsu;
  }
  s.vehicles.resize(static_cast<std::size_t>(params.vehicle_count));
  for (auto& v : s.vehicles) {
    v.position = {coord(rng), coord(rng)};
    v.token_count = tokens(rng);
    v.payload_bits = params.paper_literal_payload
                         ? static_cast<double>(v.token_count)
                         : static_cast<double>(params.llm.batch_size) *
                               static_cast<double>(v.token_count) *
                               static_cast<double>(params.llm.hidden_size) *
                               params.bits_per_activation;
    v.hardware = params.vehicle;
  }

  // Shadowing is drawn once per (vehicle, RSU) pair.
  std::normal_distribution<double> shadow(0.0, params.shadow_sigma_db > 0.0 ? params.shadow_sigma_db : 1.0);
  s.gains.resize(params.vehicle_count, params.rsu_count);
  for (int n = 0; n < params.vehicle_count; ++n) {
    for (int m = 0; m < params.rsu_count; ++m) {
      const auto& vp = s.vehicles[static_cast<std::size_t>(n)].position;
      const auto& rp = s.rsus[static_cast<std::size_t>(m)].position;
      const double dist = std::max(std::hypot(vp.x - rp.x, vp.y - rp.y), params.min_distance);
      const double shadow_db = params.shadow_sigma_db > 0.0 ? shadow(rng) : 0.0;
      s.gains(n, m) = channel_gain(dist, shadow_db);
    }
  }
  s.association = associate(s.gains);
  s.validate();
  return s;
}

Scenario restrict_to(const Scenario& scenario, const std::vector<int>& vehicle_ids) {
  Scenario out = scenario;
  out.vehicles.clear();
  out.association.clear();
  out.gains.resize(static_cast<Eigen::Index>(vehicle_ids.size()), scenario.gains.cols());
  for (std::size_t i = 0; i < vehicle_ids.size(); ++i) {
    const auto n = static_cast<std::size_t>(vehicle_ids[i]);
    out.vehicles.push_back(scenario.vehicles.at(n));
    out.association.push_back(scenario.association.at(n));
    out.gains.row(static_cast<Eigen::Index>(i)) = scenario.gains.row(static_cast<Eigen::Index>(n));
  }
  out.params.vehicle_count = static_cast<int>(vehicle_ids.size());
  return out;
}

}  // namespace vlsplit
