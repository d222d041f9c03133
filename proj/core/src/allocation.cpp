#include "vlsplit/allocation.hpp"

#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

#include "vlsplit/errors.hpp"

namespace vlsplit {

namespace {

std::string describe(const char* what, int index, double value, double bound) {
  std::ostringstream os;
  os.precision(17);
  os << what << "[" << index << "] = " << value << " violates bound " << bound;
  return os.str();
}

struct Violation {
  std::string constraint;
  std::string detail;
};

std::optional<Violation> find_violation(const Scenario& s, const Allocation& a,
                                        const FeasibilityTolerance& tol) {
  const auto n_veh = static_cast<std::size_t>(s.vehicle_count());
  if (a.layers_local.size() != n_veh || a.power.size() != n_veh || a.bandwidth.size() != n_veh ||
      a.vehicle_frequency.size() != n_veh || a.rsu_frequency.size() != n_veh) {
    return Violation{"shape", "allocation vectors must have one entry per vehicle"};
  }
  const int layers = s.layer_count();
  for (int n = 0; n < s.vehicle_count(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const auto& hw = s.vehicles[i].hardware;
    if (a.layers_local[i] < 1 || a.layers_local[i] > layers) {
      return Violation{"layers", describe("alpha", n, a.layers_local[i], layers)};
    }
    if (!(a.power[i] >= 0.0) || a.power[i] > hw.p_max * (1.0 + tol.bound_rel)) {
      return Violation{"power", describe("p", n, a.power[i], hw.p_max)};
    }
    if (!(a.vehicle_frequency[i] > 0.0) || a.vehicle_frequency[i] > hw.f_max * (1.0 + tol.bound_rel)) {
      return Violation{"vehicle_frequency", describe("f", n, a.vehicle_frequency[i], hw.f_max)};
    }
    if (!(a.bandwidth[i] > 0.0)) {
      return Violation{"bandwidth", describe("b", n, a.bandwidth[i], 0.0)};
    }
    if (!(a.rsu_frequency[i] > 0.0)) {
      return Violation{"rsu_frequency", describe("f_rsu", n, a.rsu_frequency[i], 0.0)};
    }
  }
  for (int m : s.occupied_rsus()) {
    const auto& hw = s.rsus[static_cast<std::size_t>(m)].hardware;
    double b_sum = 0.0;
    double f_sum = 0.0;
    for (int n : s.vehicles_on(m)) {
      b_sum += a.bandwidth[static_cast<std::size_t>(n)];
      f_sum += a.rsu_frequency[static_cast<std::size_t>(n)];
    }
    if (std::abs(b_sum - hw.b_max) > tol.equality_rel * hw.b_max) {
      return Violation{"bandwidth", describe("sum_b@rsu", m, b_sum, hw.b_max)};
    }
    if (std::abs(f_sum - hw.f_max) > tol.equality_rel * hw.f_max) {
      return Violation{"rsu_frequency", describe("sum_f@rsu", m, f_sum, hw.f_max)};
    }
  }
  return std::nullopt;
}

}  // namespace

double CostBreakdown::total_time() const {
  return std::accumulate(local_time.begin(), local_time.end(), 0.0) +
         std::accumulate(remote_time.begin(), remote_time.end(), 0.0);
}

double CostBreakdown::total_energy() const {
  return std::accumulate(local_energy.begin(), local_energy.end(), 0.0) +
         std::accumulate(comm_energy.begin(), comm_energy.end(), 0.0) +
         std::accumulate(remote_energy.begin(), remote_energy.end(), 0.0);
}

std::string feasibility_violation(const Scenario& scenario, const Allocation& alloc,
                                  const FeasibilityTolerance& tol) {
  auto v = find_violation(scenario, alloc, tol);
  return v ? v->constraint + ": " + v->detail : std::string{};
}

void check_feasibility(const Scenario& scenario, const Allocation& alloc, const FeasibilityTolerance& tol) {
  if (auto v = find_violation(scenario, alloc, tol)) throw FeasibilityError(v->constraint, v->detail);
}

double vehicle_rate(const Scenario& scenario, int n, double power, double bandwidth) {
  return link_rate(power, bandwidth, scenario.link_gain(n), scenario.noise_psd);
}

CostBreakdown total_cost(const Scenario& s, const Allocation& a, const Weights& w) {
  w.validate();
  check_feasibility(s, a);
  const int layers = s.layer_count();
  const auto n_veh = static_cast<std::size_t>(s.vehicle_count());

  CostBreakdown c;
  c.local_time.resize(n_veh);
  c.local_energy.resize(n_veh);
  c.comm_energy.resize(n_veh);
  c.vehicle_cost.resize(n_veh);
  c.remote_time.assign(s.rsus.size(), 0.0);
  c.remote_energy.assign(s.rsus.size(), 0.0);
  c.rsu_cost.assign(s.rsus.size(), 0.0);

  for (int n = 0; n < s.vehicle_count(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const auto& veh = s.vehicles[i];
    const auto& hw = veh.hardware;
    const double psi = s.flops(n);
    const double alpha = a.layers_local[i];
    const double f = a.vehicle_frequency[i];

    c.local_time[i] = alpha * layer_time(psi, f, hw.cores, hw.flops_per_cycle);
    c.local_energy[i] = alpha * layer_energy(psi, f, hw.cores, hw.flops_per_cycle, hw.kappa);
    const double rate = vehicle_rate(s, n, a.power[i], a.bandwidth[i]);
    c.comm_energy[i] = comm_energy(a.power[i], veh.payload_bits, rate);
    c.vehicle_cost[i] = w.time * c.local_time[i] + w.energy * c.local_energy[i] + w.energy * c.comm_energy[i];

    const auto m = static_cast<std::size_t>(s.association[i]);
    const auto& rhw = s.rsus[m].hardware;
    const double offloaded = layers - alpha;
    const double fr = a.rsu_frequency[i];
    const double t = offloaded * layer_time(psi, fr, rhw.cores, rhw.flops_per_cycle);
    const double e = offloaded * layer_energy(psi, fr, rhw.cores, rhw.flops_per_cycle, rhw.kappa);
    c.remote_time[m] += t;
    c.remote_energy[m] += e;
    c.rsu_cost[m] += w.time * t + w.energy * e;
  }
  c.weighted_total = std::accumulate(c.vehicle_cost.begin(), c.vehicle_cost.end(), 0.0) +
                     std::accumulate(c.rsu_cost.begin(), c.rsu_cost.end(), 0.0);
  return c;
}

}  // namespace vlsplit
