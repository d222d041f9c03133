#include "vlsplit/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "vlsplit/errors.hpp"

namespace vlsplit {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<double> to_std(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

// Per-layer weighted cost of vehicle n on the vehicle (local) or its RSU.
double local_layer_cost(const Scenario& s, const Weights& w, int n, double f) {
  const auto& hw = s.vehicles[static_cast<std::size_t>(n)].hardware;
  const double psi = s.flops(n);
  return w.time * layer_time(psi, f, hw.cores, hw.flops_per_cycle) +
         w.energy * layer_energy(psi, f, hw.cores, hw.flops_per_cycle, hw.kappa);
}

double remote_layer_cost(const Scenario& s, const Weights& w, int n, double f) {
  const auto& hw = s.rsu_of(n);
  const double psi = s.flops(n);
  return w.time * layer_time(psi, f, hw.cores, hw.flops_per_cycle) +
         w.energy * layer_energy(psi, f, hw.cores, hw.flops_per_cycle, hw.kappa);
}

// floor + (max - floor) * i / (points - 1), i = 0..points-1.
std::vector<double> box_grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return g;
}

// All ways to write `units` as an ordered sum of `parts` positive integers.
void for_each_composition(int units, int parts, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> c(static_cast<std::size_t>(parts), 1);
  std::function<void(int, int)> rec = [&](int idx, int left) {
    if (idx == parts - 1) {
      c[static_cast<std::size_t>(idx)] = left;
      visit(c);
      return;
    }
    const int remaining = parts - idx - 1;
    for (int k = 1; k <= left - remaining; ++k) {
      c[static_cast<std::size_t>(idx)] = k;
      rec(idx + 1, left - k);
    }
  };
  rec(0, units);
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

Allocation initial_allocation(const Scenario& s) {
  const auto start = initial_sqp_state(s);
  const auto [p, b] = initial_power_bandwidth(s);
  Allocation a;
  for (Index k = 0; k < start.alpha.size(); ++k) a.layers_local.push_back(round_layers(start.alpha(k), s.layer_count()));
  a.power = to_std(p);
  a.bandwidth = to_std(b);
  a.vehicle_frequency = to_std(start.vehicle_freq);
  a.rsu_frequency = to_std(start.rsu_freq);
  return a;
}

AoResult alternating_optimize(const Scenario& s, const Weights& w, const AoOptions& options) {
  s.validate();
  w.validate();
  if (options.max_rounds < 1) throw InvalidArgument("AO needs at least one round");
  AoResult res;
  Allocation current = initial_allocation(s);
  double current_total = total_cost(s, current, w).weighted_total;
  res.trace.rounds.push_back({0, current_total});
  res.allocation = current;

  for (int round = 1; round <= options.max_rounds; ++round) {
    AoRound r;
    r.round = round;
    auto t0 = Clock::now();
    const Subproblem1Result sp1 = solve_subproblem1(s, w, options.sqp, sqp_state_from(s, current));
    r.sp1_ms = elapsed_ms(t0);
    r.sp1_converged = sp1.diagnostics.converged && sp1.repair_diagnostics.converged;
    r.sp1_residual = sp1.repair_diagnostics.residual;

    Allocation next = current;
    next.layers_local = sp1.layers_local;
    next.vehicle_frequency = to_std(sp1.vehicle_freq);
    next.rsu_frequency = to_std(sp1.rsu_freq);

    t0 = Clock::now();
    const Subproblem2Result sp2 =
        solve_subproblem2(s, w, options.frac, std::make_pair(to_eigen(current.power), to_eigen(current.bandwidth)));
    r.sp2_ms = elapsed_ms(t0);
    r.sp2_converged = sp2.diagnostics.converged;
    r.sp2_residual = sp2.diagnostics.residual;
    next.power = to_std(sp2.power);
    next.bandwidth = to_std(sp2.bandwidth);

    const double next_total = total_cost(s, next, w).weighted_total;
    r.weighted_total = next_total;
    res.trace.rounds.push_back(r);
    const double change = std::abs(current_total - next_total) / std::max(std::abs(next_total), 1e-300);
    if (next_total <= current_total) {
      current = std::move(next);
      current_total = next_total;
    }
    if (change <= options.relative_tolerance) {
      res.trace.converged = r.sp1_converged && r.sp2_converged;
      if (!res.trace.converged) res.trace.message = "stopping rule met but a sub-solver did not converge";
      break;
    }
  }
  if (res.trace.message.empty() && !res.trace.converged) res.trace.message = "AO round limit reached";
  res.allocation = current;
  res.cost = total_cost(s, current, w);
  return res;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::rlor: return "rlor";
    case Method::rrol: return "rrol";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "proposed") return Method::proposed;
  if (name == "rlor") return Method::rlor;
  if (name == "rrol") return Method::rrol;
  throw InvalidArgument("unknown method '" + name + "' (expected proposed, rlor or rrol)");
}

std::vector<int> best_layers_for(const Scenario& s, const Weights& w, const std::vector<double>& vf,
                                 const std::vector<double>& rf) {
  const int L = s.layer_count();
  std::vector<int> layers(static_cast<std::size_t>(s.vehicle_count()));
  for (int n = 0; n < s.vehicle_count(); ++n) {
    const double local = local_layer_cost(s, w, n, vf[static_cast<std::size_t>(n)]);
    const double remote = remote_layer_cost(s, w, n, rf[static_cast<std::size_t>(n)]);
    int best = 1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (int a = 1; a <= L; ++a) {
      const double c = a * local + (L - a) * remote;
      if (c < best_cost) {
        best_cost = c;
        best = a;
      }
    }
    layers[static_cast<std::size_t>(n)] = best;
  }
  return layers;
}

Allocation baseline_allocate(Method kind, const Scenario& s, const Weights& w, std::uint64_t seed,
                             const AoOptions& options, bool* converged) {
  s.validate();
  w.validate();
  std::mt19937_64 rng(seed);
  const int L = s.layer_count();
  const auto nveh = static_cast<std::size_t>(s.vehicle_count());
  Allocation a;

  if (kind == Method::rlor) {
    std::uniform_int_distribution<int> pick(1, L);
    a.layers_local.resize(nveh);
    for (auto& l : a.layers_local) l = pick(rng);
    const Subproblem1Result sp1 = optimize_frequencies(s, w, a.layers_local, options.sqp);
    const Subproblem2Result sp2 = solve_subproblem2(s, w, options.frac);
    a.vehicle_frequency = to_std(sp1.vehicle_freq);
    a.rsu_frequency = to_std(sp1.rsu_freq);
    a.power = to_std(sp2.power);
    a.bandwidth = to_std(sp2.bandwidth);
    if (converged) *converged = sp1.repair_diagnostics.converged && sp2.diagnostics.converged;
    return a;
  }
  if (kind != Method::rrol) throw InvalidArgument("baseline_allocate expects rlor or rrol");

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const VariableFloors& floors = options.sqp.floors;
  a.power.resize(nveh);
  a.vehicle_frequency.resize(nveh);
  std::vector<double> b_share(nveh), f_share(nveh);
  for (std::size_t n = 0; n < nveh; ++n) {
    const auto& hw = s.vehicles[n].hardware;
    a.power[n] = floors.power(hw) + (hw.p_max - floors.power(hw)) * unit(rng);
    a.vehicle_frequency[n] = floors.vehicle_frequency(hw) + (hw.f_max - floors.vehicle_frequency(hw)) * unit(rng);
    b_share[n] = unit(rng);
    f_share[n] = unit(rng);
  }
  // Shares of the budget above the floors, rescaled per RSU so the sums are exact.
  a.bandwidth.resize(nveh);
  a.rsu_frequency.resize(nveh);
  for (int m : s.occupied_rsus()) {
    const auto& hw = s.rsus[static_cast<std::size_t>(m)].hardware;
    const auto members = s.vehicles_on(m);
    const double k = static_cast<double>(members.size());
    double bs = 0.0, fs = 0.0;
    for (int n : members) {
      bs += b_share[static_cast<std::size_t>(n)];
      fs += f_share[static_cast<std::size_t>(n)];
    }
    const double b_free = hw.b_max - k * floors.bandwidth_hz;
    const double f_free = hw.f_max - k * floors.rsu_frequency(hw);
    for (int n : members) {
      const auto i = static_cast<std::size_t>(n);
      a.bandwidth[i] = floors.bandwidth_hz + (bs > 0.0 ? b_free * b_share[i] / bs : b_free / k);
      a.rsu_frequency[i] = floors.rsu_frequency(hw) + (fs > 0.0 ? f_free * f_share[i] / fs : f_free / k);
    }
  }
  a.layers_local = best_layers_for(s, w, a.vehicle_frequency, a.rsu_frequency);
  if (converged) *converged = true;
  return a;
}

double oracle_evaluations(const Scenario& s, const GridSpec& grid) {
  const double G = grid.box_points;
  const double L = s.layer_count();
  double total = 0.0;
  for (int m : s.occupied_rsus()) {
    const int k = static_cast<int>(s.vehicles_on(m).size());
    const double comps = binomial(grid.simplex_units - 1, k - 1);
    // compute block: f grid per vehicle, then every split for every f_rsu composition;
    // uplink block: every p for every bandwidth composition.
    total += k * G + comps * k * L + comps * k * G;
  }
  return total;
}

OracleResult brute_force_oracle(const Scenario& s, const Weights& w, const GridSpec& grid,
                                const VariableFloors& floors) {
  s.validate();
  w.validate();
  if (grid.box_points < 2) throw InvalidArgument("oracle grid needs at least 2 points per axis");
  for (int m : s.occupied_rsus()) {
    if (static_cast<int>(s.vehicles_on(m).size()) > grid.simplex_units) {
      throw InvalidArgument("simplex_units must be at least the number of vehicles per RSU");
    }
  }
  OracleResult out;
  out.evaluations = oracle_evaluations(s, grid);
  if (out.evaluations > grid.max_evaluations) {
    throw InvalidArgument("oracle search needs " + std::to_string(out.evaluations) +
                          " evaluations, above the budget; reduce vehicles, layers or grid points");
  }
  const int L = s.layer_count();
  const auto nveh = static_cast<std::size_t>(s.vehicle_count());
  Allocation& a = out.allocation;
  a.layers_local.assign(nveh, 1);
  a.power.assign(nveh, 0.0);
  a.bandwidth.assign(nveh, 0.0);
  a.vehicle_frequency.assign(nveh, 0.0);
  a.rsu_frequency.assign(nveh, 0.0);

  // Best local per-layer cost on the f grid (alpha >= 1 multiplies it, so the
  // f choice does not depend on alpha).
  std::vector<double> local_best(nveh);
  for (int n = 0; n < s.vehicle_count(); ++n) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(n)].hardware;
    double best = std::numeric_limits<double>::infinity();
    for (double f : box_grid(floors.vehicle_frequency(hw), hw.f_max, grid.box_points)) {
      const double c = local_layer_cost(s, w, n, f);
      if (c < best) {
        best = c;
        a.vehicle_frequency[static_cast<std::size_t>(n)] = f;
      }
    }
    local_best[static_cast<std::size_t>(n)] = best;
  }

  const double K = grid.simplex_units;
  for (int m : s.occupied_rsus()) {
    const auto& rhw = s.rsus[static_cast<std::size_t>(m)].hardware;
    const auto members = s.vehicles_on(m);
    const int k = static_cast<int>(members.size());

    double best_compute = std::numeric_limits<double>::infinity();
    for_each_composition(grid.simplex_units, k, [&](const std::vector<int>& c) {
      double total = 0.0;
      std::vector<int> split(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const int n = members[static_cast<std::size_t>(i)];
        const double fr = rhw.f_max * c[static_cast<std::size_t>(i)] / K;
        const double remote = remote_layer_cost(s, w, n, fr);
        double best = std::numeric_limits<double>::infinity();
        for (int alpha = 1; alpha <= L; ++alpha) {
          const double v = alpha * local_best[static_cast<std::size_t>(n)] + (L - alpha) * remote;
          if (v < best) {
            best = v;
            split[static_cast<std::size_t>(i)] = alpha;
          }
        }
        total += best;
      }
      if (total < best_compute) {
        best_compute = total;
        for (int i = 0; i < k; ++i) {
          const auto n = static_cast<std::size_t>(members[static_cast<std::size_t>(i)]);
          a.rsu_frequency[n] = rhw.f_max * c[static_cast<std::size_t>(i)] / K;
          a.layers_local[n] = split[static_cast<std::size_t>(i)];
        }
      }
    });

    double best_uplink = std::numeric_limits<double>::infinity();
    for_each_composition(grid.simplex_units, k, [&](const std::vector<int>& c) {
      double total = 0.0;
      std::vector<double> power(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) {
        const int n = members[static_cast<std::size_t>(i)];
        const auto& hw = s.vehicles[static_cast<std::size_t>(n)].hardware;
        const double b = rhw.b_max * c[static_cast<std::size_t>(i)] / K;
        double best = std::numeric_limits<double>::infinity();
        for (double p : box_grid(floors.power(hw), hw.p_max, grid.box_points)) {
          const double e = w.energy * comm_energy(p, s.vehicles[static_cast<std::size_t>(n)].payload_bits,
                                                  vehicle_rate(s, n, p, b));
          if (e < best) {
            best = e;
            power[static_cast<std::size_t>(i)] = p;
          }
        }
        total += best;
      }
      if (total < best_uplink) {
        best_uplink = total;
        for (int i = 0; i < k; ++i) {
          const auto n = static_cast<std::size_t>(members[static_cast<std::size_t>(i)]);
          a.bandwidth[n] = rhw.b_max * c[static_cast<std::size_t>(i)] / K;
          a.power[n] = power[static_cast<std::size_t>(i)];
        }
      }
    });
  }
  out.objective = total_cost(s, a, w).weighted_total;
  return out;
}

CompletionTime completion_time_metric(const Scenario& s, const Allocation& a) {
  check_feasibility(s, a);
  const int L = s.layer_count();
  CompletionTime ct;
  for (int n = 0; n < s.vehicle_count(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const auto& hw = s.vehicles[i].hardware;
    const auto& rhw = s.rsu_of(n);
    const double psi = s.flops(n);
    const double local = a.layers_local[i] * layer_time(psi, a.vehicle_frequency[i], hw.cores, hw.flops_per_cycle);
    const double remote =
        (L - a.layers_local[i]) * layer_time(psi, a.rsu_frequency[i], rhw.cores, rhw.flops_per_cycle);
    const double uplink = s.vehicles[i].payload_bits / vehicle_rate(s, n, a.power[i], a.bandwidth[i]);
    ct.objective_time += local + remote;
    ct.end_to_end += local + uplink + remote;
  }
  ct.end_to_end /= static_cast<double>(s.vehicle_count());
  return ct;
}

MethodResult run_method(Method method, const Scenario& s, const Weights& w, std::uint64_t seed,
                        const AoOptions& options) {
  MethodResult r;
  r.method = method;
  if (method == Method::proposed) {
    AoResult ao = alternating_optimize(s, w, options);
    r.allocation = std::move(ao.allocation);
    r.trace = std::move(ao.trace);
    r.converged = r.trace.converged;
  } else {
    r.allocation = baseline_allocate(method, s, w, seed, options, &r.converged);
  }
  r.cost = total_cost(s, r.allocation, w);
  r.completion = completion_time_metric(s, r.allocation);
  return r;
}

}  // namespace vlsplit
