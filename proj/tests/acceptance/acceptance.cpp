// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
//   1  Lagrangian gradient and Hessian against central differences
//   2  negative semidefinite rate Hessian on random draws
//   3  AO against the exhaustive oracle on tiny instances
//   4  AO trace descent on 20-vehicle / 5-RSU scenarios
//   5  completion time trend over the delay weight, and dominance
//   6  energy trend over the delay weight, and dominance
//   7  power/bandwidth fixed-point residuals
//   8  feasibility of every allocation produced above

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "support/test_support.hpp"
#include "vlsplit/orchestrator.hpp"
#include "vlsplit/subproblem2.hpp"

using namespace vlsplit;
using namespace vlsplit::testing;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Every allocation any criterion produces, with where it came from.
struct FeasibilityLog {
  int checked = 0;
  std::vector<std::string> failures;

  void check(const Scenario& s, const Allocation& a, const std::string& where) {
    ++checked;
    const std::string v = feasibility_violation(s, a);
    if (!v.empty()) failures.push_back(where + ": " + v);
  }
};

FeasibilityLog feasibility;

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

bool report(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = Clock::now();
  Verdict v = body();
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0.0 && secs > budget_s) {
    v.pass = false;
    v.detail += fmt("; over the %.0f s budget", budget_s);
  }
  std::printf("criterion %d %-28s %s  (%.1f s) %s\n", id, name, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
  std::fflush(stdout);
  return v.pass;
}

Verdict derivatives() {
  std::mt19937_64 rng(1001);
  double worst_grad = 0.0, worst_hess = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Scenario s = small_scenario(6 + i % 5, 1 + i % 3, 5000 + static_cast<std::uint64_t>(i));
    const Weights w = Weights::from_time(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const SqpState st = random_derivative_state(s, rng);
    const auto blocks = lagrangian_blocks(s);
    worst_grad = std::max(worst_grad, block_error(eval_gradient(st, s, w), fd_gradient(st, s, w), blocks));
    worst_hess = std::max(worst_hess, block_error(eval_hessian(st, s, w), fd_hessian(st, s, w), blocks));
  }
  return {worst_grad <= 1e-5 && worst_hess <= 1e-4,
          fmt("50 states: gradient error %.2e (limit 1e-5), Hessian error %.2e (limit 1e-4)", worst_grad, worst_hess)};
}

Verdict rate_hessian_sign() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < 10000; ++i) {
    const double p = std::pow(10.0, -3.0 + 4.5 * u(rng));
    const double b = std::pow(10.0, 3.0 + 5.0 * u(rng));
    const double g = std::pow(10.0, -16.0 + 10.0 * u(rng));
    const double n0 = std::pow(10.0, -18.0 + 4.0 * u(rng));
    const Eigen::Vector2d x(2.0 * u(rng) - 1.0, (2.0 * u(rng) - 1.0) * b / p);
    const double lin = b * std::abs(x(0)) + p * std::abs(x(1));
    const double den = n0 * b + g * p;
    const double scale = g * g * lin * lin / (std::log(2.0) * b * den * den);
    worst = std::max(worst, rate_quadratic_form(p, b, g, n0, x) / scale);
  }
  return {worst <= 1e-12, fmt("10000 draws: largest scaled form %.2e (must stay <= 1e-12)", worst)};
}

// Weighted total without the uplink energy term.
double compute_part(const CostBreakdown& c, const Weights& w) {
  double uplink = 0.0;
  for (double e : c.comm_energy) uplink += e;
  return c.weighted_total - w.energy * uplink;
}

Verdict oracle_gap() {
  const Weights w = Weights::from_time(0.5);
  double worst = 0.0, worst_compute = 0.0;
  int within = 0;
  const int seeds = 8;
  for (int seed = 1; seed <= seeds; ++seed) {
    const Scenario s = small_scenario(2, 1, static_cast<std::uint64_t>(seed), 4);
    const AoResult ao = alternating_optimize(s, w);
    const OracleResult oracle = brute_force_oracle(s, w);
    feasibility.check(s, ao.allocation, "oracle-gap AO seed " + std::to_string(seed));
    feasibility.check(s, oracle.allocation, "oracle-gap grid seed " + std::to_string(seed));
    const double gap = std::abs(ao.cost.weighted_total - oracle.objective) / oracle.objective;
    const double oc = compute_part(total_cost(s, oracle.allocation, w), w);
    worst_compute = std::max(worst_compute, std::abs(compute_part(ao.cost, w) - oc) / oc);
    worst = std::max(worst, gap);
    within += gap <= 0.05;
  }
  return {within == seeds, fmt("%.0f/%.0f seeds within 5%%, largest gap %.4f%%; compute part alone %.3f%% "
                               "(reported only)",
                               within, seeds, 100.0 * worst, 100.0 * worst_compute)};
}

Verdict ao_descent() {
  std::mt19937_64 rng(1004);
  int monotone = 0, converged = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Scenario s = small_scenario(20, 5, 7000 + static_cast<std::uint64_t>(i));
    const Weights w = Weights::from_time(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
    const AoResult r = alternating_optimize(s, w);
    feasibility.check(s, r.allocation, "descent scenario " + std::to_string(i));
    converged += r.trace.converged;
    bool ok = true;
    for (std::size_t k = 1; k < r.trace.rounds.size(); ++k) {
      const double prev = r.trace.rounds[k - 1].weighted_total, next = r.trace.rounds[k].weighted_total;
      const double rise = (next - prev) / std::abs(prev);
      worst = std::max(worst, rise);
      ok = ok && rise <= 1e-6;
    }
    monotone += ok;
  }
  return {monotone == 50, fmt("%.0f/50 traces non-increasing, largest relative rise %.2e, %.0f/50 converged",
                              monotone, worst, converged)};
}

// Means over seeds of one (wt, method) cell of the weight sweep.
struct Cell {
  double objective_time = 0.0, energy = 0.0, weighted_total = 0.0;
  int runs = 0, converged = 0;
};

const std::vector<double> kWeights{0.1, 0.3, 0.5, 0.7, 0.9};
const std::vector<Method> kMethods{Method::proposed, Method::rlor, Method::rrol};

std::map<std::pair<double, Method>, Cell> weight_sweep() {
  std::map<std::pair<double, Method>, Cell> cells;
  for (double wt : kWeights) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const Scenario s = generate_scenario(small_params(20, 5, seed));
      for (Method m : kMethods) {
        const MethodResult r = run_method(m, s, Weights::from_time(wt), 1000 + seed);
        feasibility.check(s, r.allocation, "sweep " + to_string(m) + " wt " + fmt("%.1f", wt) + " seed " +
                                               std::to_string(seed));
        Cell& c = cells[{wt, m}];
        c.objective_time += r.completion.objective_time;
        c.energy += r.cost.total_energy();
        c.weighted_total += r.cost.weighted_total;
        c.converged += r.converged;
        ++c.runs;
      }
    }
  }
  for (auto& [key, c] : cells) {
    c.objective_time /= c.runs;
    c.energy /= c.runs;
    c.weighted_total /= c.runs;
  }
  return cells;
}

std::map<std::pair<double, Method>, Cell> sweep_cells;

Verdict completion_trend() {
  sweep_cells = weight_sweep();
  auto& c = sweep_cells;
  bool ok = true;
  std::string detail = "proposed/rlor/rrol objective time s:";
  for (std::size_t i = 0; i < kWeights.size(); ++i) {
    const double wt = kWeights[i];
    const double p = c[{wt, Method::proposed}].objective_time;
    ok = ok && p <= c[{wt, Method::rlor}].objective_time && p <= c[{wt, Method::rrol}].objective_time;
    if (i > 0) ok = ok && p <= c[{kWeights[i - 1], Method::proposed}].objective_time;
    detail += fmt(" [%.1f] %.4g/%.4g/%.4g", wt, p, c[{wt, Method::rlor}].objective_time,
                  c[{wt, Method::rrol}].objective_time);
  }
  const double cut = 1.0 - c[{0.1, Method::proposed}].objective_time / c[{0.1, Method::rlor}].objective_time;
  detail += fmt("; reduction vs rlor at wt 0.1: %.1f%% (reported only)", 100.0 * cut);
  return {ok, detail};
}

Verdict energy_trend() {
  auto& c = sweep_cells;
  bool ok = true;
  std::string detail = "proposed/rlor/rrol energy J:";
  for (std::size_t i = 0; i < kWeights.size(); ++i) {
    const double wt = kWeights[i];
    const double p = c[{wt, Method::proposed}].energy;
    ok = ok && p <= c[{wt, Method::rrol}].energy;
    if (wt >= 0.3) ok = ok && p <= c[{wt, Method::rlor}].energy;
    if (i > 0) ok = ok && p >= c[{kWeights[i - 1], Method::proposed}].energy;
    detail += fmt(" [%.1f] %.6g/%.6g/%.6g", wt, p, c[{wt, Method::rlor}].energy, c[{wt, Method::rrol}].energy);
  }
  int runs = 0, converged = 0;
  for (const auto& [key, cell] : c) {
    runs += cell.runs;
    converged += cell.converged;
  }
  detail += fmt("; %.0f/%.0f runs converged", converged, runs);
  return {ok, detail};
}

Verdict fixed_point() {
  std::mt19937_64 rng(1007);
  int good = 0, converged = 0;
  double worst_work = 0.0, worst_nu = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Scenario s = small_scenario(20, 5, 9000 + static_cast<std::uint64_t>(i));
    const Weights w = Weights::from_time(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
    const Subproblem2Result r = solve_subproblem2(s, w);
    converged += r.diagnostics.converged;
    Allocation a = initial_allocation(s);
    for (int k = 0; k < s.vehicle_count(); ++k) {
      a.power[static_cast<std::size_t>(k)] = r.power(k);
      a.bandwidth[static_cast<std::size_t>(k)] = r.bandwidth(k);
    }
    feasibility.check(s, a, "fixed point instance " + std::to_string(i));
    double work = 0.0, nu = 0.0;
    for (int k = 0; k < s.vehicle_count(); ++k) {
      const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
      const double rate = vehicle_rate(s, k, r.power(k), r.bandwidth(k));
      work = std::max(work, std::abs(r.power(k) * payload - r.state.beta(k) * rate) / (r.power(k) * payload));
      nu = std::max(nu, std::abs(r.state.nu(k) * rate - w.energy));
    }
    worst_work = std::max(worst_work, work);
    worst_nu = std::max(worst_nu, nu);
    good += r.diagnostics.converged && work <= 1e-8 && nu <= 1e-8;
  }
  return {good == 20, fmt("%.0f/20 instances converged with residuals in range; largest |pd - beta R|/(pd) %.2e, "
                          "|nu R - w_e| %.2e (limits 1e-8); %.0f/20 converged",
                          good, worst_work, worst_nu, converged)};
}

Verdict all_feasible() {
  Verdict v{feasibility.failures.empty() && feasibility.checked > 0,
            fmt("%.0f allocations checked, %.0f violations", feasibility.checked,
                static_cast<double>(feasibility.failures.size()))};
  for (std::size_t i = 0; i < feasibility.failures.size() && i < 5; ++i) v.detail += "; " + feasibility.failures[i];
  return v;
}

}  // namespace

int main() {
  bool ok = true;
  ok &= report(1, "lagrangian-derivatives", 10.0, derivatives);
  ok &= report(2, "rate-hessian-semidefinite", 5.0, rate_hessian_sign);
  ok &= report(3, "oracle-equivalence", 120.0, oracle_gap);
  ok &= report(4, "ao-descent", 300.0, ao_descent);
  ok &= report(5, "completion-time-trend", 0.0, completion_trend);
  ok &= report(6, "energy-trend", 0.0, energy_trend);
  ok &= report(7, "power-bandwidth-fixed-point", 0.0, fixed_point);
  ok &= report(8, "feasibility", 0.0, all_feasible);
  std::printf("%s\n", ok ? "all criteria PASS" : "some criteria FAIL");
  return ok ? 0 : 1;
}
