#include <random>

#include <gtest/gtest.h>

#include "support/test_support.hpp"
#include "vlsplit/errors.hpp"
#include "vlsplit/subproblem1.hpp"
#include "vlsplit/subproblem2.hpp"

using namespace vlsplit;
using namespace vlsplit::testing;
using Eigen::VectorXd;

namespace {

// Identical vehicles with identical links on a single RSU.
Scenario symmetric_scenario(int vehicles) {
  Scenario s = small_scenario(vehicles, 1, 3);
  for (auto& v : s.vehicles) v = s.vehicles[0];
  s.gains.setConstant(s.gains(0, 0));
  return s;
}

double objective_of(const Subproblem1Result& r, const Scenario& s, const Weights& w) {
  SqpState st = initial_sqp_state(s);
  for (int k = 0; k < s.vehicle_count(); ++k) st.alpha(k) = r.layers_local[static_cast<std::size_t>(k)];
  st.vehicle_freq = r.vehicle_freq;
  st.rsu_freq = r.rsu_freq;
  return eval_objective(st, s, w);
}

void expect_sqp_feasible(const Scenario& s, const VectorXd& alpha, const VectorXd& f, const VectorXd& fr) {
  const SqpOptions opts;
  for (int k = 0; k < s.vehicle_count(); ++k) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    EXPECT_GE(alpha(k), 1.0 - 1e-8);
    EXPECT_LE(alpha(k), s.layer_count() + 1e-8);
    EXPECT_LE(f(k), hw.f_max * (1.0 + 1e-8));
    EXPECT_GE(f(k), opts.floors.vehicle_frequency(hw) * (1.0 - 1e-8));
    EXPECT_GE(fr(k), opts.floors.rsu_frequency(s.rsu_of(k)) * (1.0 - 1e-8));
  }
  for (int m : s.occupied_rsus()) {
    double sum = 0.0;
    for (int k : s.vehicles_on(m)) sum += fr(k);
    const double cap = s.rsus[static_cast<std::size_t>(m)].hardware.f_max;
    EXPECT_LE(std::abs(sum - cap), 1e-6 * cap);
  }
}

}  // namespace

TEST(Sp1Derivatives, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) {
    const Scenario s = small_scenario(6, 2, 100 + i);
    const Weights w = Weights::from_time(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const SqpState st = random_derivative_state(s, rng);
    const double err = block_error(eval_gradient(st, s, w), fd_gradient(st, s, w), lagrangian_blocks(s));
    EXPECT_LE(err, 1e-5) << "state " << i;
  }
}

TEST(Sp1Derivatives, HessianMatchesFiniteDifferences) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 20; ++i) {
    const Scenario s = small_scenario(5, 2, 200 + i);
    const Weights w = Weights::from_time(std::uniform_real_distribution<double>(0.0, 1.0)(rng));
    const SqpState st = random_derivative_state(s, rng);
    const Eigen::MatrixXd H = eval_hessian(st, s, w);
    EXPECT_LE(block_error(H, fd_hessian(st, s, w), lagrangian_blocks(s)), 1e-4) << "state " << i;
    EXPECT_EQ((H - H.transpose()).lpNorm<Eigen::Infinity>(), 0.0);
    for (int k = 0; k < s.vehicle_count(); ++k) EXPECT_EQ(H(k, k), 0.0);
  }
}

TEST(Sp1Derivatives, ConstraintCrossTerms) {
  const Scenario s = small_scenario(3, 2, 5);
  std::mt19937_64 rng(1);
  const SqpState st = random_state(s, rng);
  const Eigen::MatrixXd H = eval_hessian(st, s, Weights::from_time(0.5));
  const int n = s.vehicle_count();
  for (int k = 0; k < n; ++k) {
    EXPECT_EQ(H(k, 3 * n + k), -1.0);      // alpha, lambda
    EXPECT_EQ(H(k, 4 * n + k), 1.0);       // alpha, mu
    EXPECT_EQ(H(n + k, 5 * n + k), 1.0);   // f, gamma
    EXPECT_EQ(H(2 * n + k, 6 * n + s.association[static_cast<std::size_t>(k)]), 1.0);
  }
}

TEST(Sp1Derivatives, ZeroMultipliersGiveObjectiveGradient) {
  const Scenario s = small_scenario(4, 2, 6);
  std::mt19937_64 rng(2);
  const SqpState st = random_state(s, rng, false);
  const Weights w = Weights::from_time(0.6);
  const VectorXd g = eval_gradient(st, s, w);
  const int n = s.vehicle_count();
  for (int i = 0; i < 3 * n; ++i) {
    SqpState p = st, m = st;
    VectorXd zp = pack_lagrangian_point(st), zm = zp;
    const double h = fd_step(zp(i));
    zp(i) += h;
    zm(i) -= h;
    p = unpack_lagrangian_point(zp, s);
    m = unpack_lagrangian_point(zm, s);
    const double fd = (eval_objective(p, s, w) - eval_objective(m, s, w)) / (2 * h);
    EXPECT_LE(rel_err(g(i), fd), 1e-5) << i;
  }
}

TEST(Sp1Derivatives, LambdaPartialVanishesAtLowerBound) {
  const Scenario s = small_scenario(3, 1, 7);
  SqpState st = initial_sqp_state(s);
  st.alpha.setOnes();
  const VectorXd g = eval_gradient(st, s, Weights::from_time(0.5));
  for (int k = 0; k < 3; ++k) EXPECT_EQ(g(3 * 3 + k), 0.0);
}

TEST(Sp1Objective, DecompositionWithUplinkEnergy) {
  const Scenario s = small_scenario(8, 3, 9);
  std::mt19937_64 rng(3);
  const Weights w = Weights::from_time(0.35);
  for (int trial = 0; trial < 5; ++trial) {
    SqpState st = random_state(s, rng, false);
    std::vector<int> layers;
    for (int k = 0; k < s.vehicle_count(); ++k) {
      layers.push_back(static_cast<int>(std::round(st.alpha(k))));
      st.alpha(k) = layers.back();
    }
    const auto [p, b] = initial_power_bandwidth(s);
    const Allocation a = to_allocation(st, layers, {p.data(), p.data() + p.size()}, {b.data(), b.data() + b.size()});
    const double lhs = eval_objective(st, s, w) + comm_objective(p, b, s, w);
    EXPECT_LE(rel_err(lhs, total_cost(s, a, w).weighted_total), 1e-10);
  }
}

TEST(Sp1Objective, FullLocalHasNoRsuTerm) {
  const Scenario s = small_scenario(4, 2, 10);
  SqpState st = initial_sqp_state(s);
  st.alpha.setConstant(s.layer_count());
  const Weights w = Weights::from_time(0.5);
  double local = 0.0;
  for (int k = 0; k < s.vehicle_count(); ++k) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    const double psi = s.flops(k);
    local += s.layer_count() * (w.time * layer_time(psi, st.vehicle_freq(k), hw.cores, hw.flops_per_cycle) +
                                w.energy * layer_energy(psi, st.vehicle_freq(k), hw.cores, hw.flops_per_cycle, hw.kappa));
  }
  EXPECT_LE(rel_err(eval_objective(st, s, w), local), 1e-12);
  st.vehicle_freq(0) = 0.0;
  EXPECT_THROW(eval_objective(st, s, w), InvalidArgument);
}

TEST(Sp1Step, MeritNonIncreasingAndIteratesFeasible) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario s = small_scenario(10, 3, 300 + seed);
    const Weights w = Weights::from_time(0.1 * static_cast<double>(seed % 10));
    SqpState st = initial_sqp_state(s);
    for (int it = 0; it < 30; ++it) {
      auto [next, diag] = sqp_step(st, s, w);
      if (!diag.line_search_failed) {
        EXPECT_LE(diag.merit_after, diag.merit_before * (1 + 1e-12)) << seed;
      }
      expect_sqp_feasible(s, next.alpha, next.vehicle_freq, next.rsu_freq);
      if (diag.kkt_residual <= 1e-9) break;
      st = std::move(next);
    }
  }
}

TEST(Sp1Step, FullStepKeepsLayersInRange) {
  SqpOptions opts;
  opts.full_step = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = small_scenario(6, 2, 400 + seed);
    std::mt19937_64 rng(seed);
    SqpState st = random_state(s, rng, false);
    for (int it = 0; it < 10; ++it) {
      st = sqp_step(st, s, Weights::from_time(0.5), opts).first;
      for (int k = 0; k < s.vehicle_count(); ++k) {
        EXPECT_GE(st.alpha(k), 1.0 - 1e-9);
        EXPECT_LE(st.alpha(k), s.layer_count() + 1e-9);
      }
    }
  }
}

TEST(Sp1Step, KktPointIsAFixedPoint) {
  const Scenario s = small_scenario(8, 2, 11);
  const Weights w = Weights::from_time(0.5);
  SqpOptions tight;
  tight.kkt_tolerance = 1e-12;
  const Subproblem1Result r = solve_subproblem1(s, w, tight);
  SqpState st = r.relaxed;
  StepDiagnostics diag;
  for (int it = 0; it < 5; ++it) std::tie(st, diag) = sqp_step(st, s, w, tight);
  const auto [next, last] = sqp_step(st, s, w, tight);
  EXPECT_LE(last.step_norm, 1e-8);
  EXPECT_LE((next.alpha - st.alpha).lpNorm<Eigen::Infinity>(), 1e-8 * s.layer_count());
  EXPECT_LE(((next.vehicle_freq - st.vehicle_freq).array() / st.vehicle_freq.array()).abs().maxCoeff(), 1e-8);
  EXPECT_LE(((next.rsu_freq - st.rsu_freq).array() / st.rsu_freq.array()).abs().maxCoeff(), 1e-8);
}

TEST(Sp1Solve, SingleLinkMatchesExhaustiveSearch) {
  for (double wt : {0.1, 0.5, 0.9}) {
    const Scenario s = small_scenario(1, 1, 12);
    const Weights w = Weights::from_time(wt);
    const Subproblem1Result r = solve_subproblem1(s, w);
    const auto& hw = s.vehicles[0].hardware;
    const auto& rhw = s.rsus[0].hardware;
    const double psi = s.flops(0), lo = SqpOptions{}.floors.vehicle_frequency(hw);
    double best_local = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
      const double f = lo + (hw.f_max - lo) * i / 9999.0;
      best_local = std::min(best_local, w.time * layer_time(psi, f, hw.cores, hw.flops_per_cycle) +
                                            w.energy * layer_energy(psi, f, hw.cores, hw.flops_per_cycle, hw.kappa));
    }
    const double remote = w.time * layer_time(psi, rhw.f_max, rhw.cores, rhw.flops_per_cycle) +
                          w.energy * layer_energy(psi, rhw.f_max, rhw.cores, rhw.flops_per_cycle, rhw.kappa);
    double oracle = std::numeric_limits<double>::infinity();
    for (int a = 1; a <= s.layer_count(); ++a) oracle = std::min(oracle, a * best_local + (s.layer_count() - a) * remote);
    EXPECT_LE(r.objective, oracle * 1.01) << "wt " << wt;
    EXPECT_LE(rel_err(r.objective, objective_of(r, s, w)), 1e-12);
  }
}

TEST(Sp1Solve, SymmetricVehiclesGetSymmetricAllocation) {
  const Scenario s = symmetric_scenario(4);
  const Subproblem1Result r = solve_subproblem1(s, Weights::from_time(0.5));
  const double share = s.rsus[0].hardware.f_max / 4;
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(r.layers_local[static_cast<std::size_t>(k)], r.layers_local[0]);
    EXPECT_LE(rel_err(r.rsu_freq(k), share), 1e-6);
    EXPECT_LE(rel_err(r.vehicle_freq(k), r.vehicle_freq(0)), 1e-6);
  }
}

TEST(Sp1Solve, PureEnergyPutsVehicleFrequencyOnTheFloor) {
  const Scenario s = small_scenario(6, 2, 13);
  const Subproblem1Result r = solve_subproblem1(s, Weights::from_time(0.0));
  for (int k = 0; k < s.vehicle_count(); ++k) {
    const double floor = SqpOptions{}.floors.vehicle_frequency(s.vehicles[static_cast<std::size_t>(k)].hardware);
    EXPECT_LE(rel_err(r.vehicle_freq(k), floor), 1e-6) << k;
  }
}

TEST(Sp1Solve, ConvergesAndBeatsTheStart) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Scenario s = small_scenario(20, 5, 500 + seed);
    for (double wt : {0.0, 0.3, 0.7, 1.0}) {
      const Weights w = Weights::from_time(wt);
      const Subproblem1Result r = solve_subproblem1(s, w);
      SqpState start = initial_sqp_state(s);
      for (int k = 0; k < s.vehicle_count(); ++k) start.alpha(k) = round_layers(start.alpha(k), s.layer_count());
      EXPECT_LE(r.objective, eval_objective(start, s, w) * (1 + 1e-12));
      ASSERT_TRUE(r.diagnostics.converged) << seed << " " << wt << " " << r.diagnostics.message;
      EXPECT_LE(r.diagnostics.residual, 1e-6);
      if (r.repair_diagnostics.converged) {
        EXPECT_LE(r.repair_diagnostics.residual, 1e-6);
      }
      // Rounding plus repair stays close to the relaxed optimum.
      EXPECT_LE(r.objective, r.relaxed_objective * 1.05) << seed << " " << wt;
      expect_sqp_feasible(s, VectorXd::Map(std::vector<double>(r.layers_local.begin(), r.layers_local.end()).data(),
                                           s.vehicle_count()),
                          r.vehicle_freq, r.rsu_freq);
    }
  }
}

TEST(Sp1Solve, RoundingRule) {
  EXPECT_EQ(round_layers(2.5, 32), 2);
  EXPECT_EQ(round_layers(2.51, 32), 3);
  EXPECT_EQ(round_layers(0.2, 32), 1);
  EXPECT_EQ(round_layers(40.0, 32), 32);
  EXPECT_EQ(round_layers(16.0, 32), 16);
}
