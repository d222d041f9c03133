#include "vlsplit/subproblem1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vlsplit/errors.hpp"

namespace vlsplit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Per-vehicle constants: psi / (cores * flops_per_cycle) on each side.
struct VehicleTerms {
  double local_work = 0.0;   // kV
  double remote_work = 0.0;  // kR
  double local_kappa = 0.0;
  double remote_kappa = 0.0;
};

std::vector<VehicleTerms> vehicle_terms(const Scenario& s) {
  std::vector<VehicleTerms> out(static_cast<std::size_t>(s.vehicle_count()));
  for (int n = 0; n < s.vehicle_count(); ++n) {
    const auto& vhw = s.vehicles[static_cast<std::size_t>(n)].hardware;
    const auto& rhw = s.rsu_of(n);
    const double psi = s.flops(n);
    auto& t = out[static_cast<std::size_t>(n)];
    t.local_work = psi / (vhw.cores * vhw.flops_per_cycle);
    t.remote_work = psi / (rhw.cores * rhw.flops_per_cycle);
    t.local_kappa = vhw.kappa;
    t.remote_kappa = rhw.kappa;
  }
  return out;
}

// Weighted per-layer cost at frequency f and its first two derivatives.
struct LayerCost {
  double value, d1, d2;
};

LayerCost layer_cost(double work, double kappa, double f, const Weights& w) {
  return {w.time * work / f + w.energy * kappa * work * f * f,
          -w.time * work / (f * f) + 2.0 * w.energy * kappa * work * f,
          2.0 * w.time * work / (f * f * f) + 2.0 * w.energy * kappa * work};
}

void check_state(const SqpState& st, const Scenario& s) {
  const Index n = s.vehicle_count();
  if (st.alpha.size() != n || st.vehicle_freq.size() != n || st.rsu_freq.size() != n) {
    throw InvalidArgument("SQP state does not match the scenario's vehicle count");
  }
  if (!(st.vehicle_freq.array() > 0.0).all() || !(st.rsu_freq.array() > 0.0).all()) {
    throw InvalidArgument("frequencies must be positive");
  }
}

SqpState zero_multipliers(SqpState st, const Scenario& s) {
  const Index n = s.vehicle_count();
  st.lambda = VectorXd::Zero(n);
  st.mu = VectorXd::Zero(n);
  st.gamma = VectorXd::Zero(n);
  st.sigma = VectorXd::Zero(s.rsu_count());
  st.vehicle_floor_dual = VectorXd::Zero(n);
  st.rsu_floor_dual = VectorXd::Zero(n);
  return st;
}

VectorXd multipliers_or_zero(const VectorXd& v, Index size) {
  return v.size() == size ? v : VectorXd::Zero(size);
}

// Scaled-variable view of the relaxed problem at one iterate:
// y = x / scale, objective divided by `objective_scale`.
struct ScaledModel {
  bool fix_alpha = false;
  Index n = 0;
  Index vars = 0;
  VectorXd scale;       // per QP variable
  double objective_scale = 1.0;
  QpProblem qp;
  // Row bookkeeping for dual recovery.
  Index alpha_lo = -1, alpha_hi = -1, f_hi = -1, f_lo = -1, r_lo = -1;
  std::vector<int> eq_rsu;
};

Index alpha_index(const ScaledModel&, Index k) { return k; }
Index f_index(const ScaledModel& m, Index k) { return (m.fix_alpha ? 0 : m.n) + k; }
Index r_index(const ScaledModel& m, Index k) { return (m.fix_alpha ? m.n : 2 * m.n) + k; }

ScaledModel build_model(const SqpState& st, const Scenario& s, const Weights& w, const VariableFloors& floors,
                        bool fix_alpha) {
  ScaledModel m;
  m.fix_alpha = fix_alpha;
  m.n = s.vehicle_count();
  const Index n = m.n;
  m.vars = fix_alpha ? 2 * n : 3 * n;
  m.objective_scale = std::max(eval_objective(st, s, w), std::numeric_limits<double>::min());
  const double L = s.layer_count();

  m.scale = VectorXd::Ones(m.vars);
  for (Index k = 0; k < n; ++k) {
    m.scale(f_index(m, k)) = s.vehicles[static_cast<std::size_t>(k)].hardware.f_max;
    m.scale(r_index(m, k)) = s.rsu_of(static_cast<int>(k)).f_max;
  }

  // Primal block of the Lagrangian Hessian and the objective gradient.
  const MatrixXd hess = eval_hessian(st, s, w);
  SqpState no_mult = zero_multipliers(st, s);
  const VectorXd grad = eval_gradient(no_mult, s, w);
  std::vector<Index> src;
  if (!fix_alpha) {
    for (Index k = 0; k < n; ++k) src.push_back(k);
  }
  for (Index k = 0; k < n; ++k) src.push_back(n + k);
  for (Index k = 0; k < n; ++k) src.push_back(2 * n + k);

  MatrixXd H(m.vars, m.vars);
  VectorXd c(m.vars);
  for (Index i = 0; i < m.vars; ++i) {
    c(i) = grad(src[static_cast<std::size_t>(i)]) * m.scale(i) / m.objective_scale;
    for (Index j = 0; j < m.vars; ++j) {
      H(i, j) = hess(src[static_cast<std::size_t>(i)], src[static_cast<std::size_t>(j)]) * m.scale(i) *
                m.scale(j) / m.objective_scale;
    }
  }

  // The Lagrangian Hessian has a zero alpha diagonal and bilinear alpha/frequency
  // terms, so each per-vehicle block [alpha, f, f_rsu] is indefinite. A split
  // already at a bound that the gradient pushes into is decoupled; otherwise
  // only the alpha diagonal is lifted until the block is positive definite.
  // The frequency curvature stays exact.
  if (!fix_alpha) {
    constexpr double kFloor = 1e-8;
    for (Index k = 0; k < n; ++k) {
      const Index a = alpha_index(m, k), f = f_index(m, k), r = r_index(m, k);
      H(f, f) = std::max(H(f, f), kFloor);
      H(r, r) = std::max(H(r, r), kFloor);
      const bool held = (st.alpha(k) <= 1.0 && c(a) >= 0.0) || (st.alpha(k) >= L && c(a) <= 0.0);
      if (held) {
        H(a, f) = H(f, a) = 0.0;
        H(a, r) = H(r, a) = 0.0;
        H(a, a) = 1.0;
        continue;
      }
      const double schur = H(a, f) * H(a, f) / H(f, f) + H(a, r) * H(a, r) / H(r, r);
      H(a, a) = std::max(H(a, a), schur * (1.0 + 1e-6) + kFloor);
    }
  }

  const Index alpha_rows = fix_alpha ? 0 : 2 * n;
  const Index rows = alpha_rows + 3 * n;
  MatrixXd A_in = MatrixXd::Zero(rows, m.vars);
  VectorXd b_in = VectorXd::Zero(rows);
  Index r = 0;
  if (!fix_alpha) {
    m.alpha_lo = r;
    for (Index k = 0; k < n; ++k, ++r) {
      A_in(r, alpha_index(m, k)) = -1.0;
      b_in(r) = 1.0 - st.alpha(k);
    }
    m.alpha_hi = r;
    for (Index k = 0; k < n; ++k, ++r) {
      A_in(r, alpha_index(m, k)) = 1.0;
      b_in(r) = st.alpha(k) - L;
    }
  }
  m.f_hi = r;
  for (Index k = 0; k < n; ++k, ++r) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    A_in(r, f_index(m, k)) = 1.0;
    b_in(r) = (st.vehicle_freq(k) - hw.f_max) / hw.f_max;
  }
  m.f_lo = r;
  for (Index k = 0; k < n; ++k, ++r) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    A_in(r, f_index(m, k)) = -1.0;
    b_in(r) = (floors.vehicle_frequency(hw) - st.vehicle_freq(k)) / hw.f_max;
  }
  m.r_lo = r;
  for (Index k = 0; k < n; ++k, ++r) {
    const auto& hw = s.rsu_of(static_cast<int>(k));
    A_in(r, r_index(m, k)) = -1.0;
    b_in(r) = (floors.rsu_frequency(hw) - st.rsu_freq(k)) / hw.f_max;
  }

  m.eq_rsu = s.occupied_rsus();
  MatrixXd A_eq = MatrixXd::Zero(static_cast<Index>(m.eq_rsu.size()), m.vars);
  VectorXd b_eq = VectorXd::Zero(static_cast<Index>(m.eq_rsu.size()));
  for (std::size_t e = 0; e < m.eq_rsu.size(); ++e) {
    const int rsu = m.eq_rsu[e];
    const double fmax = s.rsus[static_cast<std::size_t>(rsu)].hardware.f_max;
    double sum = 0.0;
    for (int k : s.vehicles_on(rsu)) {
      A_eq(static_cast<Index>(e), r_index(m, k)) = 1.0;
      sum += st.rsu_freq(k);
    }
    b_eq(static_cast<Index>(e)) = (sum - fmax) / fmax;
  }
  m.qp = QpProblem{std::move(H), std::move(c), std::move(A_eq), std::move(b_eq), std::move(A_in), std::move(b_in)};
  return m;
}

double scaled_violation(const ScaledModel& m) {
  double v = 0.0;
  if (m.qp.b_in.size() > 0) v += m.qp.b_in.cwiseMax(0.0).sum();
  if (m.qp.b_eq.size() > 0) v += m.qp.b_eq.cwiseAbs().sum();
  return v;
}

// KKT residual at the model's iterate for the given (scaled) multipliers.
double scaled_kkt(const ScaledModel& m, const VectorXd& duals_eq, const VectorXd& duals_in) {
  VectorXd stat = m.qp.c;
  if (m.qp.A_eq.rows() > 0) stat += m.qp.A_eq.transpose() * duals_eq;
  if (m.qp.A_in.rows() > 0) stat += m.qp.A_in.transpose() * duals_in;
  double kkt = stat.lpNorm<Eigen::Infinity>();
  if (m.qp.A_in.rows() > 0) {
    kkt = std::max(kkt, std::max(0.0, m.qp.b_in.maxCoeff()));
    kkt = std::max(kkt, duals_in.cwiseProduct(m.qp.b_in).cwiseAbs().maxCoeff());
  }
  if (m.qp.A_eq.rows() > 0) kkt = std::max(kkt, m.qp.b_eq.lpNorm<Eigen::Infinity>());
  return kkt;
}

SqpState apply_step(const SqpState& st, const ScaledModel& m, const VectorXd& d, double eta, const Scenario& s) {
  SqpState next = st;
  const double L = s.layer_count();
  for (Index k = 0; k < m.n; ++k) {
    if (!m.fix_alpha) next.alpha(k) = std::clamp(st.alpha(k) + eta * d(alpha_index(m, k)), 1.0, L);
    const double fmax = s.vehicles[static_cast<std::size_t>(k)].hardware.f_max;
    next.vehicle_freq(k) = std::min(st.vehicle_freq(k) + eta * d(f_index(m, k)) * m.scale(f_index(m, k)), fmax);
    next.rsu_freq(k) = st.rsu_freq(k) + eta * d(r_index(m, k)) * m.scale(r_index(m, k));
  }
  return next;
}

double merit(const SqpState& st, const Scenario& s, const Weights& w, const VariableFloors& floors, bool fix_alpha,
             double objective_scale, double rho) {
  // Constraint violation in the same scaled units as the QP rows.
  double viol = 0.0;
  const double L = s.layer_count();
  for (Index k = 0; k < st.alpha.size(); ++k) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    const auto& rhw = s.rsu_of(static_cast<int>(k));
    if (!fix_alpha) viol += std::max(0.0, 1.0 - st.alpha(k)) + std::max(0.0, st.alpha(k) - L);
    viol += std::max(0.0, (st.vehicle_freq(k) - hw.f_max) / hw.f_max);
    viol += std::max(0.0, (floors.vehicle_frequency(hw) - st.vehicle_freq(k)) / hw.f_max);
    viol += std::max(0.0, (floors.rsu_frequency(rhw) - st.rsu_freq(k)) / rhw.f_max);
  }
  for (int rsu : s.occupied_rsus()) {
    const double fmax = s.rsus[static_cast<std::size_t>(rsu)].hardware.f_max;
    double sum = 0.0;
    for (int k : s.vehicles_on(rsu)) sum += st.rsu_freq(k);
    viol += std::abs(sum - fmax) / fmax;
  }
  return eval_objective(st, s, w) / objective_scale + rho * viol;
}

SolverDiagnostics run_sqp(SqpState& state, const Scenario& s, const Weights& w, const SqpOptions& options,
                          bool fix_alpha) {
  SolverDiagnostics diag;
  for (int it = 0; it < options.max_iterations; ++it) {
    std::pair<SqpState, StepDiagnostics> step;
    try {
      step = sqp_step(state, s, w, options, fix_alpha);
    } catch (const SolverError& e) {
      diag.message = e.what();
      return diag;
    }
    diag.iterations = it + 1;
    diag.residual = step.second.kkt_residual;
    diag.objective_trace.push_back(eval_objective(state, s, w));
    diag.residual_trace.push_back(step.second.kkt_residual);
    if (step.second.kkt_residual <= options.kkt_tolerance) {
      // Converged at `state`; keep the multipliers from this last QP.
      SqpState done = step.first;
      done.alpha = state.alpha;
      done.vehicle_freq = state.vehicle_freq;
      done.rsu_freq = state.rsu_freq;
      done.kkt_residual = step.second.kkt_residual;
      done.iteration = state.iteration;
      state = std::move(done);
      diag.converged = true;
      return diag;
    }
    if (step.second.line_search_failed) {
      state.kkt_residual = step.second.kkt_residual;
      diag.message = "line search failed to reduce the merit function";
      return diag;
    }
    state = std::move(step.first);
  }
  diag.message = "iteration limit reached";
  return diag;
}

}  // namespace

int round_layers(double alpha, int layers) {
  const double r = std::ceil(alpha - 0.5);
  return static_cast<int>(std::clamp(r, 1.0, static_cast<double>(layers)));
}

SqpState initial_sqp_state(const Scenario& s) {
  const Index n = s.vehicle_count();
  SqpState st;
  st.alpha = VectorXd::Constant(n, 0.5 * s.layer_count());
  st.vehicle_freq.resize(n);
  st.rsu_freq.resize(n);
  for (Index k = 0; k < n; ++k) {
    st.vehicle_freq(k) = 0.5 * s.vehicles[static_cast<std::size_t>(k)].hardware.f_max;
    const int rsu = s.association[static_cast<std::size_t>(k)];
    st.rsu_freq(k) = s.rsus[static_cast<std::size_t>(rsu)].hardware.f_max /
                     static_cast<double>(s.vehicles_on(rsu).size());
  }
  return zero_multipliers(std::move(st), s);
}

SqpState sqp_state_from(const Scenario& s, const Allocation& a) {
  const Index n = s.vehicle_count();
  SqpState st;
  st.alpha.resize(n);
  for (Index k = 0; k < n; ++k) st.alpha(k) = a.layers_local[static_cast<std::size_t>(k)];
  st.vehicle_freq = Eigen::Map<const VectorXd>(a.vehicle_frequency.data(), n);
  st.rsu_freq = Eigen::Map<const VectorXd>(a.rsu_frequency.data(), n);
  return zero_multipliers(std::move(st), s);
}

double eval_objective(const SqpState& st, const Scenario& s, const Weights& w) {
  check_state(st, s);
  const auto terms = vehicle_terms(s);
  const double L = s.layer_count();
  double F = 0.0;
  for (Index k = 0; k < st.alpha.size(); ++k) {
    const auto& t = terms[static_cast<std::size_t>(k)];
    F += st.alpha(k) * layer_cost(t.local_work, t.local_kappa, st.vehicle_freq(k), w).value;
    F += (L - st.alpha(k)) * layer_cost(t.remote_work, t.remote_kappa, st.rsu_freq(k), w).value;
  }
  return F;
}

double eval_lagrangian(const SqpState& st, const Scenario& s, const Weights& w) {
  const Index n = s.vehicle_count();
  const double L = s.layer_count();
  const VectorXd lambda = multipliers_or_zero(st.lambda, n);
  const VectorXd mu = multipliers_or_zero(st.mu, n);
  const VectorXd gamma = multipliers_or_zero(st.gamma, n);
  const VectorXd sigma = multipliers_or_zero(st.sigma, s.rsu_count());
  double value = eval_objective(st, s, w);
  for (Index k = 0; k < n; ++k) {
    value += lambda(k) * (1.0 - st.alpha(k)) + mu(k) * (st.alpha(k) - L) +
             gamma(k) * (st.vehicle_freq(k) - s.vehicles[static_cast<std::size_t>(k)].hardware.f_max);
  }
  for (int m = 0; m < s.rsu_count(); ++m) {
    double sum = 0.0;
    for (int k : s.vehicles_on(m)) sum += st.rsu_freq(k);
    value += sigma(m) * (sum - s.rsus[static_cast<std::size_t>(m)].hardware.f_max);
  }
  return value;
}

VectorXd eval_gradient(const SqpState& st, const Scenario& s, const Weights& w) {
  check_state(st, s);
  const Index n = s.vehicle_count();
  const Index M = s.rsu_count();
  const double L = s.layer_count();
  const auto terms = vehicle_terms(s);
  const VectorXd lambda = multipliers_or_zero(st.lambda, n);
  const VectorXd mu = multipliers_or_zero(st.mu, n);
  const VectorXd gamma = multipliers_or_zero(st.gamma, n);
  const VectorXd sigma = multipliers_or_zero(st.sigma, M);

  VectorXd g = VectorXd::Zero(6 * n + M);
  for (Index k = 0; k < n; ++k) {
    const auto& t = terms[static_cast<std::size_t>(k)];
    const int rsu = s.association[static_cast<std::size_t>(k)];
    const LayerCost local = layer_cost(t.local_work, t.local_kappa, st.vehicle_freq(k), w);
    const LayerCost remote = layer_cost(t.remote_work, t.remote_kappa, st.rsu_freq(k), w);
    g(k) = local.value - remote.value - lambda(k) + mu(k);
    g(n + k) = st.alpha(k) * local.d1 + gamma(k);
    g(2 * n + k) = (L - st.alpha(k)) * remote.d1 + sigma(rsu);
    g(3 * n + k) = 1.0 - st.alpha(k);
    g(4 * n + k) = st.alpha(k) - L;
    g(5 * n + k) = st.vehicle_freq(k) - s.vehicles[static_cast<std::size_t>(k)].hardware.f_max;
    g(6 * n + rsu) += st.rsu_freq(k);
  }
  for (Index m = 0; m < M; ++m) g(6 * n + m) -= s.rsus[static_cast<std::size_t>(m)].hardware.f_max;
  return g;
}

MatrixXd eval_hessian(const SqpState& st, const Scenario& s, const Weights& w) {
  check_state(st, s);
  const Index n = s.vehicle_count();
  const Index M = s.rsu_count();
  const double L = s.layer_count();
  const auto terms = vehicle_terms(s);

  MatrixXd H = MatrixXd::Zero(6 * n + M, 6 * n + M);
  auto set = [&H](Index i, Index j, double v) {
    H(i, j) = v;
    H(j, i) = v;
  };
  for (Index k = 0; k < n; ++k) {
    const auto& t = terms[static_cast<std::size_t>(k)];
    const LayerCost local = layer_cost(t.local_work, t.local_kappa, st.vehicle_freq(k), w);
    const LayerCost remote = layer_cost(t.remote_work, t.remote_kappa, st.rsu_freq(k), w);
    const Index a = k, f = n + k, r = 2 * n + k;
    // d2L/dalpha2 = 0 (left as initialized)
    set(a, f, local.d1);
    set(a, r, -remote.d1);
    set(a, 3 * n + k, -1.0);
    set(a, 4 * n + k, 1.0);
    set(f, f, st.alpha(k) * local.d2);
    set(f, 5 * n + k, 1.0);
    set(r, r, (L - st.alpha(k)) * remote.d2);
    set(r, 6 * n + s.association[static_cast<std::size_t>(k)], 1.0);
  }
  return H;
}

VectorXd pack_lagrangian_point(const SqpState& st) {
  const Index n = st.alpha.size();
  VectorXd z(6 * n + st.sigma.size());
  z << st.alpha, st.vehicle_freq, st.rsu_freq, st.lambda, st.mu, st.gamma, st.sigma;
  return z;
}

SqpState unpack_lagrangian_point(const VectorXd& z, const Scenario& s) {
  const Index n = s.vehicle_count();
  if (z.size() != 6 * n + s.rsu_count()) throw InvalidArgument("Lagrangian point has wrong size");
  SqpState st = zero_multipliers(SqpState{}, s);
  st.alpha = z.segment(0, n);
  st.vehicle_freq = z.segment(n, n);
  st.rsu_freq = z.segment(2 * n, n);
  st.lambda = z.segment(3 * n, n);
  st.mu = z.segment(4 * n, n);
  st.gamma = z.segment(5 * n, n);
  st.sigma = z.segment(6 * n, s.rsu_count());
  return st;
}

std::pair<SqpState, StepDiagnostics> sqp_step(const SqpState& state, const Scenario& s, const Weights& w,
                                              const SqpOptions& options, bool fix_alpha) {
  check_state(state, s);
  StepDiagnostics diag;
  const ScaledModel model = build_model(state, s, w, options.floors, fix_alpha);

  QpOptions qp_opts;
  qp_opts.start = VectorXd::Zero(model.vars);
  const QpSolution qp = solve_qp(model.qp, qp_opts);
  if (qp.status != QpStatus::optimal) {
    throw SolverError("SQP: QP subproblem returned " + to_string(qp.status));
  }
  diag.qp_iterations = qp.iterations;
  diag.regularization = qp.regularization;
  diag.step_norm = qp.d.lpNorm<Eigen::Infinity>();
  diag.kkt_residual = scaled_kkt(model, qp.duals_eq, qp.duals_in);


  // Multipliers in the Lagrangian's own units.
  SqpState next = zero_multipliers(state, s);
  const double F0 = model.objective_scale;
  for (Index k = 0; k < model.n; ++k) {
    const double fmax = s.vehicles[static_cast<std::size_t>(k)].hardware.f_max;
    const double rmax = s.rsu_of(static_cast<int>(k)).f_max;
    if (!fix_alpha) {
      next.lambda(k) = qp.duals_in(model.alpha_lo + k) * F0;
      next.mu(k) = qp.duals_in(model.alpha_hi + k) * F0;
    }
    next.gamma(k) = qp.duals_in(model.f_hi + k) * F0 / fmax;
    next.vehicle_floor_dual(k) = qp.duals_in(model.f_lo + k) * F0 / fmax;
    next.rsu_floor_dual(k) = qp.duals_in(model.r_lo + k) * F0 / rmax;
  }
  for (std::size_t e = 0; e < model.eq_rsu.size(); ++e) {
    const int rsu = model.eq_rsu[e];
    next.sigma(rsu) = qp.duals_eq(static_cast<Index>(e)) * F0 / s.rsus[static_cast<std::size_t>(rsu)].hardware.f_max;
  }

  double dual_norm = 0.0;
  if (qp.duals_in.size() > 0) dual_norm = qp.duals_in.lpNorm<Eigen::Infinity>();
  if (qp.duals_eq.size() > 0) dual_norm = std::max(dual_norm, qp.duals_eq.lpNorm<Eigen::Infinity>());
  const double rho = 10.0 * dual_norm + 1.0;
  diag.merit_before = merit(state, s, w, options.floors, fix_alpha, F0, rho);

  const double slope = model.qp.c.dot(qp.d) - rho * scaled_violation(model);
  double eta = 1.0;
  SqpState trial = apply_step(state, model, qp.d, eta, s);
  double trial_merit = merit(trial, s, w, options.floors, fix_alpha, F0, rho);
  if (!options.full_step) {
    int halvings = 0;
    while (!(trial_merit <= diag.merit_before + 1e-4 * eta * std::min(slope, 0.0)) && halvings < 40) {
      eta *= 0.5;
      ++halvings;
      trial = apply_step(state, model, qp.d, eta, s);
      trial_merit = merit(trial, s, w, options.floors, fix_alpha, F0, rho);
    }
    if (!(trial_merit <= diag.merit_before + 1e-4 * eta * std::min(slope, 0.0))) {
      diag.line_search_failed = true;
      trial = state;
      trial_merit = diag.merit_before;
      eta = 0.0;
    }
  }
  // F is linear in alpha for fixed frequencies, so a split that the step moved
  // to within one layer of a bound, with the bound still downhill, goes there.
  if (!fix_alpha && eta > 0.0) {
    const VectorXd g = eval_gradient(zero_multipliers(trial, s), s, w);
    const double L = s.layer_count();
    for (Index k = 0; k < model.n; ++k) {
      const double moved = trial.alpha(k) - state.alpha(k);
      if (moved > 0.0 && L - trial.alpha(k) <= 1.0 && g(k) < 0.0) trial.alpha(k) = L;
      if (moved < 0.0 && trial.alpha(k) - 1.0 <= 1.0 && g(k) > 0.0) trial.alpha(k) = 1.0;
    }
    trial_merit = merit(trial, s, w, options.floors, fix_alpha, F0, rho);
  }
  diag.step_length = eta;
  diag.merit_after = trial_merit;

  next.alpha = trial.alpha;
  next.vehicle_freq = trial.vehicle_freq;
  next.rsu_freq = trial.rsu_freq;
  next.iteration = state.iteration + 1;
  next.kkt_residual = diag.kkt_residual;
  return {std::move(next), diag};
}

Subproblem1Result optimize_frequencies(const Scenario& s, const Weights& w, const std::vector<int>& layers,
                                       const SqpOptions& options, const std::optional<SqpState>& warm_start) {
  if (layers.size() != static_cast<std::size_t>(s.vehicle_count())) {
    throw InvalidArgument("layer split must have one entry per vehicle");
  }
  SqpState st = warm_start ? zero_multipliers(*warm_start, s) : initial_sqp_state(s);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k] < 1 || layers[k] > s.layer_count()) throw InvalidArgument("layer split out of range");
    st.alpha(static_cast<Index>(k)) = layers[k];
  }
  Subproblem1Result res;
  res.repair_diagnostics = run_sqp(st, s, w, options, /*fix_alpha=*/true);
  res.layers_local = layers;
  res.vehicle_freq = st.vehicle_freq;
  res.rsu_freq = st.rsu_freq;
  res.objective = eval_objective(st, s, w);
  res.relaxed = st;
  res.relaxed_objective = res.objective;
  res.diagnostics = res.repair_diagnostics;
  return res;
}

Subproblem1Result solve_subproblem1(const Scenario& s, const Weights& w, const SqpOptions& options,
                                    const std::optional<SqpState>& warm_start) {
  s.validate();
  w.validate();
  if (s.occupied_rsus().empty()) throw InvalidArgument("no RSU has associated vehicles");
  const SqpState start = warm_start ? zero_multipliers(*warm_start, s) : initial_sqp_state(s);
  check_state(start, s);

  SqpState relaxed = start;
  SolverDiagnostics diag = run_sqp(relaxed, s, w, options, /*fix_alpha=*/false);

  std::vector<int> rounded(static_cast<std::size_t>(s.vehicle_count()));
  for (Index k = 0; k < relaxed.alpha.size(); ++k) {
    rounded[static_cast<std::size_t>(k)] = round_layers(relaxed.alpha(k), s.layer_count());
  }
  Subproblem1Result res = optimize_frequencies(s, w, rounded, options, relaxed);
  res.diagnostics = std::move(diag);
  res.relaxed = relaxed;
  res.relaxed_objective = eval_objective(relaxed, s, w);

  // Fall back to the (rounded) start when rounding made things worse.
  SqpState fallback = start;
  std::vector<int> start_layers(rounded.size());
  for (Index k = 0; k < start.alpha.size(); ++k) {
    start_layers[static_cast<std::size_t>(k)] = round_layers(start.alpha(k), s.layer_count());
    fallback.alpha(k) = start_layers[static_cast<std::size_t>(k)];
  }
  const double fallback_objective = eval_objective(fallback, s, w);
  if (fallback_objective < res.objective) {
    res.layers_local = start_layers;
    res.vehicle_freq = fallback.vehicle_freq;
    res.rsu_freq = fallback.rsu_freq;
    res.objective = fallback_objective;
    res.diagnostics.message += res.diagnostics.message.empty() ? "kept start point" : "; kept start point";
  }
  return res;
}

}  // namespace vlsplit
