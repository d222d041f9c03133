#include "vlsplit/subproblem2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "vlsplit/errors.hpp"
#include "vlsplit/qp.hpp"

namespace vlsplit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kLn2 = std::numbers::ln2;

// log(1+s) - s/(1+s); series near zero where the difference cancels.
double log_gap(double s) {
  if (s < 1e-2) {
    double term = s, sum = 0.0;
    for (int k = 2; k <= 9; ++k) {
      term *= -s;
      sum += -term * static_cast<double>(k - 1) / static_cast<double>(k);
    }
    return sum;
  }
  return std::log1p(s) - s / (1.0 + s);
}

// Scaled coordinates: u = p / p_max, v = b / b_max of the associated RSU.
struct Layout {
  Index n = 0;
  VectorXd p_max, b_max, u_floor, v_floor;
  std::vector<std::vector<int>> groups;  // occupied RSUs
};

Layout make_layout(const Scenario& s, const VariableFloors& floors) {
  Layout l;
  l.n = s.vehicle_count();
  l.p_max.resize(l.n);
  l.b_max.resize(l.n);
  l.u_floor.resize(l.n);
  l.v_floor.resize(l.n);
  for (Index k = 0; k < l.n; ++k) {
    const auto& hw = s.vehicles[static_cast<std::size_t>(k)].hardware;
    const auto& rhw = s.rsu_of(static_cast<int>(k));
    l.p_max(k) = hw.p_max;
    l.b_max(k) = rhw.b_max;
    l.u_floor(k) = floors.power(hw) / hw.p_max;
    l.v_floor(k) = floors.bandwidth_hz / rhw.b_max;
  }
  for (int m : s.occupied_rsus()) l.groups.push_back(s.vehicles_on(m));
  return l;
}

double rate_of(const Scenario& s, Index k, double p, double b) {
  return rate_derivatives(p, b, s.link_gain(static_cast<int>(k)), s.noise_psd).rate;
}

// Euclidean projection of z onto {u in [u_floor, 1]} x {v >= v_floor, sum_group v = 1}.
VectorXd project(const VectorXd& z, const Layout& l) {
  VectorXd x = z;
  for (Index k = 0; k < l.n; ++k) x(k) = std::clamp(z(k), l.u_floor(k), 1.0);
  for (const auto& g : l.groups) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int k : g) {
      lo = std::min(lo, z(l.n + k) - 1.0);
      hi = std::max(hi, z(l.n + k) - l.v_floor(k));
    }
    auto total = [&](double theta) {
      double t = 0.0;
      for (int k : g) t += std::max(z(l.n + k) - theta, l.v_floor(k));
      return t;
    };
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (total(mid) > 1.0 ? lo : hi) = mid;
    }
    const double theta = 0.5 * (lo + hi);
    for (int k : g) x(l.n + k) = std::max(z(l.n + k) - theta, l.v_floor(k));
  }
  return x;
}

struct InnerModel {
  double value = 0.0;  // scaled
  VectorXd grad;       // scaled
  MatrixXd hess;       // scaled
};

// Optional quadratic (x - center)^T D (x - center) / 2 added to the inner
// objective, in scaled coordinates, with D block diagonal per vehicle.
struct Proximal {
  VectorXd center;
  std::vector<Eigen::Matrix2d> blocks;
};

InnerModel inner_model(const VectorXd& x, const VectorXd& nu, const VectorXd& beta, const Scenario& s,
                       const Layout& l, double scale, bool with_hessian, const Proximal* prox = nullptr) {
  InnerModel m;
  m.grad = VectorXd::Zero(2 * l.n);
  if (with_hessian) m.hess = MatrixXd::Zero(2 * l.n, 2 * l.n);
  for (Index k = 0; k < l.n; ++k) {
    const double p = x(k) * l.p_max(k), b = x(l.n + k) * l.b_max(k);
    const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
    const RateDerivatives r = rate_derivatives(p, b, s.link_gain(static_cast<int>(k)), s.noise_psd);
    const double w = nu(k) / scale;
    m.value += w * (p * payload - beta(k) * r.rate);
    m.grad(k) = w * (payload - beta(k) * r.dp) * l.p_max(k);
    m.grad(l.n + k) = -w * beta(k) * r.db * l.b_max(k);
    if (with_hessian) {
      m.hess(k, k) = -w * beta(k) * r.dpp * l.p_max(k) * l.p_max(k);
      m.hess(k, l.n + k) = -w * beta(k) * r.dpb * l.p_max(k) * l.b_max(k);
      m.hess(l.n + k, k) = m.hess(k, l.n + k);
      m.hess(l.n + k, l.n + k) = -w * beta(k) * r.dbb * l.b_max(k) * l.b_max(k);
    }
    if (prox) {
      const Eigen::Matrix2d& D = prox->blocks[static_cast<std::size_t>(k)];
      const Eigen::Vector2d dx(x(k) - prox->center(k), x(l.n + k) - prox->center(l.n + k));
      const Eigen::Vector2d g = D * dx;
      m.value += 0.5 * dx.dot(g);
      m.grad(k) += g(0);
      m.grad(l.n + k) += g(1);
      if (with_hessian) {
        m.hess(k, k) += D(0, 0);
        m.hess(k, l.n + k) += D(0, 1);
        m.hess(l.n + k, k) += D(1, 0);
        m.hess(l.n + k, l.n + k) += D(1, 1);
      }
    }
  }
  return m;
}

// Curvature of the true ratio objective missing from the inner model at x,
// where (beta, nu) are set from x. Per vehicle, with rate R:
//   D = w d / R^2 [[2 R_p (p R_p / R - 1), R_b (2 p R_p / R - 1)],
//                  [R_b (2 p R_p / R - 1), 2 p R_b^2 / R]]
// clipped to its positive semidefinite part so the inner problem stays convex.
// Scaled like the inner objective.
std::vector<Eigen::Matrix2d> missing_curvature(const VectorXd& x, const Scenario& s, const Weights& w,
                                               const Layout& l, double scale) {
  std::vector<Eigen::Matrix2d> blocks(static_cast<std::size_t>(l.n));
  for (Index k = 0; k < l.n; ++k) {
    const double p = x(k) * l.p_max(k), b = x(l.n + k) * l.b_max(k);
    const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
    const RateDerivatives r = rate_derivatives(p, b, s.link_gain(static_cast<int>(k)), s.noise_psd);
    const double c = w.energy * payload / (r.rate * r.rate * scale);
    const double q = p * r.dp / r.rate;
    Eigen::Matrix2d D;
    D(0, 0) = 2.0 * r.dp * (q - 1.0) * l.p_max(k) * l.p_max(k);
    D(0, 1) = D(1, 0) = r.db * (2.0 * q - 1.0) * l.p_max(k) * l.b_max(k);
    D(1, 1) = 2.0 * p * r.db * r.db / r.rate * l.b_max(k) * l.b_max(k);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(c * D);
    const Eigen::Vector2d lam = eig.eigenvalues().cwiseMax(0.0);
    blocks[static_cast<std::size_t>(k)] = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  }
  return blocks;
}

double inner_value(const VectorXd& x, const VectorXd& nu, const VectorXd& beta, const Scenario& s, const Layout& l) {
  double v = 0.0;
  for (Index k = 0; k < l.n; ++k) {
    const double p = x(k) * l.p_max(k), b = x(l.n + k) * l.b_max(k);
    v += nu(k) * (p * s.vehicles[static_cast<std::size_t>(k)].payload_bits - beta(k) * rate_of(s, k, p, b));
  }
  return v;
}

QpProblem inner_qp(const VectorXd& x, const InnerModel& m, const Layout& l) {
  const Index n = l.n;
  QpProblem qp;
  qp.H = m.hess;
  qp.c = m.grad;
  qp.A_in = MatrixXd::Zero(3 * n, 2 * n);
  qp.b_in = VectorXd::Zero(3 * n);
  for (Index k = 0; k < n; ++k) {
    qp.A_in(k, k) = -1.0;
    qp.b_in(k) = l.u_floor(k) - x(k);
    qp.A_in(n + k, k) = 1.0;
    qp.b_in(n + k) = x(k) - 1.0;
    qp.A_in(2 * n + k, n + k) = -1.0;
    qp.b_in(2 * n + k) = l.v_floor(k) - x(n + k);
  }
  qp.A_eq = MatrixXd::Zero(static_cast<Index>(l.groups.size()), 2 * n);
  qp.b_eq = VectorXd::Zero(static_cast<Index>(l.groups.size()));
  for (std::size_t e = 0; e < l.groups.size(); ++e) {
    double sum = 0.0;
    for (int k : l.groups[e]) {
      qp.A_eq(static_cast<Index>(e), n + k) = 1.0;
      sum += x(n + k);
    }
    qp.b_eq(static_cast<Index>(e)) = sum - 1.0;
  }
  return qp;
}

VectorXd pack(const VectorXd& p, const VectorXd& b, const Layout& l) {
  VectorXd x(2 * l.n);
  x << p.cwiseQuotient(l.p_max), b.cwiseQuotient(l.b_max);
  return project(x, l);
}

void check_sizes(const Scenario& s, const VectorXd& a, const VectorXd& b, const char* what) {
  if (a.size() != s.vehicle_count() || b.size() != s.vehicle_count()) {
    throw InvalidArgument(std::string(what) + ": expected one entry per vehicle");
  }
}

}  // namespace

RateDerivatives rate_derivatives(double p, double b, double g, double n0) {
  if (!(b > 0.0) || !(g > 0.0) || !(n0 > 0.0) || !(p >= 0.0)) {
    throw InvalidArgument("rate needs p >= 0 and positive bandwidth, gain, noise");
  }
  const double s = g * p / (n0 * b);
  const double q = 1.0 + s;
  RateDerivatives r;
  r.rate = b * std::log1p(s) / kLn2;
  r.dp = g / (n0 * kLn2 * q);
  r.db = log_gap(s) / kLn2;
  r.dpp = -g * g / (n0 * n0 * b * kLn2 * q * q);
  r.dpb = g * s / (n0 * kLn2 * b * q * q);
  r.dbb = -s * s / (b * kLn2 * q * q);
  return r;
}

double rate_quadratic_form(double p, double b, double g, double n0, const Eigen::Vector2d& x) {
  if (!(p > 0.0) || !(b > 0.0)) throw InvalidArgument("quadratic form needs p > 0 and b > 0");
  if (!(g > 0.0) || !(n0 > 0.0)) throw InvalidArgument("quadratic form needs positive gain and noise");
  const double lin = b * x(0) - p * x(1);
  const double den = n0 * b + g * p;
  return -g * g * lin * lin / (kLn2 * b * den * den);
}

std::pair<VectorXd, VectorXd> initial_power_bandwidth(const Scenario& s) {
  const Index n = s.vehicle_count();
  VectorXd p(n), b(n);
  for (Index k = 0; k < n; ++k) {
    p(k) = 0.5 * s.vehicles[static_cast<std::size_t>(k)].hardware.p_max;
    const int m = s.association[static_cast<std::size_t>(k)];
    b(k) = s.rsus[static_cast<std::size_t>(m)].hardware.b_max / static_cast<double>(s.vehicles_on(m).size());
  }
  return {p, b};
}

double comm_objective(const VectorXd& p, const VectorXd& b, const Scenario& s, const Weights& w) {
  check_sizes(s, p, b, "comm_objective");
  double total = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
    total += w.energy * comm_energy(p(k), payload, rate_of(s, k, p(k), b(k)));
  }
  return total;
}

std::pair<VectorXd, VectorXd> update_parameters(const VectorXd& p, const VectorXd& b, const Scenario& s,
                                                const Weights& w, double damping,
                                                const std::optional<std::pair<VectorXd, VectorXd>>& previous) {
  check_sizes(s, p, b, "update_parameters");
  if (!(damping > 0.0 && damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  VectorXd beta(p.size()), nu(p.size());
  for (Index k = 0; k < p.size(); ++k) {
    const double rate = rate_of(s, k, p(k), b(k));
    if (!(rate > 0.0)) throw InfeasibleLink("zero rate for vehicle " + std::to_string(k));
    beta(k) = p(k) * s.vehicles[static_cast<std::size_t>(k)].payload_bits / rate;
    nu(k) = w.energy / rate;
  }
  if (previous && damping < 1.0) {
    beta = damping * beta + (1.0 - damping) * previous->first;
    nu = damping * nu + (1.0 - damping) * previous->second;
  }
  return {beta, nu};
}

double fixed_point_residual(const FracState& st, const Scenario& s, const Weights& w) {
  double res = 0.0;
  for (Index k = 0; k < st.power.size(); ++k) {
    const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
    const double rate = rate_of(s, k, st.power(k), st.bandwidth(k));
    const double work = st.power(k) * payload;
    res = std::max(res, std::abs(work - st.beta(k) * rate) / work);
    if (w.energy > 0.0) res = std::max(res, std::abs(st.nu(k) * rate - w.energy) / w.energy);
  }
  return res;
}

namespace {

// Objective scale: magnitude of either inner term at x.
double inner_scale(const VectorXd& x, const VectorXd& nu, const VectorXd& beta, const Scenario& s, const Layout& l) {
  double pos = 0.0, neg = 0.0;
  for (Index k = 0; k < l.n; ++k) {
    const double p = x(k) * l.p_max(k), b = x(l.n + k) * l.b_max(k);
    pos += nu(k) * p * s.vehicles[static_cast<std::size_t>(k)].payload_bits;
    neg += nu(k) * beta(k) * rate_of(s, k, p, b);
  }
  return std::max({pos, neg, std::numeric_limits<double>::min()});
}

InnerResult inner_newton(const VectorXd& nu, const VectorXd& beta, const Scenario& s, const FracOptions& options,
                         const Layout& l, VectorXd x, double scale, const Proximal* prox) {
  InnerResult res;
  for (int it = 0;; ++it) {
    InnerModel m = inner_model(x, nu, beta, s, l, scale, true, prox);
    res.stationarity = (x - project(x - m.grad, l)).lpNorm<Eigen::Infinity>();
    res.iterations = it;
    if (res.stationarity <= options.inner_tolerance) {
      res.converged = true;
      break;
    }
    if (it >= options.max_inner_iterations) break;

    const QpSolution qp = solve_qp(inner_qp(x, m, l));
    if (qp.status != QpStatus::optimal) break;
    const double slope = m.grad.dot(qp.d);
    if (!(slope < 0.0)) break;
    double eta = 1.0;
    VectorXd trial;
    double trial_value = 0.0;
    bool accepted = false;
    for (int h = 0; h < 50; ++h, eta *= 0.5) {
      trial = project(x + eta * qp.d, l);
      trial_value = inner_model(trial, nu, beta, s, l, scale, false, prox).value;
      if (trial_value <= m.value + 1e-4 * eta * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    x = std::move(trial);
  }
  res.power = x.head(l.n).cwiseProduct(l.p_max);
  res.bandwidth = x.tail(l.n).cwiseProduct(l.b_max);
  res.objective = inner_value(x, nu, beta, s, l);
  return res;
}

}  // namespace

InnerResult solve_inner(const VectorXd& nu, const VectorXd& beta, const Scenario& s, const FracOptions& options,
                        const std::optional<std::pair<VectorXd, VectorXd>>& start) {
  check_sizes(s, nu, beta, "solve_inner");
  if (!(nu.array() > 0.0).all()) throw InvalidArgument("nu must be positive");
  if (!(beta.array() >= 0.0).all()) throw InvalidArgument("beta must be non-negative");
  const Layout l = make_layout(s, options.floors);
  const auto [p0, b0] = start ? *start : initial_power_bandwidth(s);
  check_sizes(s, p0, b0, "solve_inner start");
  const VectorXd x = pack(p0, b0, l);
  return inner_newton(nu, beta, s, options, l, x, inner_scale(x, nu, beta, s, l), nullptr);
}

Subproblem2Result solve_subproblem2(const Scenario& s, const Weights& w, const FracOptions& options,
                                    const std::optional<std::pair<VectorXd, VectorXd>>& warm_start) {
  s.validate();
  w.validate();
  if (!(options.damping > 0.0 && options.damping <= 1.0)) throw InvalidArgument("damping must lie in (0, 1]");
  const Layout l = make_layout(s, options.floors);
  auto [p0, b0] = warm_start ? *warm_start : initial_power_bandwidth(s);
  check_sizes(s, p0, b0, "solve_subproblem2 start");
  {
    const VectorXd x = pack(p0, b0, l);
    p0 = x.head(l.n).cwiseProduct(l.p_max);
    b0 = x.tail(l.n).cwiseProduct(l.b_max);
  }

  Subproblem2Result res;
  res.initial_objective = comm_objective(p0, b0, s, w);

  auto [beta, nu] = update_parameters(p0, b0, s, w);
  if (w.energy == 0.0) {
    // Nothing to trade off: every feasible point has zero cost.
    res.power = p0;
    res.bandwidth = b0;
    res.objective = res.initial_objective;
    res.state = {p0, b0, beta, nu, 0, 0.0};
    res.diagnostics.converged = true;
    res.diagnostics.objective_trace.push_back(res.objective);
    return res;
  }

  // Each outer step sets (beta, nu) from the current point and solves the
  // inner problem. At the current point the inner objective has the same
  // gradient as the true objective, so the segment towards the inner
  // solution is a descent direction; it is searched with an Armijo rule,
  // which keeps the true objective monotone. At a fixed point the inner
  // solution reproduces the current point.
  VectorXd p = p0, b = b0;
  double obj = res.initial_objective;
  FracState last{p0, b0, beta, nu, 0, 0.0};
  res.diagnostics.objective_trace.push_back(obj);
  bool inner_ok = false;
  for (int outer = 1;; ++outer) {
    std::tie(beta, nu) = update_parameters(p, b, s, w, options.damping,
                                           outer > 1 ? std::optional(std::make_pair(last.beta, last.nu))
                                                     : std::nullopt);
    InnerResult in;
    {
      const VectorXd x = pack(p, b, l);
      const double scale = inner_scale(x, nu, beta, s, l);
      Proximal prox;
      if (options.curvature_correction && options.damping == 1.0) {
        prox.center = x;
        prox.blocks = missing_curvature(x, s, w, l, scale);
      }
      in = inner_newton(nu, beta, s, options, l, x, scale, prox.blocks.empty() ? nullptr : &prox);
    }
    inner_ok = in.converged;
    last = {in.power, in.bandwidth, beta, nu, outer, 0.0};
    last.residual_norm = fixed_point_residual(last, s, w);
    res.diagnostics.residual_trace.push_back(last.residual_norm);
    res.diagnostics.iterations = outer;
    if (last.residual_norm <= options.tolerance && inner_ok) {
      res.diagnostics.converged = true;
      break;
    }
    if (outer >= options.max_outer_iterations) {
      res.diagnostics.message = "outer iteration limit reached";
      break;
    }

    // Derivative of the true objective along the segment at fraction t.
    auto slope_at = [&](double t) {
      double d = 0.0;
      for (Index k = 0; k < l.n; ++k) {
        const double payload = s.vehicles[static_cast<std::size_t>(k)].payload_bits;
        const double dp = in.power(k) - p(k), db = in.bandwidth(k) - b(k);
        const double pt = p(k) + t * dp, bt = b(k) + t * db;
        const RateDerivatives r = rate_derivatives(pt, bt, s.link_gain(static_cast<int>(k)), s.noise_psd);
        d += w.energy * payload * ((r.rate - pt * r.dp) * dp - pt * r.db * db) / (r.rate * r.rate);
      }
      return d;
    };
    const double slope = slope_at(0.0);
    if (!(slope < 0.0)) {
      res.diagnostics.message = "no descent along the inner solution";
      break;
    }
    // The step may run past the inner solution up to the edge of the
    // feasible set: the inner solution tends to undershoot, most visibly
    // in power, which roughly halves per outer step on its way to the floor.
    double t_max = 1e6;
    for (Index k = 0; k < l.n; ++k) {
      const double dp = in.power(k) - p(k), db = in.bandwidth(k) - b(k);
      const double p_lo = l.u_floor(k) * l.p_max(k), b_lo = l.v_floor(k) * l.b_max(k);
      if (dp < 0.0) t_max = std::min(t_max, (p_lo - p(k)) / dp);
      if (dp > 0.0) t_max = std::min(t_max, (l.p_max(k) - p(k)) / dp);
      if (db < 0.0) t_max = std::min(t_max, (b_lo - b(k)) / db);
    }
    t_max = std::max(t_max, 1.0);
    // Bisect on the sign of the directional derivative, then confirm
    // sufficient decrease.
    double t = t_max;
    if (slope_at(t_max) > 0.0) {
      double lo = 0.0, hi = t_max;
      for (int h = 0; h < 80; ++h) {
        const double mid = 0.5 * (lo + hi);
        (slope_at(mid) < 0.0 ? lo : hi) = mid;
      }
      t = std::max(lo, std::numeric_limits<double>::min());
    }
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      VectorXd tp = p + t * (in.power - p), tb = b + t * (in.bandwidth - b);
      const VectorXd x = pack(tp, tb, l);  // clears roundoff at the edges
      tp = x.head(l.n).cwiseProduct(l.p_max);
      tb = x.tail(l.n).cwiseProduct(l.b_max);
      const double trial = comm_objective(tp, tb, s, w);
      if (trial <= obj + 1e-4 * t * slope) {
        p = tp;
        b = tb;
        obj = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.diagnostics.message = "line search failed along the inner solution";
      break;
    }
    res.diagnostics.objective_trace.push_back(obj);
  }
  if (!inner_ok && res.diagnostics.message.empty()) res.diagnostics.message = "inner solve did not converge";
  res.diagnostics.residual = last.residual_norm;

  // Hand back the inner solution only when it is consistent and no worse.
  const double last_objective = comm_objective(last.power, last.bandwidth, s, w);
  if (res.diagnostics.converged && last_objective <= obj) {
    res.power = last.power;
    res.bandwidth = last.bandwidth;
    res.objective = last_objective;
    res.state = last;
  } else {
    res.power = p;
    res.bandwidth = b;
    res.objective = obj;
    const auto [pb, pn] = update_parameters(p, b, s, w);
    res.state = {p, b, pb, pn, last.outer_iteration, 0.0};
    res.state.residual_norm = last.residual_norm;
  }
  return res;
}

}  // namespace vlsplit
