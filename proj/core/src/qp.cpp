#include "vlsplit/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "vlsplit/errors.hpp"

namespace vlsplit {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFeasTol = 1e-10;
constexpr double kStepTol = 1e-12;
constexpr double kDualTol = 1e-11;
constexpr double kGainTol = 1e-15;

struct ActiveSetResult {
  VectorXd x;
  VectorXd y;   // equality multipliers
  VectorXd mu;  // inequality multipliers (full length)
  std::vector<int> working;
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
};

/// Orthonormal basis of null(rows) and a QR of rows' for multiplier recovery.
struct NullSpace {
  MatrixXd Z;
  Eigen::ColPivHouseholderQR<MatrixXd> qr;
};

NullSpace null_space(const MatrixXd& rows, Index n) {
  NullSpace ns;
  if (rows.rows() == 0) {
    ns.Z = MatrixXd::Identity(n, n);
    return ns;
  }
  ns.qr.compute(rows.transpose());
  ns.qr.setThreshold(1e-12);
  const Index r = ns.qr.rank();
  MatrixXd Q = ns.qr.householderQ();
  ns.Z = Q.rightCols(n - r);
  return ns;
}

MatrixXd stack_rows(const MatrixXd& A_eq, const MatrixXd& A_in, const std::vector<int>& working) {
  MatrixXd rows(A_eq.rows() + static_cast<Index>(working.size()), A_eq.cols());
  if (A_eq.rows() > 0) rows.topRows(A_eq.rows()) = A_eq;
  for (std::size_t k = 0; k < working.size(); ++k) {
    rows.row(A_eq.rows() + static_cast<Index>(k)) = A_in.row(working[k]);
  }
  return rows;
}

// Primal active-set loop from a feasible x0. Rows are assumed unit-norm.
ActiveSetResult active_set(const MatrixXd& H, const VectorXd& c, const MatrixXd& A_eq,
                           const MatrixXd& A_in, const VectorXd& b_in, VectorXd x0, int max_iterations) {
  const Index n = c.size();
  ActiveSetResult res;
  res.x = std::move(x0);
  res.mu = VectorXd::Zero(A_in.rows());
  res.y = VectorXd::Zero(A_eq.rows());
  std::vector<bool> in_working(static_cast<std::size_t>(A_in.rows()), false);

  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    const VectorXd g = H * res.x + c;
    const MatrixXd rows = stack_rows(A_eq, A_in, res.working);
    NullSpace ns = null_space(rows, n);

    VectorXd p = VectorXd::Zero(n);
    if (ns.Z.cols() > 0) {
      const MatrixXd Hz = ns.Z.transpose() * H * ns.Z;
      Eigen::LDLT<MatrixXd> ldlt(Hz);
      p = -ns.Z * ldlt.solve(ns.Z.transpose() * g);
    }
    const double xscale = 1.0 + res.x.lpNorm<Eigen::Infinity>();

    // A step is treated as zero when it is tiny or, for ill-conditioned H,
    // when the model decrease it predicts is at roundoff level.
    const double fx = 0.5 * res.x.dot(H * res.x) + c.dot(res.x);
    const double gain = -(g.dot(p) + 0.5 * p.dot(H * p));
    const bool negligible = gain <= kGainTol * (1.0 + std::abs(fx));
    if (!p.allFinite() || p.lpNorm<Eigen::Infinity>() <= kStepTol * xscale || negligible) {
      VectorXd lambda = VectorXd::Zero(rows.rows());
      if (rows.rows() > 0) lambda = ns.qr.solve(-g);
      res.y = lambda.head(A_eq.rows());
      res.mu.setZero();
      Index worst = -1;
      double worst_value = -kDualTol * (1.0 + g.lpNorm<Eigen::Infinity>());
      for (std::size_t k = 0; k < res.working.size(); ++k) {
        const double v = lambda(A_eq.rows() + static_cast<Index>(k));
        res.mu(res.working[k]) = v;
        if (v < worst_value) {
          worst_value = v;
          worst = static_cast<Index>(k);
        }
      }
      if (worst < 0) {
        res.mu = res.mu.cwiseMax(0.0);
        res.status = QpStatus::optimal;
        return res;
      }
      in_working[static_cast<std::size_t>(res.working[static_cast<std::size_t>(worst)])] = false;
      res.working.erase(res.working.begin() + worst);
      continue;
    }

    double step = 1.0;
    int blocking = -1;
    const double pnorm = p.lpNorm<Eigen::Infinity>();
    for (Index i = 0; i < A_in.rows(); ++i) {
      if (in_working[static_cast<std::size_t>(i)]) continue;
      const double ap = A_in.row(i).dot(p);
      if (ap <= 1e-14 * pnorm) continue;
      const double slack = std::max(0.0, -(A_in.row(i).dot(res.x) + b_in(i)));
      const double t = slack / ap;
      if (t < step) {
        step = t;
        blocking = static_cast<int>(i);
      }
    }
    res.x += step * p;
    if (blocking >= 0) {
      res.working.push_back(blocking);
      in_working[static_cast<std::size_t>(blocking)] = true;
    }
  }
  res.status = QpStatus::max_iterations;
  return res;
}

double max_violation(const MatrixXd& A_in, const VectorXd& b_in, const VectorXd& x) {
  if (A_in.rows() == 0) return 0.0;
  return std::max(0.0, (A_in * x + b_in).maxCoeff());
}

}  // namespace

QpProblem QpProblem::unconstrained(Eigen::MatrixXd H, Eigen::VectorXd c) {
  const Index n = c.size();
  return QpProblem{std::move(H), std::move(c), MatrixXd(0, n), VectorXd(0), MatrixXd(0, n), VectorXd(0)};
}

std::string to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

QpSolution solve_qp(const QpProblem& problem, const QpOptions& options) {
  const Index n = problem.c.size();
  if (problem.H.rows() != n || problem.H.cols() != n) throw InvalidArgument("QP: H must be n x n");
  if (problem.A_eq.cols() != n || problem.A_eq.rows() != problem.b_eq.size()) {
    throw InvalidArgument("QP: equality block has inconsistent dimensions");
  }
  if (problem.A_in.cols() != n || problem.A_in.rows() != problem.b_in.size()) {
    throw InvalidArgument("QP: inequality block has inconsistent dimensions");
  }
  if (!problem.H.allFinite() || !problem.c.allFinite() || !problem.A_eq.allFinite() ||
      !problem.b_eq.allFinite() || !problem.A_in.allFinite() || !problem.b_in.allFinite()) {
    throw InvalidArgument("QP: non-finite data");
  }

  QpSolution sol;
  MatrixXd H = 0.5 * (problem.H + problem.H.transpose());

  // Unit-norm rows; zero rows are either trivially satisfied or infeasible.
  VectorXd eq_scale = problem.A_eq.rowwise().norm();
  VectorXd in_scale = problem.A_in.rowwise().norm();
  MatrixXd A_eq = problem.A_eq;
  VectorXd b_eq = problem.b_eq;
  MatrixXd A_in = problem.A_in;
  VectorXd b_in = problem.b_in;
  for (Index i = 0; i < A_eq.rows(); ++i) {
    if (eq_scale(i) == 0.0) {
      if (std::abs(b_eq(i)) > kFeasTol) return sol;  // infeasible
      eq_scale(i) = 1.0;
    }
    A_eq.row(i) /= eq_scale(i);
    b_eq(i) /= eq_scale(i);
  }
  for (Index i = 0; i < A_in.rows(); ++i) {
    if (in_scale(i) == 0.0) {
      if (b_in(i) > kFeasTol) return sol;
      in_scale(i) = 1.0;
    }
    A_in.row(i) /= in_scale(i);
    b_in(i) /= in_scale(i);
  }

  // Convexify on the equality null space.
  const NullSpace eq_ns = null_space(A_eq, n);
  if (eq_ns.Z.cols() > 0) {
    const MatrixXd Hz = eq_ns.Z.transpose() * H * eq_ns.Z;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Hz, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues().minCoeff();
    if (lambda_min < options.regularization_threshold) {
      sol.regularization = options.regularization_threshold - lambda_min + 1e-8;
      H.diagonal().array() += sol.regularization;
    }
  }

  // Starting point: the caller's guess or the min-norm equality solution,
  // projected onto the equalities.
  VectorXd x = options.start.value_or(VectorXd::Zero(n));
  if (x.size() != n) throw InvalidArgument("QP: start has wrong dimension");
  if (A_eq.rows() > 0) {
    const VectorXd r = A_eq * x + b_eq;
    x -= A_eq.completeOrthogonalDecomposition().solve(r);
    if ((A_eq * x + b_eq).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + b_eq.lpNorm<Eigen::Infinity>())) {
      return sol;  // inconsistent equalities
    }
  }

  int phase_one_iterations = 0;
  const double feas_tol = kFeasTol * (1.0 + x.lpNorm<Eigen::Infinity>());
  const double viol = max_violation(A_in, b_in, x);
  if (viol > feas_tol) {
    // Phase 1: min s + eps/2 (|x - x0|^2 + s^2) s.t. A_in x + b_in <= s, s >= 0.
    const Index m = A_in.rows();
    const double eps = 1e-10 / std::pow(1.0 + x.lpNorm<Eigen::Infinity>() + viol, 2);
    MatrixXd H1 = eps * MatrixXd::Identity(n + 1, n + 1);
    VectorXd c1(n + 1);
    c1 << -eps * x, 1.0;
    MatrixXd A_eq1 = MatrixXd::Zero(A_eq.rows(), n + 1);
    A_eq1.leftCols(n) = A_eq;
    MatrixXd A_in1 = MatrixXd::Zero(m + 1, n + 1);
    A_in1.topLeftCorner(m, n) = A_in;
    A_in1.col(n).head(m).setConstant(-1.0);
    A_in1(m, n) = -1.0;
    VectorXd b_in1 = VectorXd::Zero(m + 1);
    b_in1.head(m) = b_in;
    const VectorXd row_norm = A_in1.rowwise().norm();
    for (Index i = 0; i <= m; ++i) {
      A_in1.row(i) /= row_norm(i);
      b_in1(i) /= row_norm(i);
    }
    VectorXd z0(n + 1);
    z0 << x, viol;
    const ActiveSetResult p1 = active_set(H1, c1, A_eq1, A_in1, b_in1, z0, options.max_iterations);
    phase_one_iterations = p1.iterations;
    x = p1.x.head(n);
    if (max_violation(A_in, b_in, x) > 1e-9 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      sol.iterations = phase_one_iterations;
      sol.status = p1.status == QpStatus::max_iterations ? QpStatus::max_iterations : QpStatus::infeasible;
      sol.d = x;
      return sol;
    }
  }

  const ActiveSetResult r = active_set(H, problem.c, A_eq, A_in, b_in, x, options.max_iterations);
  sol.status = r.status;
  sol.iterations = phase_one_iterations + r.iterations;
  sol.d = r.x;
  sol.active_set = r.working;
  sol.duals_eq = r.y.cwiseQuotient(eq_scale);
  sol.duals_in = r.mu.cwiseQuotient(in_scale);
  sol.objective = problem.objective(sol.d);

  // KKT residual of the (possibly regularized) problem in the caller's scaling.
  VectorXd stat = H * sol.d + problem.c;
  if (problem.A_eq.rows() > 0) stat += problem.A_eq.transpose() * sol.duals_eq;
  if (problem.A_in.rows() > 0) stat += problem.A_in.transpose() * sol.duals_in;
  double kkt = stat.lpNorm<Eigen::Infinity>();
  if (problem.A_eq.rows() > 0) kkt = std::max(kkt, (problem.A_eq * sol.d + problem.b_eq).lpNorm<Eigen::Infinity>());
  if (problem.A_in.rows() > 0) {
    const VectorXd g = problem.A_in * sol.d + problem.b_in;
    kkt = std::max(kkt, std::max(0.0, g.maxCoeff()));
    kkt = std::max(kkt, sol.duals_in.cwiseProduct(g).cwiseAbs().maxCoeff());
  }
  sol.kkt_residual = kkt;
  return sol;
}

}  // namespace vlsplit
