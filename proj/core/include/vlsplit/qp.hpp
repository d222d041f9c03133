#pragma once

// Dense convex QP:
//
//   minimize    1/2 d'Hd + c'd
//   subject to  A_eq d + b_eq  = 0
//               A_in d + b_in <= 0
//
// Primal active-set method; each equality-constrained subproblem is solved in
// the null space of the working-set rows.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace vlsplit {

struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;

  /// Unconstrained problem of dimension H.rows(); constraint blocks empty.
  static QpProblem unconstrained(Eigen::MatrixXd H, Eigen::VectorXd c);

  Eigen::Index size() const { return c.size(); }
  double objective(const Eigen::VectorXd& d) const { return 0.5 * d.dot(H * d) + c.dot(d); }
};

enum class QpStatus { optimal, infeasible, max_iterations };

std::string to_string(QpStatus status);

struct QpOptions {
  int max_iterations = 500;
  /// Minimum eigenvalue allowed for H restricted to the equality null space.
  double regularization_threshold = 1e-8;
  /// Optional starting point; used when feasible (after projection onto the equalities).
  std::optional<Eigen::VectorXd> start;
};

struct QpSolution {
  Eigen::VectorXd d;
  Eigen::VectorXd duals_eq;
  Eigen::VectorXd duals_in;  // >= 0, zero for inactive rows
  QpStatus status = QpStatus::infeasible;
  double kkt_residual = 0.0;
  double objective = 0.0;       // with the caller's (unregularized) H
  double regularization = 0.0;  // shift added to H's diagonal
  int iterations = 0;
  std::vector<int> active_set;  // indices into A_in
};

/// Throws InvalidArgument on dimension mismatch; solver trouble is reported via `status`.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace vlsplit
