#pragma once

#include <limits>

#include <Eigen/Dense>

namespace handsoff {

/// Dense LP with few equality rows and simple bounds:
///   minimize  cost' x   subject to  A x = b,  0 <= x <= upper.
/// An infinite upper bound leaves the variable bounded below only.
struct LPProblem {
  Eigen::VectorXd cost;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd upper;

  Eigen::Index num_vars() const { return cost.size(); }
  Eigen::Index num_rows() const { return A.rows(); }
};

enum class SolveStatus { kOptimal, kInfeasible, kIterationLimit, kNumericalFailure };

const char* to_string(SolveStatus status);

struct IpmOptions {
  double opt_tol = 1e-8;  // relative primal, dual and gap tolerance
  int max_iterations = 200;
};

/// Primal-dual iterate at termination. `y` multiplies the equality rows,
/// `z_lower` and `z_upper` are the bound multipliers.
struct LPSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd z_lower;
  Eigen::VectorXd z_upper;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_residual = 0;  // ||b - A x||_inf / (1 + ||b||_inf)
  double dual_residual = 0;    // ||c - A'y - z_l + z_u||_inf / (1 + ||c||_inf)
  double gap = 0;              // |p - d| / (1 + |p|)
  int iterations = 0;
  // Farkas vector when status == kInfeasible: b'y exceeds the largest value
  // of y'A x over the box by `certificate_margin` > 0.
  Eigen::VectorXd farkas;
  double certificate_margin = 0;
};

/// Mehrotra predictor-corrector path-following method on the bounded
/// standard form. The reduced system is the num_rows x num_rows matrix
/// A D^{-1} A', factored densely each iteration.
///
/// When the iteration does not reach optimality, a phase-1 problem
/// (minimize ||A x - b||_1 over the box) is solved; a positive optimum
/// yields a Farkas vector which is checked explicitly before the status
/// is set to kInfeasible.
LPSolution solve_ip(const LPProblem& lp, const IpmOptions& opts = {});

/// Runs only the phase-1 problem. On a verified certificate the returned
/// status is kInfeasible; kOptimal means a point with ||A x - b||_1 below
/// tolerance was found.
LPSolution phase_one(const LPProblem& lp, const IpmOptions& opts = {});

/// max over the box of y' A x subtracted from b' y. Positive means y proves
/// {A x = b, 0 <= x <= upper} empty.
double farkas_margin(const LPProblem& lp, const Eigen::VectorXd& y);

}  // namespace handsoff
