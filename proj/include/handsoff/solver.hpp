#pragma once

#include <optional>

#include <Eigen/Dense>

#include "handsoff/discretize.hpp"
#include "handsoff/lp.hpp"
#include "handsoff/model.hpp"

namespace handsoff {

/// Block-diagonal weight Lambda = blockdiag(diag(lambda), ..., diag(lambda)),
/// stored as the per-channel vector and expanded on demand.
class WeightMatrix {
 public:
  explicit WeightMatrix(Eigen::VectorXd lambda);

  const Eigen::VectorXd& lambda() const { return lambda_; }
  Eigen::Index m() const { return lambda_.size(); }

  /// diag(Lambda) for N grid slots (length m*N).
  Eigen::VectorXd expand(Eigen::Index N) const;

  WeightMatrix scaled(double factor) const;

 private:
  Eigen::VectorXd lambda_;
};

struct SolveOptions {
  double opt_tol = 1e-8;
  double feas_tol = 1e-6;            // terminal error, relative to 1 + ||x0||
  double sparsity_threshold = 1e-6;
  bool polish = true;
  int max_iterations = 200;
  int polish_rounds = 10;
  double reweight_epsilon = 1e-6;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0;  // h * sum_k sum_i lambda_i |u_i[k]|
  double dual_bound = 0;
  double primal_residual = 0;
  double dual_residual = 0;
  double gap = 0;
  int iterations = 0;  // main solve only
  int polish_iterations = 0;
  Signal signal;
  double terminal_error = 0;  // ||c + PhiN U||_2
  bool polish_applied = false;
  bool infeasibility_by_radius = false;
  // Unpolished interior-point solution, kept for comparisons.
  Eigen::VectorXd unpolished_U;
  double unpolished_objective = 0;
};

/// Split-variable LP: U = U+ - U-, U+/- in [0, 1]^{mN}, cost h*lambda on
/// both halves, equality [PhiN, -PhiN] z = -c.
LPProblem build_lp(const Discretized& dp, const WeightMatrix& w);

/// U+ - U- from a split vector.
Eigen::VectorXd recombine(const Eigen::VectorXd& z);

struct PolishResult {
  Eigen::VectorXd U;
  double objective = 0;
  bool applied = false;
  int rounds = 0;
  int iterations = 0;
};

/// Moves an optimal point toward a vertex of the optimal face: the
/// objective is capped at its optimal value and reweighted-L1 rounds
/// (w_i = 1/(|U_i| + eps)) are solved to optimality, followed by snapping
/// entries onto {-1, 0, 1} and re-solving the remaining free entries.
/// Falls back to the input (applied = false) if the result loses
/// optimality or feasibility.
PolishResult polish_to_vertex(const Discretized& dp, const WeightMatrix& w,
                              const Eigen::VectorXd& U, double objective,
                              const SolveOptions& opts, double terminal_tol);

/// As above with terminal_tol = feas_tol * (1 + ||c||).
PolishResult polish_to_vertex(const Discretized& dp, const WeightMatrix& w,
                              const Eigen::VectorXd& U, double objective,
                              const SolveOptions& opts = {});

/// build_reachability -> feasibility_radius -> build_lp -> solve_ip ->
/// polish_to_vertex.
SolveReport solve(const Problem& problem, const SolveOptions& opts = {});

/// Same pipeline on precomputed discretization data.
SolveReport solve_discretized(const Discretized& dp, const WeightMatrix& w,
                              double x0_norm, const SolveOptions& opts = {});

/// h * sum lambda_i |U|.
double l1_objective(const Eigen::VectorXd& U, const WeightMatrix& w, double h);

}  // namespace handsoff
