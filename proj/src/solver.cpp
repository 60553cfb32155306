#include "handsoff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace handsoff {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kOvershootClamp = 1e-9;

Index count_nonzero(const VectorXd& U, double threshold) {
  return (U.array().abs() > threshold).count();
}

VectorXd clamp_unit(VectorXd U) {
  for (Index i = 0; i < U.size(); ++i) {
    if (U[i] > 1.0 && U[i] <= 1.0 + kOvershootClamp) U[i] = 1.0;
    if (U[i] < -1.0 && U[i] >= -1.0 - kOvershootClamp) U[i] = -1.0;
  }
  return U;
}

// Snaps entries within `tol` of {-1, 0, 1} and corrects the remaining free
// entries by the least-norm change restoring PhiN U = -c.
std::optional<VectorXd> snap_to_vertex(const Discretized& dp, const VectorXd& U,
                                       double tol) {
  const Index K = U.size();
  VectorXd out = U;
  std::vector<Index> free;
  for (Index i = 0; i < K; ++i) {
    const double r = std::round(U[i]);
    if (std::abs(r) <= 1.0 && std::abs(U[i] - r) <= tol) {
      out[i] = r + 0.0;  // no negative zero
    } else {
      free.push_back(i);
    }
  }
  const VectorXd residual = -dp.c - dp.PhiN * out;
  if (!free.empty()) {
    MatrixXd Pf(dp.n(), static_cast<Index>(free.size()));
    for (Index j = 0; j < Pf.cols(); ++j) Pf.col(j) = dp.PhiN.col(free[j]);
    const VectorXd delta = Pf.completeOrthogonalDecomposition().solve(residual);
    for (Index j = 0; j < Pf.cols(); ++j) out[free[j]] += delta[j];
  }
  out = clamp_unit(out);
  if ((out.array().abs() > 1.0).any()) return std::nullopt;
  return out;
}

}  // namespace

WeightMatrix::WeightMatrix(VectorXd lambda) : lambda_(std::move(lambda)) {
  for (Index i = 0; i < lambda_.size(); ++i) {
    if (!(lambda_[i] > 0.0) || !std::isfinite(lambda_[i])) {
      throw Error(ErrorCode::kNonpositiveWeight,
                  "weights must be finite and strictly positive", "weights");
    }
  }
}

VectorXd WeightMatrix::expand(Index N) const {
  return lambda_.replicate(N, 1);
}

WeightMatrix WeightMatrix::scaled(double factor) const {
  return WeightMatrix(lambda_ * factor);
}

double l1_objective(const VectorXd& U, const WeightMatrix& w, double h) {
  const Index m = w.m();
  double sum = 0.0;
  for (Index i = 0; i < U.size(); ++i) sum += w.lambda()[i % m] * std::abs(U[i]);
  return h * sum;
}

LPProblem build_lp(const Discretized& dp, const WeightMatrix& w) {
  if (w.m() != dp.m()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weight vector length differs from input dimension", "weights");
  }
  const Index K = dp.PhiN.cols();
  LPProblem lp;
  const VectorXd lam = w.expand(dp.N) * dp.h;
  lp.cost.resize(2 * K);
  lp.cost << lam, lam;
  lp.A.resize(dp.n(), 2 * K);
  lp.A << dp.PhiN, -dp.PhiN;
  lp.b = -dp.c;
  lp.upper = VectorXd::Ones(2 * K);
  return lp;
}

VectorXd recombine(const VectorXd& z) {
  const Index K = z.size() / 2;
  return z.head(K) - z.tail(K);
}

PolishResult polish_to_vertex(const Discretized& dp, const WeightMatrix& w,
                              const VectorXd& U, double objective,
                              const SolveOptions& opts, double terminal_tol) {
  PolishResult result;
  result.U = U;
  result.objective = objective;

  const Index K = U.size();
  const Index n = dp.n();
  const double cap = objective + 0.5e-7 * (1.0 + std::abs(objective));
  const VectorXd lam = w.expand(dp.N) * dp.h;

  // Optimal-face LP: [PhiN, -PhiN, 0; lam', lam', 1] [z+; z-; s] = [-c; cap].
  LPProblem face;
  face.A = MatrixXd::Zero(n + 1, 2 * K + 1);
  face.A.topLeftCorner(n, K) = dp.PhiN;
  face.A.block(0, K, n, K) = -dp.PhiN;
  face.A.block(n, 0, 1, K) = lam.transpose();
  face.A.block(n, K, 1, K) = lam.transpose();
  face.A(n, 2 * K) = 1.0;
  face.b.resize(n + 1);
  face.b << -dp.c, cap;
  face.upper = VectorXd::Ones(2 * K + 1);
  face.upper[2 * K] = std::numeric_limits<double>::infinity();

  IpmOptions ipm{opts.opt_tol, opts.max_iterations};
  VectorXd current = U;
  for (int round = 0; round < opts.polish_rounds; ++round) {
    VectorXd omega(K);
    for (Index i = 0; i < K; ++i) {
      // The ramp separates exact ties, where the analytic center would
      // otherwise be reproduced unchanged.
      const double ramp = 1.0 + 1e-2 * static_cast<double>(i) / static_cast<double>(K);
      omega[i] = ramp / (std::abs(current[i]) + opts.reweight_epsilon);
    }
    omega /= omega.maxCoeff();
    face.cost.resize(2 * K + 1);
    face.cost << omega, omega, 0.0;

    const LPSolution sol = solve_ip(face, ipm);
    result.iterations += sol.iterations;
    if (sol.status != SolveStatus::kOptimal) break;
    const VectorXd next = clamp_unit(recombine(sol.x.head(2 * K)));
    ++result.rounds;
    const double change = (next - current).cwiseAbs().maxCoeff();
    const bool same_support =
        ((next.array().abs() > opts.sparsity_threshold) ==
         (current.array().abs() > opts.sparsity_threshold))
            .all();
    current = next;
    if (round > 0 && same_support && change < 1e-9) break;
  }

  VectorXd candidate = current;
  if (auto snapped = snap_to_vertex(dp, current, opts.sparsity_threshold)) {
    if ((dp.c + dp.PhiN * *snapped).norm() <= terminal_tol) candidate = *snapped;
  }

  const double cand_obj = l1_objective(candidate, w, dp.h);
  const double cand_err = (dp.c + dp.PhiN * candidate).norm();
  const bool no_worse = cand_obj <= objective + 1e-7 * (1.0 + std::abs(objective));
  const bool sparser_or_equal = count_nonzero(candidate, opts.sparsity_threshold) <=
                                count_nonzero(U, opts.sparsity_threshold);
  const bool admissible = (candidate.array().abs() <= 1.0 + kOvershootClamp).all();
  if (no_worse && sparser_or_equal && admissible && cand_err <= terminal_tol) {
    result.U = candidate;
    result.objective = cand_obj;
    result.applied = true;
  }
  return result;
}

PolishResult polish_to_vertex(const Discretized& dp, const WeightMatrix& w,
                              const VectorXd& U, double objective,
                              const SolveOptions& opts) {
  return polish_to_vertex(dp, w, U, objective, opts,
                          opts.feas_tol * (1.0 + dp.c.norm()));
}

SolveReport solve_discretized(const Discretized& dp, const WeightMatrix& w,
                              double x0_norm, const SolveOptions& opts) {
  SolveReport rep;
  const Index K = dp.PhiN.cols();
  rep.signal = Signal{VectorXd::Zero(K), dp.h, dp.m(), dp.N};
  rep.unpolished_U = rep.signal.U;
  const double terminal_tol = opts.feas_tol * (1.0 + x0_norm);

  // x0 = 0 (or a free response ending at the origin): U = 0 is feasible
  // with zero cost, and y = 0 is a dual point with the same value.
  if ((dp.c.array() == 0.0).all()) {
    rep.status = SolveStatus::kOptimal;
    return rep;
  }

  if (feasibility_radius(dp) < 0.0) {
    rep.status = SolveStatus::kInfeasible;
    rep.infeasibility_by_radius = true;
    rep.terminal_error = dp.c.norm();
    return rep;
  }

  const LPProblem lp = build_lp(dp, w);
  const LPSolution sol = solve_ip(lp, IpmOptions{opts.opt_tol, opts.max_iterations});
  rep.status = sol.status;
  rep.iterations = sol.iterations;
  rep.primal_residual = sol.primal_residual;
  rep.dual_residual = sol.dual_residual;
  rep.gap = sol.gap;
  rep.dual_bound = sol.dual_objective;
  if (sol.status != SolveStatus::kOptimal) {
    rep.terminal_error = dp.c.norm();
    return rep;
  }

  VectorXd U = clamp_unit(recombine(sol.x));
  rep.unpolished_U = U;
  rep.unpolished_objective = l1_objective(U, w, dp.h);
  rep.objective = rep.unpolished_objective;
  rep.terminal_error = (dp.c + dp.PhiN * U).norm();
  if (rep.terminal_error > terminal_tol ||
      (U.array().abs() > 1.0 + kOvershootClamp).any()) {
    rep.status = SolveStatus::kNumericalFailure;
    return rep;
  }

  if (opts.polish) {
    const PolishResult pol = polish_to_vertex(dp, w, U, rep.objective, opts, terminal_tol);
    rep.polish_iterations = pol.iterations;
    if (pol.applied) {
      U = pol.U;
      rep.objective = pol.objective;
      rep.polish_applied = true;
      rep.terminal_error = (dp.c + dp.PhiN * U).norm();
    }
  }
  rep.signal.U = U;
  return rep;
}

SolveReport solve(const Problem& problem, const SolveOptions& opts) {
  validate_problem(problem);
  const Discretized dp = build_reachability(problem);
  return solve_discretized(dp, WeightMatrix(problem.weights), problem.x0.norm(), opts);
}

}  // namespace handsoff
