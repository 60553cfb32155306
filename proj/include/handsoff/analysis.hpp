#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "handsoff/discretize.hpp"
#include "handsoff/model.hpp"
#include "handsoff/solver.hpp"

namespace handsoff {

/// Discrete L0 surrogate: a slot (or a channel in a slot) is active when its
/// magnitude exceeds `threshold`; measures are h times active counts.
struct SparsityReport {
  double support_measure = 0;  // h * #{k : max_i |u_i[k]| > threshold}
  double hands_off_ratio = 1;  // (T - support_measure) / T
  Eigen::VectorXd per_channel_measure;
  Eigen::Index active_slots = 0;
  Eigen::Index active_entries = 0;  // channel-slot atoms above threshold
  double threshold = 1e-6;
};

SparsityReport sparsity(const Signal& s, double threshold = 1e-6);

/// Weighted surrogate of J0: sum_i lambda_i * per_channel_measure_i.
double l0_cost(const Signal& s, const WeightMatrix& w, double threshold = 1e-6);

/// x[k+1] = Ad x[k] + Bd u[k]; returns n x (N+1).
Trajectory simulate_discrete(const Discretized& dp, const Signal& s,
                             const Eigen::VectorXd& x0);

/// Exact flow of the continuous plant under the piecewise-constant signal,
/// sampled `substeps` times per interval (ZOH at step h/substeps).
/// Returns n x (N*substeps + 1).
Trajectory simulate_continuous(const Plant& plant, const Signal& s,
                               const Eigen::VectorXd& x0, int substeps);

/// Classical RK4 with `substeps` steps per interval; an independent
/// cross-check of simulate_continuous.
Trajectory simulate_rk4(const Plant& plant, const Signal& s,
                        const Eigen::VectorXd& x0, int substeps);

struct BaselineResult {
  Signal signal;
  bool bound_violation = false;  // ||U||_inf > 1
};

/// Minimum-norm (energy) control U = PhiN' (PhiN PhiN')^{-1} (-c).
/// Throws Error(kRankDeficient) when PhiN lacks full row rank.
BaselineResult min_energy_baseline(const Discretized& dp);

using Support = std::vector<Eigen::Index>;

struct L0OracleOptions {
  Eigen::Index max_support = -1;  // < 0: up to m*N
  double feas_tol = 1e-7;         // phase-1 residual, relative to 1 + ||c||_1
  double opt_tol = 1e-8;
};

struct L0OracleResult {
  Eigen::Index min_support = 0;       // cardinality of the J0-optimal supports
  double min_weighted_cost = 0;       // h * sum over atoms of lambda_channel
  std::vector<Support> witnesses;     // all optimal supports, lexicographic
  double best_l1_objective = 0;       // min J1 restricted to a witness support
  Eigen::VectorXd best_l1_control;    // the control achieving it
  std::int64_t supports_checked = 0;
};

inline constexpr Eigen::Index kMaxOracleVariables = 24;

/// Exhaustive search over channel-slot atoms in order of increasing
/// cardinality. For each candidate support S the set
/// {PhiN_S U_S = -c, |U_S| <= 1} is tested with a phase-1 LP.
/// Throws kExhaustiveBoundExceeded for m*N > 24, kInfeasible if no support
/// (up to max_support) is feasible.
L0OracleResult l0_oracle(const Discretized& dp, const WeightMatrix& w,
                         const L0OracleOptions& opts = {});

struct EquivalenceReport {
  SolveStatus solve_status = SolveStatus::kNumericalFailure;
  Eigen::Index l1_support = 0;  // reported L1 solution (polished when enabled)
  Eigen::Index unpolished_l1_support = 0;
  Eigen::Index l0_support = 0;
  double l1_objective = 0;
  double l1_weighted_l0 = 0;          // J0 surrogate of the reported L1 solution
  double l0_certified_objective = 0;  // minimal J0 surrogate
  double l0_witness_l1_objective = 0;
  bool polish_applied = false;
  bool l1_support_is_witness = false;
  // The optimal face of the LP has positive dimension (several L1
  // minimizers); disagreement is then attributable to non-normality.
  bool non_normal_witness = false;
  bool agree = false;
  std::vector<Support> witness_supports;
  Support l1_support_set;
};

/// True when the optimal face of the L1 program contains two points more
/// than `separation` apart in the max norm.
bool optimal_face_nontrivial(const Discretized& dp, const WeightMatrix& w,
                             double objective, const SolveOptions& opts,
                             double separation = 1e-4);

EquivalenceReport verify_equivalence(const Problem& problem,
                                     const SolveOptions& opts = {});

Support support_of(const Eigen::VectorXd& U, double threshold);

}  // namespace handsoff
