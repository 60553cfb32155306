#include "handsoff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "handsoff/lp.hpp"

namespace handsoff {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_signal(const Signal& s) {
  if (s.m < 1 || s.N < 1 || s.U.size() != s.m * s.N) {
    throw Error(ErrorCode::kLengthMismatch, "signal length must equal m*N", "U");
  }
}

void check_compatible(const Discretized& dp, const Signal& s, const VectorXd& x0) {
  check_signal(s);
  if (s.m != dp.m() || s.N != dp.N) {
    throw Error(ErrorCode::kDimensionMismatch, "signal dimensions differ from plant grid");
  }
  if (x0.size() != dp.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "x0 length differs from n", "x0");
  }
}

// Advances the lexicographic k-combination `idx` of {0..K-1}.
bool next_combination(std::vector<Index>& idx, Index K) {
  const Index k = static_cast<Index>(idx.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (idx[i] < K - k + i) {
      ++idx[i];
      for (Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
      return true;
    }
  }
  return false;
}

MatrixXd columns(const MatrixXd& M, const Support& S) {
  MatrixXd out(M.rows(), static_cast<Index>(S.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = M.col(S[j]);
  return out;
}

struct SupportCheck {
  bool feasible = false;
  VectorXd control;  // on the support, when feasible
};

// Minimum-J1 control restricted to the columns in `S`.
std::optional<VectorXd> restricted_l1(const MatrixXd& Ps, const VectorXd& c,
                                      const VectorXd& cost, double opt_tol) {
  const Index k = Ps.cols();
  LPProblem lp;
  lp.cost.resize(2 * k);
  lp.cost << cost, cost;
  lp.A.resize(Ps.rows(), 2 * k);
  lp.A << Ps, -Ps;
  lp.b = -c;
  lp.upper = VectorXd::Ones(2 * k);
  const LPSolution sol = solve_ip(lp, IpmOptions{opt_tol, 200});
  if (sol.status != SolveStatus::kOptimal) return std::nullopt;
  return VectorXd(sol.x.head(k) - sol.x.tail(k));
}

SupportCheck check_support(const Discretized& dp, const Support& S,
                           const L0OracleOptions& opts, double tol) {
  SupportCheck out;
  const VectorXd& c = dp.c;
  if (S.empty()) {
    out.feasible = c.norm() <= tol;
    out.control = VectorXd(0);
    return out;
  }
  const MatrixXd Ps = columns(dp.PhiN, S);

  // Row-wise reach bound: |c_r| cannot exceed sum_j |Ps(r, j)|.
  const VectorXd reach = Ps.cwiseAbs().rowwise().sum();
  if (((c.cwiseAbs() - reach).array() > tol).any()) return out;

  const Eigen::ColPivHouseholderQR<MatrixXd> qr(Ps);
  const VectorXd v = qr.solve(-c);
  if ((Ps * v + c).norm() > tol) return out;
  if (qr.rank() == Ps.cols()) {
    // Unique solution on this support.
    if (v.cwiseAbs().maxCoeff() <= 1.0 + 1e-9) {
      out.feasible = true;
      out.control = v.cwiseMax(-1.0).cwiseMin(1.0);
    }
    return out;
  }

  // U_S = 2 x - 1 with x in [0, 1].
  LPProblem lp;
  lp.cost = VectorXd::Zero(Ps.cols());
  lp.A = 2.0 * Ps;
  lp.b = -c + Ps.rowwise().sum();
  lp.upper = VectorXd::Ones(Ps.cols());
  const LPSolution p1 = phase_one(lp, IpmOptions{opts.opt_tol, 200});
  if (p1.status == SolveStatus::kInfeasible) return out;
  const VectorXd U = (2.0 * p1.x.array() - 1.0).matrix();
  if ((Ps * U + c).norm() <= tol) {
    out.feasible = true;
    out.control = U;
  }
  return out;
}

}  // namespace

SparsityReport sparsity(const Signal& s, double threshold) {
  check_signal(s);
  if (!(threshold > 0.0)) {
    throw Error(ErrorCode::kDimensionMismatch, "sparsity threshold must be > 0", "threshold");
  }
  SparsityReport r;
  r.threshold = threshold;
  r.per_channel_measure = VectorXd::Zero(s.m);
  for (Index k = 0; k < s.N; ++k) {
    bool active = false;
    for (Index i = 0; i < s.m; ++i) {
      if (std::abs(s.U[k * s.m + i]) > threshold) {
        active = true;
        ++r.active_entries;
        r.per_channel_measure[i] += 1.0;
      }
    }
    if (active) ++r.active_slots;
  }
  r.per_channel_measure *= s.h;
  r.support_measure = s.h * static_cast<double>(r.active_slots);
  r.hands_off_ratio = static_cast<double>(s.N - r.active_slots) / static_cast<double>(s.N);
  return r;
}

double l0_cost(const Signal& s, const WeightMatrix& w, double threshold) {
  const SparsityReport r = sparsity(s, threshold);
  if (w.m() != s.m) throw Error(ErrorCode::kDimensionMismatch, "weights length differs from m");
  return w.lambda().dot(r.per_channel_measure);
}

Support support_of(const VectorXd& U, double threshold) {
  Support S;
  for (Index i = 0; i < U.size(); ++i) {
    if (std::abs(U[i]) > threshold) S.push_back(i);
  }
  return S;
}

Trajectory simulate_discrete(const Discretized& dp, const Signal& s, const VectorXd& x0) {
  check_compatible(dp, s, x0);
  Trajectory X(dp.n(), s.N + 1);
  X.col(0) = x0;
  for (Index k = 0; k < s.N; ++k) {
    X.col(k + 1).noalias() = dp.Ad * X.col(k) + dp.Bd * s.at(k);
  }
  return X;
}

Trajectory simulate_continuous(const Plant& plant, const Signal& s, const VectorXd& x0,
                               int substeps) {
  check_signal(s);
  if (substeps < 1) throw Error(ErrorCode::kInvalidGrid, "substeps must be >= 1", "substeps");
  if (s.m != plant.m() || x0.size() != plant.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "signal or x0 inconsistent with plant");
  }
  const auto [Ad, Bd] = zoh_discretize(plant, s.h / substeps);
  Trajectory X(plant.n(), s.N * substeps + 1);
  X.col(0) = x0;
  Index col = 0;
  for (Index k = 0; k < s.N; ++k) {
    const VectorXd Bu = Bd * s.at(k);
    for (int j = 0; j < substeps; ++j, ++col) {
      X.col(col + 1).noalias() = Ad * X.col(col) + Bu;
    }
  }
  return X;
}

Trajectory simulate_rk4(const Plant& plant, const Signal& s, const VectorXd& x0,
                        int substeps) {
  check_signal(s);
  if (substeps < 1) throw Error(ErrorCode::kInvalidGrid, "substeps must be >= 1", "substeps");
  if (s.m != plant.m() || x0.size() != plant.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "signal or x0 inconsistent with plant");
  }
  const double dt = s.h / substeps;
  Trajectory X(plant.n(), s.N * substeps + 1);
  X.col(0) = x0;
  Index col = 0;
  for (Index k = 0; k < s.N; ++k) {
    const VectorXd Bu = plant.B * s.at(k);
    auto f = [&](const VectorXd& x) -> VectorXd { return plant.A * x + Bu; };
    for (int j = 0; j < substeps; ++j, ++col) {
      const VectorXd x = X.col(col);
      const VectorXd k1 = f(x);
      const VectorXd k2 = f(x + 0.5 * dt * k1);
      const VectorXd k3 = f(x + 0.5 * dt * k2);
      const VectorXd k4 = f(x + dt * k3);
      X.col(col + 1) = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return X;
}

BaselineResult min_energy_baseline(const Discretized& dp) {
  BaselineResult out;
  out.signal = Signal{VectorXd::Zero(dp.PhiN.cols()), dp.h, dp.m(), dp.N};
  const Eigen::ColPivHouseholderQR<MatrixXd> qr(dp.PhiN.transpose());
  if (qr.rank() < dp.n()) {
    throw Error(ErrorCode::kRankDeficient,
                "reachability matrix has rank " + std::to_string(qr.rank()) + " < n = " +
                    std::to_string(dp.n()));
  }
  const MatrixXd G = dp.PhiN * dp.PhiN.transpose();
  const Eigen::LLT<MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kRankDeficient, "PhiN PhiN' is not positive definite");
  }
  out.signal.U = dp.PhiN.transpose() * llt.solve(-dp.c);
  out.bound_violation = out.signal.U.size() > 0 && out.signal.U.cwiseAbs().maxCoeff() > 1.0;
  return out;
}

L0OracleResult l0_oracle(const Discretized& dp, const WeightMatrix& w,
                         const L0OracleOptions& opts) {
  const Index K = dp.PhiN.cols();
  if (K > kMaxOracleVariables) {
    throw Error(ErrorCode::kExhaustiveBoundExceeded,
                "exhaustive L0 search is limited to m*N <= 24 (got " + std::to_string(K) + ")");
  }
  if (w.m() != dp.m()) throw Error(ErrorCode::kDimensionMismatch, "weights length differs from m");
  const Index kmax = opts.max_support < 0 ? K : std::min(opts.max_support, K);
  const double tol = opts.feas_tol * (1.0 + dp.c.lpNorm<1>());
  const VectorXd atom_cost = w.expand(dp.N) * dp.h;
  const double cheapest = atom_cost.size() ? atom_cost.minCoeff() : 0.0;

  L0OracleResult out;
  double best = std::numeric_limits<double>::infinity();
  struct Found {
    Support support;
    double cost;
    VectorXd control;
  };
  std::vector<Found> found;

  for (Index k = 0; k <= kmax; ++k) {
    // Any support of size k costs at least k * cheapest.
    if (static_cast<double>(k) * cheapest > best * (1.0 + 1e-12)) break;
    Support idx(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) idx[i] = i;
    do {
      double cost = 0.0;
      for (Index j : idx) cost += atom_cost[j];
      if (cost > best * (1.0 + 1e-12)) continue;
      ++out.supports_checked;
      SupportCheck chk = check_support(dp, idx, opts, tol);
      if (!chk.feasible) continue;
      if (cost < best * (1.0 - 1e-12)) {
        best = cost;
        found.clear();
      }
      found.push_back({idx, cost, std::move(chk.control)});
    } while (k > 0 && next_combination(idx, K));
  }
  if (found.empty()) {
    throw Error(ErrorCode::kInfeasible, "no support up to the search bound reaches the origin");
  }

  std::sort(found.begin(), found.end(),
            [](const Found& a, const Found& b) { return a.support < b.support; });
  out.min_weighted_cost = best;
  out.min_support = static_cast<Index>(found.front().support.size());
  out.best_l1_objective = std::numeric_limits<double>::infinity();
  for (const Found& f : found) {
    out.min_support = std::min(out.min_support, static_cast<Index>(f.support.size()));
    out.witnesses.push_back(f.support);
    VectorXd ctrl = f.control;
    if (!f.support.empty()) {
      VectorXd cost(static_cast<Index>(f.support.size()));
      for (Index j = 0; j < cost.size(); ++j) cost[j] = atom_cost[f.support[j]];
      if (auto better = restricted_l1(columns(dp.PhiN, f.support), dp.c, cost, opts.opt_tol)) {
        ctrl = *better;
      }
    }
    double j1 = 0.0;
    for (Index j = 0; j < ctrl.size(); ++j) j1 += atom_cost[f.support[j]] * std::abs(ctrl[j]);
    if (j1 < out.best_l1_objective) {
      out.best_l1_objective = j1;
      out.best_l1_control = VectorXd::Zero(K);
      for (Index j = 0; j < ctrl.size(); ++j) out.best_l1_control[f.support[j]] = ctrl[j];
    }
  }
  return out;
}

bool optimal_face_nontrivial(const Discretized& dp, const WeightMatrix& w, double objective,
                             const SolveOptions& opts, double separation) {
  const Index K = dp.PhiN.cols();
  const Index n = dp.n();
  const VectorXd lam = w.expand(dp.N) * dp.h;
  const double cap = objective + 1e-9 * (1.0 + std::abs(objective));

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

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 2; ++trial) {
    VectorXd g(K);
    for (Index i = 0; i < K; ++i) g[i] = dist(rng);
    VectorXd ends[2];
    for (int sign = 0; sign < 2; ++sign) {
      const VectorXd dir = sign == 0 ? g : VectorXd(-g);
      face.cost.resize(2 * K + 1);
      face.cost << dir, -dir, 0.0;
      const LPSolution sol = solve_ip(face, IpmOptions{opts.opt_tol, opts.max_iterations});
      if (sol.status != SolveStatus::kOptimal) return false;
      ends[sign] = recombine(sol.x.head(2 * K));
    }
    if ((ends[0] - ends[1]).cwiseAbs().maxCoeff() > separation) return true;
  }
  return false;
}

EquivalenceReport verify_equivalence(const Problem& problem, const SolveOptions& opts) {
  validate_problem(problem);
  const Discretized dp = build_reachability(problem);
  const Index K = dp.PhiN.cols();
  if (K > kMaxOracleVariables) {
    throw Error(ErrorCode::kExhaustiveBoundExceeded,
                "verify-equivalence requires m*N <= 24 (got " + std::to_string(K) + ")");
  }
  const WeightMatrix w(problem.weights);
  const double thr = opts.sparsity_threshold;

  EquivalenceReport rep;
  const SolveReport sol = solve_discretized(dp, w, problem.x0.norm(), opts);
  rep.solve_status = sol.status;
  if (sol.status != SolveStatus::kOptimal) {
    if (sol.status == SolveStatus::kInfeasible) {
      throw Error(ErrorCode::kInfeasible, "problem is infeasible; nothing to compare");
    }
    return rep;
  }
  const L0OracleResult l0 = l0_oracle(dp, w);

  rep.l1_support_set = support_of(sol.signal.U, thr);
  rep.l1_support = static_cast<Index>(rep.l1_support_set.size());
  rep.unpolished_l1_support = static_cast<Index>(support_of(sol.unpolished_U, thr).size());
  rep.l0_support = l0.min_support;
  rep.l1_objective = sol.objective;
  rep.l1_weighted_l0 = l0_cost(sol.signal, w, thr);
  rep.l0_certified_objective = l0.min_weighted_cost;
  rep.l0_witness_l1_objective = l0.best_l1_objective;
  rep.polish_applied = sol.polish_applied;
  rep.witness_supports = l0.witnesses;
  rep.l1_support_is_witness =
      std::find(l0.witnesses.begin(), l0.witnesses.end(), rep.l1_support_set) !=
      l0.witnesses.end();
  const bool same_cost = std::abs(rep.l1_weighted_l0 - rep.l0_certified_objective) <=
                         1e-12 * (1.0 + rep.l0_certified_objective);
  rep.agree = rep.l1_support == rep.l0_support && same_cost && rep.l1_support_is_witness;

  const bool two_minimizers =
      (sol.signal.U - sol.unpolished_U).cwiseAbs().maxCoeff() > 1e-4;
  rep.non_normal_witness =
      two_minimizers || optimal_face_nontrivial(dp, w, sol.unpolished_objective, opts);
  return rep;
}

}  // namespace handsoff
