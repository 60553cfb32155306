#include "handsoff/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "handsoff/errors.hpp"

namespace handsoff {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kInfeasible:
      return "infeasible";
    case SolveStatus::kIterationLimit:
      return "iteration_limit";
    case SolveStatus::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_shapes(const LPProblem& lp) {
  const Index nv = lp.cost.size();
  if (lp.A.cols() != nv || lp.upper.size() != nv || lp.b.size() != lp.A.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "LP data has inconsistent shapes");
  }
  for (Index i = 0; i < nv; ++i) {
    if (!(lp.upper[i] > 0.0)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "LP upper bounds must be strictly positive");
    }
  }
}

double inf_norm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Largest step in (0, 1] keeping v + a*dv >= 0, damped by eta.
double max_step(const VectorXd& v, const VectorXd& dv, double eta) {
  double a = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) a = std::min(a, -eta * v[i] / dv[i]);
  }
  return a;
}

struct Residuals {
  double primal;
  double dual;
  double gap;
  double pobj;
  double dobj;
};

// Relative measures on the original (unscaled) data.
Residuals measure(const LPProblem& lp, const std::vector<char>& bounded,
                  const VectorXd& x, const VectorXd& y, const VectorXd& z,
                  const VectorXd& s) {
  Residuals r{};
  r.primal = inf_norm(lp.b - lp.A * x) / (1.0 + inf_norm(lp.b));
  VectorXd rd = lp.cost - lp.A.transpose() * y - z + s;
  r.dual = inf_norm(rd) / (1.0 + inf_norm(lp.cost));
  r.pobj = lp.cost.dot(x);
  double ub_term = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (bounded[i]) ub_term += lp.upper[i] * s[i];
  }
  r.dobj = lp.b.dot(y) - ub_term;
  r.gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj));
  return r;
}

// The interior-point iteration proper. Never sets kInfeasible.
LPSolution ipm_core(const LPProblem& lp, const IpmOptions& opts) {
  const Index nv = lp.num_vars();
  const Index nr = lp.num_rows();

  std::vector<char> bounded(nv);
  Index nb = 0;
  for (Index i = 0; i < nv; ++i) {
    bounded[i] = std::isfinite(lp.upper[i]) ? 1 : 0;
    nb += bounded[i];
  }

  // Row equilibration and cost normalization.
  VectorXd row_scale = VectorXd::Ones(nr);
  for (Index k = 0; k < nr; ++k) {
    const double mx = nv > 0 ? lp.A.row(k).cwiseAbs().maxCoeff() : 0.0;
    if (mx > 0.0) row_scale[k] = 1.0 / mx;
  }
  const double cmax = inf_norm(lp.cost);
  const double cost_scale = cmax > 0.0 ? 1.0 / cmax : 1.0;
  const MatrixXd A = row_scale.asDiagonal() * lp.A;
  const VectorXd b = row_scale.cwiseProduct(lp.b);
  const VectorXd c = lp.cost * cost_scale;
  const VectorXd& u = lp.upper;

  VectorXd x(nv), w = VectorXd::Zero(nv), z(nv), s = VectorXd::Zero(nv);
  VectorXd y = VectorXd::Zero(nr);
  for (Index i = 0; i < nv; ++i) {
    if (bounded[i]) {
      x[i] = 0.5 * u[i];
      w[i] = 0.5 * u[i];
      z[i] = 1.0 + std::max(c[i], 0.0);
      s[i] = 1.0 + std::max(-c[i], 0.0);
    } else {
      x[i] = 1.0;
      z[i] = 1.0 + std::abs(c[i]);
    }
  }

  LPSolution sol;
  const double comp_count = static_cast<double>(nv + nb);
  auto unscaled = [&](LPSolution& out) {
    out.x = x;
    out.y = row_scale.cwiseProduct(y) / cost_scale;
    out.z_lower = z / cost_scale;
    out.z_upper = s / cost_scale;
    const Residuals r = measure(lp, bounded, out.x, out.y, out.z_lower, out.z_upper);
    out.primal_residual = r.primal;
    out.dual_residual = r.dual;
    out.gap = r.gap;
    out.primal_objective = r.pobj;
    out.dual_objective = r.dobj;
    return r;
  };

  VectorXd dx(nv), dw(nv), dz(nv), ds(nv), dy(nr);
  VectorXd dinv(nv), rho(nv);
  double best_primal = kInf;
  int stall = 0;

  for (int iter = 0; iter <= opts.max_iterations; ++iter) {
    sol.iterations = iter;
    const Residuals r = unscaled(sol);
    if (!std::isfinite(r.primal) || !std::isfinite(r.dual) || !std::isfinite(r.gap)) {
      sol.status = SolveStatus::kNumericalFailure;
      return sol;
    }
    if (r.primal <= opts.opt_tol && r.dual <= opts.opt_tol && r.gap <= opts.opt_tol) {
      sol.status = SolveStatus::kOptimal;
      return sol;
    }
    if (iter == opts.max_iterations) break;

    // Infeasible problems make the primal residual stall while the dual
    // iterate runs off along a ray; stop early and let phase 1 decide.
    if (r.primal < 0.5 * best_primal) {
      best_primal = r.primal;
      stall = 0;
    } else if (++stall >= 25 && r.primal > 1e3 * opts.opt_tol) {
      break;
    }
    if (inf_norm(y) > 1e12) break;

    const VectorXd rp = b - A * x;
    VectorXd ru = VectorXd::Zero(nv);
    VectorXd rd = c - A.transpose() * y - z;
    for (Index i = 0; i < nv; ++i) {
      if (bounded[i]) {
        ru[i] = u[i] - x[i] - w[i];
        rd[i] += s[i];
      }
    }
    double mu = x.dot(z) + w.dot(s);
    mu /= comp_count;

    for (Index i = 0; i < nv; ++i) {
      double d = z[i] / x[i];
      if (bounded[i]) d += s[i] / w[i];
      dinv[i] = 1.0 / d;
    }
    MatrixXd M = A * dinv.asDiagonal() * A.transpose();
    const double reg = 1e-13 * (1.0 + (nr > 0 ? M.diagonal().cwiseAbs().maxCoeff() : 0.0));
    M.diagonal().array() += reg;
    Eigen::LDLT<MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) {
      sol.status = SolveStatus::kNumericalFailure;
      return sol;
    }

    // Solves the Newton system for given complementarity right-hand sides.
    auto newton = [&](const VectorXd& rxz, const VectorXd& rws) {
      for (Index i = 0; i < nv; ++i) {
        rho[i] = rd[i] - rxz[i] / x[i];
        if (bounded[i]) rho[i] += (rws[i] - s[i] * ru[i]) / w[i];
      }
      dy = ldlt.solve(rp + A * dinv.cwiseProduct(rho));
      dx = dinv.cwiseProduct(A.transpose() * dy - rho);
      for (Index i = 0; i < nv; ++i) {
        dz[i] = (rxz[i] - z[i] * dx[i]) / x[i];
        if (bounded[i]) {
          dw[i] = ru[i] - dx[i];
          ds[i] = (rws[i] - s[i] * dw[i]) / w[i];
        } else {
          dw[i] = 0.0;
          ds[i] = 0.0;
        }
      }
    };

    // Predictor.
    VectorXd rxz = -x.cwiseProduct(z);
    VectorXd rws = -w.cwiseProduct(s);
    newton(rxz, rws);
    const double ap_aff = std::min(max_step(x, dx, 1.0), max_step(w, dw, 1.0));
    const double ad_aff = std::min(max_step(z, dz, 1.0), max_step(s, ds, 1.0));
    const double mu_aff = ((x + ap_aff * dx).dot(z + ad_aff * dz) +
                           (w + ap_aff * dw).dot(s + ad_aff * ds)) /
                          comp_count;
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    for (Index i = 0; i < nv; ++i) {
      rxz[i] = sigma * mu - x[i] * z[i] - dx[i] * dz[i];
      rws[i] = bounded[i] ? sigma * mu - w[i] * s[i] - dw[i] * ds[i] : 0.0;
    }
    newton(rxz, rws);
    if (!dx.allFinite() || !dy.allFinite() || !dz.allFinite() || !ds.allFinite()) {
      sol.status = SolveStatus::kNumericalFailure;
      return sol;
    }

    const double eta = std::max(0.9, 1.0 - mu);
    const double eta_c = std::min(eta, 0.9999);
    const double ap = std::min(max_step(x, dx, eta_c), max_step(w, dw, eta_c));
    const double ad = std::min(max_step(z, dz, eta_c), max_step(s, ds, eta_c));

    x += ap * dx;
    w += ap * dw;
    y += ad * dy;
    z += ad * dz;
    s += ad * ds;
    for (Index i = 0; i < nv; ++i) {
      x[i] = std::max(x[i], 1e-300);
      z[i] = std::max(z[i], 1e-300);
      if (bounded[i]) {
        w[i] = std::max(w[i], 1e-300);
        s[i] = std::max(s[i], 1e-300);
      }
    }
  }
  sol.status = SolveStatus::kIterationLimit;
  return sol;
}

// [A, I, -I] with unit cost on the residual columns.
LPProblem phase_one_problem(const LPProblem& lp) {
  const Index nv = lp.num_vars();
  const Index nr = lp.num_rows();
  LPProblem p1;
  p1.cost = VectorXd::Zero(nv + 2 * nr);
  p1.cost.tail(2 * nr).setOnes();
  p1.A = MatrixXd::Zero(nr, nv + 2 * nr);
  p1.A.leftCols(nv) = lp.A;
  p1.A.middleCols(nv, nr).setIdentity();
  p1.A.rightCols(nr) = -MatrixXd::Identity(nr, nr);
  p1.b = lp.b;
  p1.upper = VectorXd::Constant(nv + 2 * nr, kInf);
  p1.upper.head(nv) = lp.upper;
  return p1;
}

}  // namespace

double farkas_margin(const LPProblem& lp, const VectorXd& y) {
  const VectorXd g = lp.A.transpose() * y;
  double box_max = 0.0;
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] <= 0.0) continue;
    if (!std::isfinite(lp.upper[i])) return -kInf;
    box_max += lp.upper[i] * g[i];
  }
  return lp.b.dot(y) - box_max;
}

LPSolution phase_one(const LPProblem& lp, const IpmOptions& opts) {
  check_shapes(lp);
  const Index nv = lp.num_vars();
  const Index nr = lp.num_rows();
  LPSolution p1 = ipm_core(phase_one_problem(lp), opts);

  LPSolution out;
  out.iterations = p1.iterations;
  out.x = p1.x.head(nv);
  out.y = p1.y;
  out.primal_objective = p1.primal_objective;  // ||A x - b||_1 at the iterate
  out.dual_objective = p1.dual_objective;
  out.primal_residual = inf_norm(lp.b - lp.A * out.x) / (1.0 + inf_norm(lp.b));
  out.dual_residual = p1.dual_residual;
  out.gap = p1.gap;
  out.z_lower = p1.z_lower.size() ? VectorXd(p1.z_lower.head(nv)) : VectorXd();
  out.z_upper = p1.z_upper.size() ? VectorXd(p1.z_upper.head(nv)) : VectorXd();

  if (nr > 0 && p1.y.size() == nr && p1.y.allFinite()) {
    const double ynorm = inf_norm(p1.y);
    if (ynorm > 0.0) {
      const VectorXd y = p1.y / ynorm;
      const double margin = farkas_margin(lp, y);
      // Rounding in A'y and b'y is bounded by a few ulps of these sums.
      double scale = inf_norm(lp.b);
      const VectorXd g = lp.A.cwiseAbs().transpose() * y.cwiseAbs();
      for (Index i = 0; i < nv; ++i) {
        if (std::isfinite(lp.upper[i])) scale += lp.upper[i] * g[i];
      }
      if (margin > 1e-10 * (1.0 + scale)) {
        out.status = SolveStatus::kInfeasible;
        out.farkas = y;
        out.certificate_margin = margin;
        return out;
      }
    }
  }
  out.status = (p1.status == SolveStatus::kOptimal ||
                out.primal_residual <= opts.opt_tol)
                   ? SolveStatus::kOptimal
                   : p1.status;
  return out;
}

LPSolution solve_ip(const LPProblem& lp, const IpmOptions& opts) {
  check_shapes(lp);
  LPSolution sol = ipm_core(lp, opts);
  if (sol.status == SolveStatus::kOptimal) return sol;

  const LPSolution p1 = phase_one(lp, opts);
  if (p1.status == SolveStatus::kInfeasible) {
    sol.status = SolveStatus::kInfeasible;
    sol.farkas = p1.farkas;
    sol.certificate_margin = p1.certificate_margin;
  }
  return sol;
}

}  // namespace handsoff
