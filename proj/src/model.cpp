#include "handsoff/model.hpp"

#include <cmath>
#include <string>

namespace handsoff {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::kNonpositiveHorizon: return "NonpositiveHorizon";
    case ErrorCode::kInvalidGrid: return "InvalidGrid";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMemoryGuard: return "MemoryGuard";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kExhaustiveBoundExceeded: return "ExhaustiveBoundExceeded";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

void validate_plant(const Plant& plant) {
  const auto n = plant.A.rows();
  if (n < 1 || plant.A.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch, "A must be a nonempty square matrix", "A");
  }
  if (plant.B.rows() != n || plant.B.cols() < 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "B must have n = " + std::to_string(n) + " rows and at least one column",
                "B");
  }
  if (!plant.A.allFinite()) throw Error(ErrorCode::kNonFinite, "A has a non-finite entry", "A");
  if (!plant.B.allFinite()) throw Error(ErrorCode::kNonFinite, "B has a non-finite entry", "B");
}

const Problem& validate_problem(const Problem& p) {
  validate_plant(p.plant);
  const auto n = p.plant.n();
  const auto m = p.plant.m();
  if (p.x0.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "x0 must have length n = " + std::to_string(n), "x0");
  }
  if (!p.x0.allFinite()) throw Error(ErrorCode::kNonFinite, "x0 has a non-finite entry", "x0");
  if (!(p.T > 0.0) || !std::isfinite(p.T)) {
    throw Error(ErrorCode::kNonpositiveHorizon, "horizon T must be positive and finite", "T");
  }
  if (p.N < 1) throw Error(ErrorCode::kInvalidGrid, "grid size N must be >= 1", "N");
  if (static_cast<double>(m) * static_cast<double>(p.N) >
      static_cast<double>(kMaxDecisionVariables)) {
    throw Error(ErrorCode::kMemoryGuard, "m*N exceeds 1e7", "N");
  }
  if (!(p.h() > 0.0)) {
    throw Error(ErrorCode::kNonpositiveHorizon, "step h = T/N underflows", "N");
  }
  if (p.weights.size() != m) {
    throw Error(ErrorCode::kDimensionMismatch,
                "weights must have length m = " + std::to_string(m), "weights");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!(p.weights[i] > 0.0) || !std::isfinite(p.weights[i])) {
      throw Error(ErrorCode::kNonpositiveWeight,
                  "weight " + std::to_string(i + 1) + " must be finite and > 0", "weights");
    }
  }
  return p;
}

Problem make_problem(Plant plant, Eigen::VectorXd x0, double T, Eigen::Index N,
                     Eigen::VectorXd weights) {
  Problem p;
  if (weights.size() == 0) weights = Eigen::VectorXd::Ones(plant.m());
  p.plant = std::move(plant);
  p.x0 = std::move(x0);
  p.T = T;
  p.N = N;
  p.weights = std::move(weights);
  return p;
}

}  // namespace handsoff
