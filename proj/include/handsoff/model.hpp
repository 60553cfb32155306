#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "handsoff/errors.hpp"

namespace handsoff {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Continuous-time LTI plant dx/dt = A x + B u.
template <typename Scalar>
struct PlantModel {
  Matrix<Scalar> A;  // n x n
  Matrix<Scalar> B;  // n x m

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
};

/// Steer x0 to the origin over [0, T] on an N-interval grid with
/// per-channel weights on the sparsity / fuel cost.
template <typename Scalar>
struct ControlProblem {
  PlantModel<Scalar> plant;
  Vector<Scalar> x0;
  Scalar T = 0;
  Eigen::Index N = 0;
  Vector<Scalar> weights;  // length m, strictly positive

  Scalar h() const { return T / static_cast<Scalar>(N); }
};

/// Piecewise-constant control sampled on the grid. U stacks u[0], ..., u[N-1],
/// each block of length m.
template <typename Scalar>
struct ControlSignal {
  Vector<Scalar> U;
  Scalar h = 0;
  Eigen::Index m = 0;
  Eigen::Index N = 0;

  auto at(Eigen::Index k) const { return U.segment(k * m, m); }
};

/// State samples x[0], ..., x[N] stored column-wise (n x (N+1)).
template <typename Scalar>
using StateTrajectory = Matrix<Scalar>;

using Plant = PlantModel<double>;
using Problem = ControlProblem<double>;
using Signal = ControlSignal<double>;
using Trajectory = StateTrajectory<double>;

/// Upper bound on m*N; Phi_N is stored densely as n x mN.
inline constexpr std::size_t kMaxDecisionVariables = 10'000'000;

// Checks every invariant of the problem data and returns it unchanged.
// Throws Error on the first violation.
const Problem& validate_problem(const Problem& p);

void validate_plant(const Plant& plant);

// Builds a problem with unit weights when `weights` is empty.
Problem make_problem(Plant plant, Eigen::VectorXd x0, double T, Eigen::Index N,
                     Eigen::VectorXd weights = {});

}  // namespace handsoff
