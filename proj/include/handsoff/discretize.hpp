#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Dense>

#include "handsoff/model.hpp"

namespace handsoff {

/// Exact zero-order-hold data of a ControlProblem: the one-step pair
/// (Ad, Bd), the reachability matrix PhiN = [Ad^{N-1} Bd, ..., Ad Bd, Bd],
/// and the free-response terminal offset c = Ad^N x0, so that
/// x[N] = c + PhiN * U.
template <typename Scalar>
struct DiscretizedPlant {
  Matrix<Scalar> Ad;
  Matrix<Scalar> Bd;
  Scalar h = 0;
  Eigen::Index N = 0;
  Matrix<Scalar> PhiN;
  Vector<Scalar> c;

  Eigen::Index n() const { return Ad.rows(); }
  Eigen::Index m() const { return Bd.cols(); }
};

using Discretized = DiscretizedPlant<double>;

namespace internal {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& M) {
  return M.allFinite();
}

}  // namespace internal

/// e^M by scaling and squaring with the degree-13 diagonal Pade approximant.
/// The scaling exponent is the smallest s >= 0 with ||M||_1 / 2^s <= theta_13.
template <typename Derived>
Matrix<typename Derived::Scalar> matrix_exponential(
    const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  using Mat = Matrix<Scalar>;
  if (M.rows() != M.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "matrix_exponential: matrix is not square");
  }
  if (!internal::all_finite(M)) {
    throw Error(ErrorCode::kNonFinite,
                "matrix_exponential: non-finite entry in input");
  }
  const Eigen::Index n = M.rows();
  if (n == 0) return Mat(0, 0);

  // Pade(13,13) numerator coefficients.
  static constexpr double b[] = {64764752532480000.0,
                                 32382376266240000.0,
                                 7771770303897600.0,
                                 1187353796428800.0,
                                 129060195264000.0,
                                 10559470521600.0,
                                 670442572800.0,
                                 33522128640.0,
                                 1323241920.0,
                                 40840800.0,
                                 960960.0,
                                 16380.0,
                                 182.0,
                                 1.0};
  constexpr double theta13 = 5.371920351148152;

  const Scalar norm1 = M.cwiseAbs().colwise().sum().maxCoeff();
  int s = 0;
  if (norm1 > Scalar(theta13)) {
    s = static_cast<int>(std::ceil(std::log2(norm1 / Scalar(theta13))));
    if (s < 0) s = 0;
  }
  const Mat A = M.derived() / std::ldexp(Scalar(1), s);
  const Mat I = Mat::Identity(n, n);
  const Mat A2 = A * A;
  const Mat A4 = A2 * A2;
  const Mat A6 = A4 * A2;
  auto c = [](int k) { return Scalar(b[k]) / Scalar(b[0]); };

  const Mat U_inner = A6 * (c(13) * A6 + c(11) * A4 + c(9) * A2) +
                      c(7) * A6 + c(5) * A4 + c(3) * A2 + c(1) * I;
  const Mat U = A * U_inner;
  const Mat V = A6 * (c(12) * A6 + c(10) * A4 + c(8) * A2) + c(6) * A6 +
                c(4) * A4 + c(2) * A2 + c(0) * I;

  Mat R = (V - U).partialPivLu().solve(V + U);
  for (int k = 0; k < s; ++k) R = R * R;
  return R;
}

/// Zero-order-hold pair (Ad, Bd) from one exponential of the augmented
/// matrix [[A, B], [0, 0]] * h; valid for singular A.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> zoh_discretize(
    const PlantModel<Scalar>& plant, Scalar h) {
  if (!(h > Scalar(0))) {
    throw Error(ErrorCode::kNonpositiveHorizon,
                "zoh_discretize: step length must be positive", "h");
  }
  const Eigen::Index n = plant.n();
  const Eigen::Index m = plant.m();
  if (plant.A.cols() != n || plant.B.rows() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "zoh_discretize: A must be n x n and B n x m");
  }
  Matrix<Scalar> aug = Matrix<Scalar>::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = plant.A * h;
  aug.topRightCorner(n, m) = plant.B * h;
  const Matrix<Scalar> E = matrix_exponential(aug);
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

/// Assembles PhiN right to left (block j = Ad * block j+1, starting from Bd)
/// and c = Ad^N x0 by N matrix-vector products.
template <typename Scalar>
DiscretizedPlant<Scalar> build_reachability(const ControlProblem<Scalar>& p) {
  const Eigen::Index n = p.plant.n();
  const Eigen::Index m = p.plant.m();
  const Eigen::Index N = p.N;
  if (N < 1) {
    throw Error(ErrorCode::kInvalidGrid, "grid size N must be >= 1", "N");
  }
  if (static_cast<double>(m) * static_cast<double>(N) >
      static_cast<double>(kMaxDecisionVariables)) {
    throw Error(ErrorCode::kMemoryGuard,
                "m*N exceeds the dense reachability matrix limit", "N");
  }
  DiscretizedPlant<Scalar> dp;
  dp.h = p.h();
  dp.N = N;
  std::tie(dp.Ad, dp.Bd) = zoh_discretize(p.plant, dp.h);

  dp.PhiN.resize(n, m * N);
  dp.PhiN.middleCols((N - 1) * m, m) = dp.Bd;
  for (Eigen::Index j = N - 2; j >= 0; --j) {
    dp.PhiN.middleCols(j * m, m).noalias() =
        dp.Ad * dp.PhiN.middleCols((j + 1) * m, m);
  }

  Vector<Scalar> x = p.x0;
  for (Eigen::Index k = 0; k < N; ++k) x = dp.Ad * x;
  dp.c = std::move(x);
  return dp;
}

/// Terminal state c + PhiN * U.
template <typename Scalar, typename Derived>
Vector<Scalar> terminal_state(const DiscretizedPlant<Scalar>& dp,
                              const Eigen::MatrixBase<Derived>& U) {
  if (U.size() != dp.PhiN.cols()) {
    throw Error(ErrorCode::kLengthMismatch,
                "terminal_state: control length differs from m*N");
  }
  return dp.c + dp.PhiN * U;
}

/// Minimum over rows k of ||PhiN[k, :]||_1 - |c_k|. A negative value certifies
/// that no control with |u| <= 1 reaches the origin; a nonnegative value
/// certifies nothing.
template <typename Scalar>
Scalar feasibility_radius(const DiscretizedPlant<Scalar>& dp) {
  if (dp.n() == 0) return Scalar(0);
  const Vector<Scalar> reach = dp.PhiN.cwiseAbs().rowwise().sum();
  return (reach - dp.c.cwiseAbs()).minCoeff();
}

}  // namespace handsoff
