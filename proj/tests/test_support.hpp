#pragma once

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "handsoff/discretize.hpp"
#include "handsoff/model.hpp"

namespace handsoff::testing {

inline Plant double_integrator() {
  Plant p;
  p.A = (Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  p.B = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  return p;
}

inline Plant scalar_integrator() {
  return Plant{Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Ones(1, 1)};
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                                     double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = d(rng);
  return M;
}

/// Random plant with spectral abscissa shifted below `max_real`.
inline Plant random_plant(std::mt19937_64& rng, Eigen::Index n, Eigen::Index m,
                          double max_real = 0.5) {
  Plant p;
  p.A = random_matrix(rng, n, n, 1.0 / std::sqrt(static_cast<double>(n)));
  const Eigen::VectorXcd eig = p.A.eigenvalues();
  const double abscissa = eig.real().maxCoeff();
  if (abscissa > max_real) p.A -= (abscissa - max_real) * Eigen::MatrixXd::Identity(n, n);
  p.B = random_matrix(rng, n, m);
  return p;
}

/// Initial state that some control with |u| <= amplitude drives to the
/// origin in exactly N steps: the ZOH recursion run backwards from x[N] = 0.
inline Eigen::VectorXd reachable_x0(const Plant& plant, double T, Eigen::Index N,
                                    std::mt19937_64& rng, double amplitude = 0.5) {
  const auto [Ad, Bd] = zoh_discretize(plant, T / static_cast<double>(N));
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Ad);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(plant.n());
  for (Eigen::Index k = N - 1; k >= 0; --k) {
    Eigen::VectorXd uk(plant.m());
    for (Eigen::Index i = 0; i < uk.size(); ++i) uk[i] = u(rng);
    x = lu.solve(x - Bd * uk);
  }
  return x;
}

}  // namespace handsoff::testing
