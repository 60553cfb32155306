#include "handsoff/discretize.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace handsoff {
namespace {

using testing::vec;
using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

// Truncated Taylor series in extended precision, with optional scaling by
// 2^s and repeated squaring for larger norms.
MatrixXld taylor_exp(const Eigen::MatrixXd& M, int terms = 50, int s = 0) {
  const Eigen::Index n = M.rows();
  const MatrixXld A = M.cast<long double>() / std::ldexp(1.0L, s);
  MatrixXld sum = MatrixXld::Identity(n, n);
  MatrixXld term = MatrixXld::Identity(n, n);
  for (int k = 1; k < terms; ++k) {
    term = term * A / static_cast<long double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum;
}

double rel_err(const Eigen::MatrixXd& got, const MatrixXld& want) {
  const MatrixXld diff = got.cast<long double>() - want;
  return static_cast<double>(diff.cwiseAbs().colwise().sum().maxCoeff() /
                             want.cwiseAbs().colwise().sum().maxCoeff());
}

double norm1(const Eigen::MatrixXd& M) { return M.cwiseAbs().colwise().sum().maxCoeff(); }

Eigen::MatrixXd random_with_norm(std::mt19937_64& rng, Eigen::Index n, double target) {
  Eigen::MatrixXd M = testing::random_matrix(rng, n, n);
  return M * (target / norm1(M));
}

TEST(MatrixExponential, ZeroGivesIdentity) {
  EXPECT_EQ(matrix_exponential(Eigen::MatrixXd::Zero(2, 2)), Eigen::MatrixXd::Identity(2, 2));
}

TEST(MatrixExponential, NilpotentSeriesTerminates) {
  for (double h : {0.01, 0.1, 1.0, 7.0}) {
    const Eigen::MatrixXd M = (Eigen::MatrixXd(2, 2) << 0, h, 0, 0).finished();
    const Eigen::MatrixXd E = matrix_exponential(M);
    EXPECT_NEAR(E(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(E(0, 1), h, 1e-15 * h);
    EXPECT_NEAR(E(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(E(1, 1), 1.0, 1e-15);
  }
}

TEST(MatrixExponential, MatchesTaylorOracleForUnitNorm) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> r(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd M = random_with_norm(rng, 4, r(rng));
    EXPECT_LE(rel_err(matrix_exponential(M), taylor_exp(M)), 1e-12);
  }
}

TEST(MatrixExponential, MatchesScaledTaylorUpToNormTen) {
  std::mt19937_64 rng(99);
  for (double target : {2.0, 5.0, 8.0, 10.0}) {
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd M = random_with_norm(rng, 4, target);
      EXPECT_LE(rel_err(matrix_exponential(M), taylor_exp(M, 40, 6)), 1e-12) << target;
    }
  }
}

TEST(MatrixExponential, InverseProperty) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> r(0.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd M = random_with_norm(rng, 1 + trial % 5, r(rng));
    const Eigen::MatrixXd P = matrix_exponential(M) * matrix_exponential(Eigen::MatrixXd(-M));
    EXPECT_LE((P - Eigen::MatrixXd::Identity(M.rows(), M.cols())).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(MatrixExponential, ScalarAndLongDouble) {
  EXPECT_NEAR(matrix_exponential(Eigen::MatrixXd::Constant(1, 1, -1.0))(0, 0), std::exp(-1.0),
              1e-16);
  const MatrixXld M = MatrixXld::Constant(1, 1, 0.5L);
  EXPECT_NEAR(static_cast<double>(matrix_exponential(M)(0, 0) - std::exp(0.5L)), 0.0, 1e-18);
}

TEST(MatrixExponential, RejectsNonFinite) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2, 2);
  M(1, 0) = std::nan("");
  try {
    matrix_exponential(M);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(ZohDiscretize, ScalarIntegrator) {
  const auto [Ad, Bd] = zoh_discretize(testing::scalar_integrator(), 0.5);
  EXPECT_EQ(Ad(0, 0), 1.0);
  EXPECT_NEAR(Bd(0, 0), 0.5, 1e-16);
}

TEST(ZohDiscretize, DoubleIntegratorClosedForm) {
  for (double h : {0.01, 0.1, 1.0}) {
    const auto [Ad, Bd] = zoh_discretize(testing::double_integrator(), h);
    const Eigen::MatrixXd Ad_ref = (Eigen::MatrixXd(2, 2) << 1, h, 0, 1).finished();
    const Eigen::MatrixXd Bd_ref = (Eigen::MatrixXd(2, 1) << h * h / 2, h).finished();
    EXPECT_LE((Ad - Ad_ref).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE((Bd - Bd_ref).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(ZohDiscretize, StableScalar) {
  const Plant p{Eigen::MatrixXd::Constant(1, 1, -1.0), Eigen::MatrixXd::Ones(1, 1)};
  const auto [Ad, Bd] = zoh_discretize(p, 1.0);
  EXPECT_NEAR(Ad(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(Bd(0, 0), 1.0 - std::exp(-1.0), 1e-15);
}

TEST(ZohDiscretize, IntegralIdentityForInvertibleA) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Plant p = testing::random_plant(rng, 1 + trial % 4, 1 + trial % 2);
    const double h = 0.05 + 0.01 * trial;
    const auto [Ad, Bd] = zoh_discretize(p, h);
    const Eigen::MatrixXd lhs = p.A * Bd;
    const Eigen::MatrixXd rhs = (Ad - Eigen::MatrixXd::Identity(p.n(), p.n())) * p.B;
    EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}

TEST(ZohDiscretize, HalfStepComposition) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Plant p = testing::random_plant(rng, 1 + trial % 4, 1 + trial % 2, 2.0);
    const double h = 0.1 + 0.02 * trial;
    const auto [Ad, Bd] = zoh_discretize(p, h);
    const auto [Ah, Bh] = zoh_discretize(p, h / 2);
    const Eigen::MatrixXd Ad2 = Ah * Ah;
    const Eigen::MatrixXd Bd2 = Ah * Bh + Bh;
    EXPECT_LE((Ad - Ad2).norm(), 1e-10 * Ad.norm());
    EXPECT_LE((Bd - Bd2).norm(), 1e-10 * Bd.norm());
  }
}

TEST(ZohDiscretize, RejectsNonpositiveStep) {
  EXPECT_THROW(zoh_discretize(testing::scalar_integrator(), 0.0), Error);
}

TEST(BuildReachability, SingleBlock) {
  const Problem p = make_problem(testing::double_integrator(), vec({1, -2}), 0.7, 1);
  const Discretized dp = build_reachability(p);
  EXPECT_EQ(dp.PhiN, dp.Bd);
  EXPECT_EQ(dp.c, dp.Ad * p.x0);
}

TEST(BuildReachability, DoubleIntegratorTwoSteps) {
  // Ad Bd = [[1,1],[0,1]] [0.5; 1] = [1.5; 1], second block Bd = [0.5; 1].
  const Problem p = make_problem(testing::double_integrator(), vec({1, 0}), 2.0, 2);
  const Discretized dp = build_reachability(p);
  const Eigen::MatrixXd expected = (Eigen::MatrixXd(2, 2) << 1.5, 0.5, 1.0, 1.0).finished();
  EXPECT_LE((dp.PhiN - expected).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(dp.h, 1.0);
}

TEST(BuildReachability, ZeroDynamics) {
  const Problem p = make_problem(testing::scalar_integrator(), vec({1}), 1.0, 4);
  const Discretized dp = build_reachability(p);
  EXPECT_EQ(dp.PhiN, Eigen::MatrixXd::Constant(1, 4, 0.25));
  EXPECT_EQ(dp.c, vec({1}));
  EXPECT_EQ(dp.h * static_cast<double>(dp.N), 1.0);
}

TEST(BuildReachability, BlocksArePowersOfAd) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 4, m = 1 + trial % 2, N = 3 + trial;
    const Plant plant = testing::random_plant(rng, n, m);
    const Problem p = make_problem(plant, testing::random_matrix(rng, n, 1), 2.0, N);
    const Discretized dp = build_reachability(p);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index j = N - 1; j >= 0; --j) {
      const Eigen::MatrixXd block = power * dp.Bd;
      EXPECT_LE((dp.PhiN.middleCols(j * m, m) - block).norm(), 1e-12 * (1.0 + block.norm()));
      power = dp.Ad * power;
    }
    EXPECT_LE((dp.c - power * p.x0).norm(), 1e-12 * (1.0 + dp.c.norm()));
    EXPECT_NEAR(dp.h * static_cast<double>(N), p.T, 1e-15 * p.T);
  }
}

TEST(BuildReachability, MemoryGuard) {
  const Problem p = make_problem(testing::scalar_integrator(), vec({1}), 1.0,
                                 static_cast<Eigen::Index>(kMaxDecisionVariables) + 1);
  try {
    build_reachability(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMemoryGuard);
  }
}

TEST(FeasibilityRadius, CertifiesUnreachableScalarState) {
  const Problem p = make_problem(testing::scalar_integrator(), vec({2}), 1.0, 10);
  EXPECT_NEAR(feasibility_radius(build_reachability(p)), -1.0, 1e-14);
}

TEST(FeasibilityRadius, OriginIsNeverCertified) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Plant plant = testing::random_plant(rng, 3, 2);
    const Problem p = make_problem(plant, Eigen::VectorXd::Zero(3), 1.0, 10);
    EXPECT_GE(feasibility_radius(build_reachability(p)), 0.0);
  }
}

TEST(FeasibilityRadius, NoCertificateWhenReachable) {
  const Problem p = make_problem(testing::scalar_integrator(), vec({1}), 2.0, 4);
  EXPECT_NEAR(feasibility_radius(build_reachability(p)), 1.0, 1e-14);
}

}  // namespace
}  // namespace handsoff
