#include "handsoff/io.hpp"

#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace handsoff {
namespace {

using testing::vec;

constexpr const char* kDoubleIntegrator = R"({
  "A": [[0, 1], [0, 0]],
  "B": [[0], [1]],
  "x0": [1, 0],
  "T": 10,
  "N": 100
})";

Error parse_error(const std::string& text) {
  try {
    read_problem(text);
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error for: " << text;
  return Error(ErrorCode::kIoError, "none");
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

TEST(ReadProblem, DoubleIntegratorDocument) {
  const Problem p = read_problem(kDoubleIntegrator);
  EXPECT_EQ(p.plant.n(), 2);
  EXPECT_EQ(p.plant.m(), 1);
  EXPECT_EQ(p.plant.A, testing::double_integrator().A);
  EXPECT_EQ(p.plant.B, testing::double_integrator().B);
  EXPECT_EQ(p.x0, vec({1, 0}));
  EXPECT_EQ(p.T, 10.0);
  EXPECT_EQ(p.N, 100);
  EXPECT_EQ(p.weights, vec({1}));  // default
}

TEST(ReadProblem, MissingHorizonIsParseError) {
  const Error e = parse_error(R"({"A": [[0]], "B": [[1]], "x0": [1], "N": 10})");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.field(), "T");
}

TEST(ReadProblem, NonSquareAIsDimensionMismatch) {
  const Error e = parse_error(R"({"A": [[0, 1]], "B": [[1]], "x0": [1], "T": 1, "N": 10})");
  EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  const Error ragged = parse_error(R"({"A": [[0, 1], [0]], "B": [[1], [1]], "x0": [1, 1], "T": 1, "N": 10})");
  EXPECT_EQ(ragged.code(), ErrorCode::kDimensionMismatch);
}

TEST(ReadProblem, ValidationErrorsPropagate) {
  EXPECT_EQ(parse_error(R"({"A": [[0]], "B": [[1]], "x0": [1], "T": 1, "N": 10, "weights": [0]})").code(),
            ErrorCode::kNonpositiveWeight);
  EXPECT_EQ(parse_error(R"({"A": [[0]], "B": [[1]], "x0": [1], "T": -1, "N": 10})").code(),
            ErrorCode::kNonpositiveHorizon);
}

TEST(ReadProblem, MalformedDocumentReportsLocation) {
  const Error e = parse_error("{\n  \"A\": [[0]],\n  \"B\": [[1]] oops\n}");
  EXPECT_EQ(e.code(), ErrorCode::kParseError);
  EXPECT_EQ(e.field().substr(0, 2), "3:");
}

TEST(ReadProblem, WrongTypesNameTheField) {
  EXPECT_EQ(parse_error(R"({"A": [[0]], "B": [[1]], "x0": [1], "T": "one", "N": 10})").field(), "T");
  EXPECT_EQ(parse_error(R"({"A": [[0]], "B": [[1]], "x0": [1], "T": 1, "N": 2.5})").field(), "N");
  EXPECT_EQ(parse_error(R"({"A": [[0]], "B": [["x"]], "x0": [1], "T": 1, "N": 2})").field(),
            "B[0][0]");
}

// Round trip over random documents is bit exact.
TEST(ReadProblem, RoundTripIsBitExact) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> mag(-30.0, 30.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = dim(rng), m = dim(rng);
    Problem p;
    p.plant.A = testing::random_matrix(rng, n, n, std::exp(mag(rng) / 10));
    p.plant.B = testing::random_matrix(rng, n, m);
    p.x0 = testing::random_matrix(rng, n, 1);
    p.T = std::exp(mag(rng) / 10);
    p.N = 1 + static_cast<Eigen::Index>(rng() % 1000);
    p.weights = testing::random_matrix(rng, m, 1).cwiseAbs().array() + 1e-3;
    const std::string text = write_problem(p);
    const Problem q = read_problem(text);
    EXPECT_EQ(q.plant.A, p.plant.A);
    EXPECT_EQ(q.plant.B, p.plant.B);
    EXPECT_EQ(q.x0, p.x0);
    EXPECT_EQ(q.T, p.T);
    EXPECT_EQ(q.N, p.N);
    EXPECT_EQ(q.weights, p.weights);
    EXPECT_EQ(write_problem(q), text);
  }
}

TEST(WriteSignal, OneIntervalGivesTwoRows) {
  const Signal s{vec({0.5}), 1.0, 1, 1};
  Trajectory x(1, 2);
  x << 1.0, 1.5;
  const std::string csv = write_signal(s, x);
  EXPECT_EQ(csv, "t,u1,x1\n0,0.5,1\n1,0.5,1.5\n");
  EXPECT_EQ(count_lines(csv), 3u);
}

TEST(WriteSignal, HeaderAndPrecision) {
  const Signal s{vec({0.1, -1.0 / 3.0, 0.2, 0.0}), 0.25, 2, 2};
  Trajectory x = Trajectory::Zero(3, 3);
  x(2, 1) = 2.0 / 3.0;
  const std::string csv = write_signal(s, x);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,u1,u2,x1,x2,x3");
  std::getline(in, line);
  EXPECT_EQ(line, "0,0.10000000000000001,-0.33333333333333331,0,0,0");
  std::getline(in, line);
  EXPECT_EQ(line, "0.25,0.20000000000000001,0,0,0,0.66666666666666663");
  std::getline(in, line);
  EXPECT_EQ(line, "0.5,0.20000000000000001,0,0,0,0");  // repeats the last control
}

TEST(WriteSignal, LengthMismatch) {
  const Signal s{vec({0.5, 0.5}), 0.5, 1, 2};
  try {
    write_signal(s, Trajectory(1, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
  try {
    write_signal(s, Trajectory::Zero(1, 4));  // N = 3 trajectory
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLengthMismatch);
  }
}

TEST(FormatDouble, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(std::stod(format_double(M_PI)), M_PI);
}

}  // namespace
}  // namespace handsoff
