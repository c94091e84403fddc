// test_ipm.cpp
// Cone-program solver checks against independent references: a scipy LP
// optimum frozen below, closed-form SOC/SDP optima, and certificate status
// on infeasible / unbounded instances.
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "qisac/ipm.hpp"

using namespace qisac;

namespace {

MatR row_major(int rows, int cols, std::initializer_list<double> v) {
  REQUIRE(static_cast<int>(v.size()) == rows * cols);
  MatR m(rows, cols);
  int i = 0;
  for (double x : v) {
    m(i / cols, i % cols) = x;
    ++i;
  }
  return m;
}

VecR vec(std::initializer_list<double> v) {
  VecR out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("svec packing is an isometry and inverts") {
  MatR s(4, 4), v(4, 4);
  s << 2, 1, 0.5, -1, 1, 3, 0.2, 0, 0.5, 0.2, 4, 1.5, -1, 0, 1.5, 5;
  v << 1, -0.3, 0, 2, -0.3, 2, 1, 0.4, 0, 1, 0.5, -1, 2, 0.4, -1, 3;
  const VecR sv = sym_to_svec(s);
  CHECK(sv.size() == 10);
  CHECK(svec_to_sym(sv, 4).isApprox(s, 1e-14));
  // svec is chosen so the packed dot product equals the matrix inner product
  CHECK(sv.dot(sym_to_svec(v)) == doctest::Approx((s * v).trace()).epsilon(1e-12));
}

TEST_CASE("linear program with equalities matches the scipy reference") {
  // Reference optimum computed with scipy.optimize.linprog (HiGHS, scipy
  // 1.15.3) on this exact data: objective -2.748601174753365 at
  // x = (0.58859, 1.09622, 1.02904, 1.37362, 1.73894).
  const MatR g = row_major(8, 5, {0.5,    1.589,  1.103,  -1.099, -0.799,  //
                                  1.494,  -1.979, 1.285,  1.188,  -0.128,  //
                                  -0.788, -0.886, -0.981, -0.22,  0.018,   //
                                  0.214,  1.982,  1.171,  0.489,  1.956,   //
                                  -1.139, -1.359, 0.45,   -1.824, -1.857,  //
                                  0.06,   -0.135, 1.669,  0.517,  0.056,   //
                                  -0.013, -1.01,  -1.953, -1.23,  0.768,   //
                                  -1.198, -0.522, -1.985, 1.32,   -1.382});
  const VecR h = vec({2.092637, 1.441538, -2.461494, 7.576745, -5.97258,
                      2.794709, -3.478604, -3.195714});
  const MatR a = row_major(2, 5, {-0.225, -0.354, -0.7, 0.633, -0.241,  //
                                  0.957, 0.18, 0.21, 0.276, 0.353});
  const VecR b = vec({-0.790409, 1.969668});
  const VecR c = vec({-0.698, -0.119, -0.521, -0.195, -0.807});
  ConeSpec cones;
  cones.nonneg = 8;
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-2.748601174753365).epsilon(1e-6));
  CHECK((a * res.x - b).lpNorm<Eigen::Infinity>() < 1e-6);
  CHECK(((g * res.x - h).array() < 1e-6).all());
}

TEST_CASE("second-order cone projection onto a hyperplane") {
  // min t  s.t.  ||(x1, x2)|| <= t,  x1 + x2 = 2: the nearest point to the
  // origin on the plane is (1, 1), distance sqrt(2).
  const VecR c = vec({1, 0, 0});
  const MatR a = row_major(1, 3, {0, 1, 1});
  const VecR b = vec({2});
  const MatR g = -MatR::Identity(3, 3);
  const VecR h = VecR::Zero(3);
  ConeSpec cones;
  cones.soc = {3};
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(std::sqrt(2.0)).epsilon(1e-6));
  CHECK(res.x(1) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(res.x(2) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("semidefinite program recovers the smallest eigenvalue") {
  // min tr(C X)  s.t.  tr(X) = 1, X >= 0 attains lambda_min(C); the
  // reference eigenvalue comes from Eigen's symmetric eigensolver.
  MatR cm(3, 3);
  cm << 2.0, 0.4, -0.3, 0.4, 1.2, 0.5, -0.3, 0.5, 3.1;
  const double lambda_min =
      Eigen::SelfAdjointEigenSolver<MatR>(cm).eigenvalues().minCoeff();
  const int d = 6;  // svec dimension of a 3x3 symmetric matrix
  const VecR c = sym_to_svec(cm);
  MatR a(1, d);
  a.row(0) = sym_to_svec(MatR::Identity(3, 3)).transpose();
  const VecR b = vec({1});
  const MatR g = -MatR::Identity(d, d);
  const VecR h = VecR::Zero(d);
  ConeSpec cones;
  cones.psd = {3};
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(lambda_min).epsilon(1e-6));
  const MatR x = svec_to_sym(res.x, 3);
  CHECK(x.trace() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(Eigen::SelfAdjointEigenSolver<MatR>(x).eigenvalues().minCoeff() >
        -1e-7);
}

TEST_CASE("decoupled mixed-cone problem adds its block optima") {
  // Blocks share no variables: x >= 1 (nonneg slack), ||(u1-1, u2)|| <= t
  // (SOC), tr(X) = 1 with X >= 0 (PSD).  Optimum 1 + 0 + lambda_min(C).
  MatR cm(2, 2);
  cm << 1.5, -0.7, -0.7, 0.9;
  const double lambda_min =
      Eigen::SelfAdjointEigenSolver<MatR>(cm).eigenvalues().minCoeff();
  // variables: x, t, u1, u2, svec(X) (3 slots) -> n = 7
  const int n = 7;
  VecR c = VecR::Zero(n);
  c(0) = 1;
  c(1) = 1;
  c.segment(4, 3) = sym_to_svec(cm);
  MatR a = MatR::Zero(1, n);
  a.block(0, 4, 1, 3) = sym_to_svec(MatR::Identity(2, 2)).transpose();
  const VecR b = vec({1});
  // slack rows: [x - 1] in R+, [t, u1 - 1, u2] in SOC(3), svec(X) in PSD(2)
  MatR g = MatR::Zero(1 + 3 + 3, n);
  VecR h = VecR::Zero(7);
  g(0, 0) = -1;
  h(0) = -1;
  g(1, 1) = -1;
  g(2, 2) = -1;
  h(2) = -1;
  g(3, 3) = -1;
  g.block(4, 4, 3, 3) = -MatR::Identity(3, 3);
  ConeSpec cones;
  cones.nonneg = 1;
  cones.soc = {3};
  cones.psd = {2};
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(1.0 + lambda_min).epsilon(1e-5));
}

TEST_CASE("no equality rows is accepted") {
  // min x  s.t.  x >= 3
  const VecR c = vec({1});
  const MatR a(0, 1);
  const VecR b(0);
  const MatR g = row_major(1, 1, {-1});
  const VecR h = vec({-3});
  ConeSpec cones;
  cones.nonneg = 1;
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("contradictory bounds yield an infeasibility certificate") {
  // x <= -1 and x >= 0 cannot hold together.
  const VecR c = vec({1});
  const MatR a(0, 1);
  const VecR b(0);
  const MatR g = row_major(2, 1, {1, -1});
  const VecR h = vec({-1, 0});
  ConeSpec cones;
  cones.nonneg = 2;
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("descent direction in the recession cone reports unbounded") {
  // min -x  s.t.  x >= 0
  const VecR c = vec({-1});
  const MatR a(0, 1);
  const VecR b(0);
  const MatR g = row_major(1, 1, {-1});
  const VecR h = vec({0});
  ConeSpec cones;
  cones.nonneg = 1;
  const IpmResult res = ipm_solve(c, a, b, g, h, cones);
  CHECK(res.status == SolveStatus::Unbounded);
}

TEST_CASE("rotated PSD data keeps the optimum invariant") {
  // Same eigenvalue problem after conjugating C by a rotation: the optimal
  // value must not move (the feasible set is rotation-invariant).
  MatR cm(3, 3);
  cm << 2.0, 0.4, -0.3, 0.4, 1.2, 0.5, -0.3, 0.5, 3.1;
  const double angle = 0.7;
  MatR q = MatR::Identity(3, 3);
  q(0, 0) = std::cos(angle);
  q(0, 1) = -std::sin(angle);
  q(1, 0) = std::sin(angle);
  q(1, 1) = std::cos(angle);
  const MatR cr = q * cm * q.transpose();
  const auto solve_min_eig = [](const MatR& mat) {
    const VecR c = sym_to_svec(mat);
    MatR a(1, 6);
    a.row(0) = sym_to_svec(MatR::Identity(3, 3)).transpose();
    ConeSpec cones;
    cones.psd = {3};
    return ipm_solve(c, a, VecR::Ones(1), -MatR::Identity(6, 6), VecR::Zero(6),
                     cones);
  };
  const IpmResult r1 = solve_min_eig(cm);
  const IpmResult r2 = solve_min_eig(cr);
  REQUIRE(r1.status == SolveStatus::Optimal);
  REQUIRE(r2.status == SolveStatus::Optimal);
  CHECK(r1.objective == doctest::Approx(r2.objective).epsilon(1e-6));
}
