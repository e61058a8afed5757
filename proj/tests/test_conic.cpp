#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ddspc/conic.hpp"

using namespace ddspc;

TEST(Conic, QuadraticWithLowerBound) {
  ProgramBuilder b;
  const int x = b.add_variables(1);
  b.add_quadratic(x, x, 1.0);  // x^2
  b.add_block(ConeKind::NonNeg, {AffineRow().add(x, 1.0).add(x, 0.0)});
  auto rows = std::vector<AffineRow>{AffineRow{{{x, 1.0}}, -1.0}};
  b.add_block(ConeKind::NonNeg, rows);
  Solution s = solve(b.build());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal(0), 1.0, 1e-7);
  EXPECT_NEAR(s.objective_value, 1.0, 1e-7);
}

TEST(Conic, LinearOverSecondOrderSlice) {
  // min c^T x s.t. |x| <= 1: x* = -c / |c|, value -|c|.
  ProgramBuilder b;
  const int x = b.add_variables(2);
  b.add_linear(x, 3.0);
  b.add_linear(x + 1, -4.0);
  b.add_block(ConeKind::SecondOrder, {AffineRow::constant_row(1.0), AffineRow{{{x, 1.0}}, 0.0},
                                      AffineRow{{{x + 1, 1.0}}, 0.0}});
  Solution s = solve(b.build());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective_value, -5.0, 1e-7);
  EXPECT_NEAR(s.primal(0), -0.6, 1e-6);
  EXPECT_NEAR(s.primal(1), 0.8, 1e-6);
}

TEST(Conic, TracePsdAboveIdentity) {
  ProgramBuilder b;
  const int v = b.add_variables(3);  // X = [[v0, v1], [v1, v2]]
  b.add_linear(v, 1.0);
  b.add_linear(v + 2, 1.0);
  b.add_psd(2, {AffineRow{{{v, 1.0}}, -1.0}, AffineRow{{{v + 1, 1.0}}, 0.0}, AffineRow{{{v + 2, 1.0}}, -1.0}});
  Solution s = solve(b.build());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-7);
}

TEST(Conic, EqualityAndInfeasibility) {
  ProgramBuilder b;
  const int x = b.add_variables(2);
  b.add_quadratic(x, x, 1.0);
  b.add_quadratic(x + 1, x + 1, 1.0);
  b.add_block(ConeKind::Zero, {AffineRow{{{x, 1.0}, {x + 1, 1.0}}, -2.0}});
  Solution s = solve(b.build());
  ASSERT_EQ(s.status, SolveStatus::Optimal);
  EXPECT_NEAR(s.primal(0), 1.0, 1e-7);
  EXPECT_NEAR(s.objective_value, 2.0, 1e-7);

  b.add_block(ConeKind::NonNeg, {AffineRow{{{x, -1.0}, {x + 1, -1.0}}, 1.0}});
  EXPECT_EQ(solve(b.build()).status, SolveStatus::Infeasible);
}

TEST(Conic, InconsistentEqualities) {
  ProgramBuilder b;
  const int x = b.add_variables(1);
  b.add_linear(x, 1.0);
  b.add_block(ConeKind::Zero, {AffineRow{{{x, 1.0}}, -1.0}, AffineRow{{{x, 2.0}}, -3.0}});
  EXPECT_EQ(solve(b.build()).status, SolveStatus::Infeasible);
}

TEST(Conic, ConicInfeasibility) {
  ProgramBuilder b;
  const int x = b.add_variables(2);
  b.add_linear(x, 1.0);
  // t >= |(x1)| with t = x0 and x0 <= -1
  b.add_block(ConeKind::SecondOrder, {AffineRow{{{x, 1.0}}, 0.0}, AffineRow{{{x + 1, 1.0}}, 0.0}});
  b.add_block(ConeKind::NonNeg, {AffineRow{{{x, -1.0}}, -1.0}});
  EXPECT_EQ(solve(b.build()).status, SolveStatus::Infeasible);
}

TEST(Conic, Unbounded) {
  ProgramBuilder b;
  const int x = b.add_variables(2);
  b.add_linear(x, -1.0);
  b.add_block(ConeKind::NonNeg, {AffineRow{{{x, 1.0}}, 0.0}});
  EXPECT_EQ(solve(b.build()).status, SolveStatus::Unbounded);
  ProgramBuilder f;
  const int y = f.add_variables(1);
  f.add_linear(y, 1.0);
  EXPECT_EQ(solve(f.build()).status, SolveStatus::Unbounded);
}

namespace {

// Random feasible QP with box constraints; compares against projected
// gradient on the box (diagonal Hessian keeps the oracle exact).
ConicProgram random_box_qp(std::mt19937_64& rng, Eigen::VectorXd& xstar) {
  std::normal_distribution<double> nd;
  const int n = 6;
  ProgramBuilder b;
  const int x = b.add_variables(n);
  xstar.resize(n);
  for (int i = 0; i < n; ++i) {
    const double d = 0.5 + std::abs(nd(rng)), q = 3 * nd(rng);
    b.add_quadratic(x + i, x + i, 0.5 * d);
    b.add_linear(x + i, q);
    b.add_block(ConeKind::NonNeg, {AffineRow{{{x + i, 1.0}}, 1.0}, AffineRow{{{x + i, -1.0}}, 1.0}});
    xstar(i) = std::clamp(-q / d, -1.0, 1.0);
  }
  return b.build();
}

}  // namespace

TEST(Conic, RandomBoxQpMatchesClosedForm) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd xs;
    ConicProgram p = random_box_qp(rng, xs);
    Solution s = solve(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    // Epigraph lowering bounds the primal error by sqrt(gap / curvature).
    EXPECT_LE((s.primal - xs).cwiseAbs().maxCoeff(), 1e-4);
    EXPECT_NEAR(s.objective_value, p.objective(xs), 1e-8 * (1 + std::abs(p.objective(xs))));
    for (double r : block_residuals(p, s.primal)) EXPECT_LE(r, 1e-8);
  }
}

TEST(Conic, DeterministicResolve) {
  std::mt19937_64 rng(3);
  Eigen::VectorXd xs;
  ConicProgram p = random_box_qp(rng, xs);
  Solution a = solve(p), b2 = solve(p);
  EXPECT_EQ(a.status, b2.status);
  EXPECT_NEAR(a.objective_value, b2.objective_value, 1e-9);
}

TEST(Conic, WorkspaceReusesPresolve) {
  ProgramBuilder b;
  const int x = b.add_variables(2);
  b.add_quadratic(x, x, 1.0);
  b.add_quadratic(x + 1, x + 1, 1.0);
  b.add_block(ConeKind::Zero, {AffineRow{{{x, 1.0}, {x + 1, 1.0}}, -2.0}});
  ConicProgram p = b.build();
  SolverWorkspace ws;
  Solution s1 = solve(p, {}, &ws);
  p.blocks[0].b(0) = -4.0;
  Solution s2 = solve(p, {}, &ws);
  EXPECT_EQ(ws.hits, 1);
  EXPECT_EQ(ws.misses, 1);
  EXPECT_NEAR(s1.primal(0), 1.0, 1e-7);
  EXPECT_NEAR(s2.primal(0), 2.0, 1e-7);
}

TEST(Conic, DumpListsTriplets) {
  ProgramBuilder b;
  const int x = b.add_variables(1);
  b.add_linear(x, 2.0);
  b.add_block(ConeKind::NonNeg, {AffineRow{{{x, 1.0}}, 0.5}}, "lb");
  std::ostringstream os;
  dump_program(b.build(), os);
  EXPECT_NE(os.str().find("block nonneg 1 0 lb"), std::string::npos);
  EXPECT_NE(os.str().find("q 0 2"), std::string::npos);
}
