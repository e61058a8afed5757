#include <gtest/gtest.h>

#include <random>

#include "ddspc/controller.hpp"
#include "ddspc/linalg.hpp"
#include "ddspc/validation.hpp"

using namespace ddspc;

namespace {

const OfflineSetup& scalar() {
  static const OfflineSetup s = offline_setup(scalar_config());
  return s;
}

const OfflineSetup& aircraft() {
  static const OfflineSetup s = offline_setup(aircraft_config());
  return s;
}

}  // namespace

TEST(Init, Measured) {
  const InitialCondition i = measured_init(Eigen::Vector2d(0.3, -1));
  EXPECT_EQ(std::get<MeasuredInit>(i).z, Eigen::Vector2d(0.3, -1));
}

TEST(Init, BackupDeterministicPrediction) {
  Eigen::MatrixXd pred(3, 4);
  pred.setZero();
  pred.col(0) << 1, 2, 3;
  const auto b = std::get<BackupInit>(backup_init(pred, Eigen::VectorXd::Ones(4)));
  EXPECT_EQ(b.mean, pred.col(0));
  EXPECT_EQ(b.A_z.norm(), 0.0);
}

TEST(Init, BackupRankOne) {
  const Eigen::Vector3d v(1, -2, 2);
  Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(3, 2);
  pred.col(1) = v;
  const auto b = std::get<BackupInit>(backup_init(pred, Eigen::Vector2d::Ones()));
  EXPECT_LT((b.A_z - v * v.transpose() / v.norm()).norm(), 1e-12);
}

TEST(Init, BackupCovarianceRoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd pred(4, 7);
  for (Eigen::Index k = 0; k < pred.size(); ++k) pred(k) = n(rng);
  const auto b = std::get<BackupInit>(backup_init(pred, Eigen::VectorXd::Ones(7)));
  const Eigen::MatrixXd Q = pred.rightCols(6) * pred.rightCols(6).transpose();
  EXPECT_LT((b.A_z * b.A_z.transpose() - Q).norm(), 1e-10 * Q.norm());
  EXPECT_LT((b.Q_rhs - Q).norm(), 1e-12 * Q.norm());
}

TEST(Ocp, TrivialZeroProblem) {
  OcpSpec s = scalar().spec;
  s.w_pce = horizon_disturbances(Eigen::MatrixXd::Zero(1, 1), s.basis);
  s.u_box = Box::unbounded(1);
  s.y_box = Box::unbounded(1);
  const OcpSolution sol = solve_ocp(s, measured_init(Eigen::Vector2d::Zero()));
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_NEAR(sol.cost, 0.0, 1e-9);
  for (int i = 0; i < s.N; ++i) {
    EXPECT_LT(sol.u_at(i).norm(), 1e-6);
    EXPECT_LT(sol.y_at(i).norm(), 1e-6);
  }
}

TEST(Ocp, OracleEquivalence) {
  const Check c = check_oracle_equivalence(20, 101);
  EXPECT_TRUE(c.pass) << c.detail;
}

TEST(Ocp, AircraftDimensions) {
  const OcpSpec& s = aircraft().spec;
  EXPECT_EQ(s.hankels.g_dim, 79);
  EXPECT_EQ(s.L(), 39);
  const OcpProgram op = assemble(s, measured_init(Eigen::VectorXd::Zero(8)));
  EXPECT_EQ(op.layout.L, 39);
  EXPECT_EQ(op.layout.g_map.rows(), 79);
  EXPECT_LE(op.layout.g_dim, 79);
}

// u, y rebuilt from g, exact causality zeros, z_N consistent with the steps.
TEST(Ocp, ExtractionConsistency) {
  const OcpSpec& s = scalar().spec;
  const OcpSolution sol = solve_ocp(s, measured_init(Eigen::Vector2d(0.2, -0.3)));
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  const Eigen::MatrixXd U = s.hankels.Hu * sol.g, Y = s.hankels.Hy * sol.g;
  for (int t = 0; t < s.N + s.T_ini(); ++t) {
    EXPECT_LT((Y.row(t) - sol.y[t].row(0)).norm(), 1e-8);
    for (int j = 0; j < s.L(); ++j) {
      const int i = t - s.T_ini();
      if (i >= 0 && j >= causality_start(s.basis, i)) {
        EXPECT_EQ(sol.u[t](0, j), 0.0);
        EXPECT_LT(std::abs(U(t, j)), 1e-8);
      } else {
        EXPECT_LT(std::abs(U(t, j) - sol.u[t](0, j)), 1e-8);
      }
    }
  }
  const Eigen::MatrixXd zN = sol.z_at(s.N);
  EXPECT_EQ(zN.row(0), sol.u_at(s.N - 1).row(0));
  EXPECT_EQ(zN.row(1), sol.y_at(s.N - 1).row(0));
  // Initial pins.
  EXPECT_NEAR(sol.z_at(0)(0, 0), 0.2, 1e-8);
  EXPECT_NEAR(sol.z_at(0)(1, 0), -0.3, 1e-8);
  EXPECT_LT(sol.z_at(0).rightCols(s.L() - 1).norm(), 1e-8);
  // The reported cost is the trajectory cost.
  std::vector<Eigen::MatrixXd> u, y;
  for (int i = 0; i < s.N; ++i) {
    u.push_back(sol.u_at(i));
    y.push_back(sol.y_at(i));
  }
  EXPECT_NEAR(trajectory_cost(u, y, zN, s.Q, s.R, s.ti.P, s.basis.norms_sq, s.norm), sol.cost, 1e-7);
}

TEST(Ocp, ChanceConstraintsHoldAtSolution) {
  const OcpSpec& s = scalar().spec;
  const OcpSolution sol = solve_ocp(s, measured_init(Eigen::Vector2d(0.3, 0.4)));
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  for (int i = 0; i < s.N; ++i) {
    const Moments my = moments(sol.y_at(i), s.basis.norms_sq);
    EXPECT_LE(std::abs(my.mean(0)) + s.sigma_y * std::sqrt(my.cov(0, 0)), 1.0 + 1e-6);
    const Moments mu = moments(sol.u_at(i), s.basis.norms_sq);
    EXPECT_LE(std::abs(mu.mean(0)) + s.sigma_u * std::sqrt(mu.cov(0, 0)), 2.0 + 1e-6);
  }
  const Moments mz = moments(sol.z_at(s.N), s.basis.norms_sq);
  EXPECT_LE(mz.mean.dot(s.ti.P * mz.mean), s.ti.eps_z * (1 + 1e-6));
  EXPECT_LE((s.ti.Gamma * mz.cov).trace(), s.ti.gamma * (1 + 1e-6));
}

TEST(Ocp, ChanceConservatismSampling) {
  const Check ok = check_chance_conservatism(scalar(), 10000, 7);
  EXPECT_TRUE(ok.pass) << ok.detail;
  const Check bad = check_chance_conservatism(scalar(), 10000, 7, 0.5);
  EXPECT_FALSE(bad.pass) << bad.detail;
}

TEST(Ocp, InfeasibleInitialState) {
  // y_0 = u_{-1} + 0.5 y_{-1} is outside the output box whatever the input.
  const OcpSolution sol = solve_ocp(scalar().spec, measured_init(Eigen::Vector2d(2, 2)));
  EXPECT_EQ(sol.status, SolveStatus::Infeasible);
}

TEST(Ocp, ResolveIsIdentical) {
  const OcpSpec& s = aircraft().spec;
  SolverWorkspace ws;
  Eigen::VectorXd z = Eigen::VectorXd::Zero(8);
  z(7) = 0.5;
  const OcpSolution a = solve_ocp(s, measured_init(z), {}, &ws);
  const OcpSolution b = solve_ocp(s, measured_init(z), {}, &ws);
  ASSERT_EQ(a.status, SolveStatus::Optimal);
  EXPECT_EQ(a.status, b.status);
  EXPECT_NEAR(a.cost, b.cost, 1e-9 * std::abs(a.cost));
  EXPECT_EQ(ws.hits, 1);
}

TEST(Ocp, AircraftZeroStartCost) {
  // Cost from rest is the sum of the disturbance-driven terms only.
  const OcpSolution sol = solve_ocp(aircraft().spec, measured_init(Eigen::VectorXd::Zero(8)));
  ASSERT_EQ(sol.status, SolveStatus::Optimal);
  EXPECT_LT(sol.u_at(0).col(0).norm(), 1e-6);
  EXPECT_GT(sol.cost, 0.0);
}

// Shifted optimal prediction fed back as backup start stays feasible.
TEST(Ocp, BackupFeasibilityReplay) {
  const OfflineSetup& st = scalar();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int t = 0; t < 20; ++t) {
    const OcpSolution sol = solve_ocp(st.spec, measured_init(Eigen::Vector2d(u(rng), u(rng))));
    if (sol.status != SolveStatus::Optimal) continue;
    const Shifted sh = shift_candidate(sol, st.spec.ti, st.spec);
    const OcpSolution nb = solve_ocp(st.spec, backup_init(sh.pred_z, sh.pred_norms));
    ASSERT_EQ(nb.status, SolveStatus::Optimal);
    EXPECT_LE(nb.cost, sh.J_tilde * (1 + 1e-6) + 1e-9);
  }
}

TEST(Ocp, SpecValidation) {
  OcpSpec s = scalar().spec;
  s.sigma_y = 1.0;
  EXPECT_THROW(s.validate(), DimensionError);
  s.sigma_override = true;
  EXPECT_NO_THROW(s.validate());
  s.w_pce.pop_back();
  EXPECT_THROW(s.validate(), DimensionError);
  EXPECT_THROW(parse_norm_convention("double"), DimensionError);
}
