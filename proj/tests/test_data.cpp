#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ddspc/benchmark.hpp"
#include "ddspc/linalg.hpp"

using namespace ddspc;

namespace {

InputBox unit_box(int n) { return {Eigen::VectorXd::Constant(n, -1), Eigen::VectorXd::Constant(n, 1)}; }

std::string slurp(const std::string& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Hankel, Examples) {
  Eigen::RowVector4d s(1, 2, 3, 4);
  Eigen::MatrixXd H = hankel(s, 2);
  Eigen::Matrix<double, 2, 3> expect;
  expect << 1, 2, 3, 2, 3, 4;
  EXPECT_EQ(H, expect);
  EXPECT_EQ(hankel(s, 1), Eigen::MatrixXd(s));
  EXPECT_THROW(hankel(s, 5), DimensionError);
  EXPECT_EQ(hankel(Eigen::MatrixXd::Zero(1, 90), 12).cols(), 79);
}

TEST(PersistentExcitation, Examples) {
  EXPECT_FALSE(pe_order_check(Eigen::MatrixXd::Constant(1, 50, 3.0), 2));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd s(1, 100);
  for (int i = 0; i < 100; ++i) s(i) = n(rng);
  EXPECT_TRUE(pe_order_check(s, 4));
}

TEST(Collect, AircraftPassesPe) {
  const ArxModel m = aircraft_config().model;
  std::mt19937_64 rng(3);
  const Trajectory tr = collect_data(m, 90, unit_box(1), Eigen::VectorXd::Zero(8), rng, required_pe_order(4, 10, 2), 1);
  Eigen::MatrixXd uw(4, 90);
  uw << tr.u, tr.w;
  EXPECT_TRUE(pe_order_check(uw, 16));
}

TEST(Collect, TooShortExhaustsRetries) {
  const ArxModel m = aircraft_config().model;
  std::mt19937_64 rng(3);
  // order 16 on 4 signals needs at least 79 samples
  EXPECT_THROW(collect_data(m, 40, unit_box(1), Eigen::VectorXd::Zero(8), rng, 16), AssumptionError);
}

TEST(Collect, DeterministicCsv) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ddspc_test_data";
  fs::create_directories(dir);
  const BenchmarkConfig cfg = aircraft_config();
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    const OfflineData d = collect_offline(cfg);
    const std::string p = (dir / ("ocp" + std::to_string(rep) + ".csv")).string();
    write_trajectory_csv(d.ocp, p, p + ".prefix");
    if (rep == 0) {
      first = slurp(p);
      const Trajectory back = read_trajectory_csv(p, p + ".prefix");
      EXPECT_EQ(back.u, d.ocp.u);
      EXPECT_EQ(back.w, d.ocp.w);
      EXPECT_EQ(back.y, d.ocp.y);
      EXPECT_EQ(back.u_prefix, d.ocp.u_prefix);
      EXPECT_EQ(back.y_prefix, d.ocp.y_prefix);
    } else {
      EXPECT_EQ(slurp(p), first);
    }
  }
}

TEST(OcpHankels, Dimensions) {
  const ArxModel m = aircraft_config().model;
  std::mt19937_64 rng(5);
  const Trajectory tr = collect_data(m, 90, unit_box(1), Eigen::VectorXd::Zero(8), rng, 16);
  const HankelSet H = build_ocp_hankels(tr, 10, 2, 4);
  EXPECT_EQ(H.g_dim, 79);
  EXPECT_EQ(H.Hu.cols(), 79);
  EXPECT_EQ(H.Hy.cols(), 79);
  EXPECT_EQ(H.Hw.cols(), 79);
  EXPECT_EQ(H.Hu.rows(), 12);
  EXPECT_EQ(H.Hw.rows(), 30);
  // Hw starts at w_{T_ini}.
  EXPECT_EQ(H.Hw.block(0, 0, 3, 1), tr.w.col(2));

  const Trajectory shortest = collect_data(m, 12, unit_box(1), Eigen::VectorXd::Zero(8), rng, std::nullopt);
  EXPECT_EQ(build_ocp_hankels(shortest, 10, 2, std::nullopt).g_dim, 1);
  EXPECT_THROW(build_ocp_hankels(shortest, 10, 2, 4), AssumptionError);
}

// Columns of the stacked Hankels are plant trajectories from their own initial window.
TEST(OcpHankels, ColumnsAreTrajectories) {
  const BenchmarkConfig cfg = scalar_config();
  std::mt19937_64 rng(8);
  const Trajectory tr = collect_data(cfg.model, 40, cfg.data_box, cfg.z_ini_data, rng, 6);
  const HankelSet H = build_ocp_hankels(tr, 4, 1, 1);
  EXPECT_EQ(H.g_dim, 36);
  for (int c = 0; c < H.g_dim; ++c) {
    Eigen::VectorXd z = stack_extended_state(H.Hu.block(0, c, 1, 1), H.Hy.block(0, c, 1, 1));
    for (int i = 0; i < 4; ++i) {
      const StepResult r = step_realization(cfg.model, z, H.Hu.block(1 + i, c, 1, 1), H.Hw.block(i, c, 1, 1));
      ASSERT_NEAR(r.y(0), H.Hy(1 + i, c), 1e-12);
      z = r.z_next;
    }
  }
}

// A PCE trajectory from pce_step is reproduced by some g, fitted by least squares.
TEST(OcpHankels, CoefficientRoundTrip) {
  const BenchmarkConfig cfg = scalar_config();
  std::mt19937_64 rng(9);
  const Trajectory tr = collect_data(cfg.model, 40, cfg.data_box, cfg.z_ini_data, rng, 6);
  const HankelSet H = build_ocp_hankels(tr, 4, 1, 1);
  const BasisSpec b = build_joint_basis(3, 2, 4);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 20; ++t) {
    PceVector z(Eigen::MatrixXd::Zero(2, b.L));
    for (int j = 0; j < 3; ++j) z.coeffs.col(j) = Eigen::Vector2d(n(rng), n(rng));
    Eigen::VectorXd target(H.Hu.rows() + H.Hy.rows() + H.Hw.rows());
    Eigen::MatrixXd U(5, b.L), Y(5, b.L), W(4, b.L);
    U.row(0) = z.coeffs.row(0);
    Y.row(0) = z.coeffs.row(1);
    for (int i = 0; i < 4; ++i) {
      PceVector u(Eigen::MatrixXd(1, b.L));
      for (int j = 0; j < b.L; ++j) u.coeffs(0, j) = n(rng);
      const PceVector w = disturbance_pce(cfg.model.Sigma_W, b, i);
      const PceStep p = pce_step(cfg.model, z, u, w);
      U.row(1 + i) = u.coeffs;
      Y.row(1 + i) = p.y.coeffs;
      W.row(i) = w.coeffs;
      z = p.z_next;
    }
    Eigen::MatrixXd S(14, H.g_dim);
    S << H.Hu, H.Hy, H.Hw;
    Eigen::MatrixXd T(14, b.L);
    T << U, Y, W;
    const Eigen::MatrixXd G = S.completeOrthogonalDecomposition().solve(T);
    ASSERT_LT((S * G - T).norm(), 1e-8 * (1 + T.norm()));
  }
}

TEST(Design, AircraftShapesAndIdentity) {
  const BenchmarkConfig cfg = aircraft_config();
  std::mt19937_64 rng(1);
  const Trajectory tr = collect_data(cfg.model, 22, unit_box(1), Eigen::VectorXd::Zero(8), rng, std::nullopt);
  const DesignMatrices dm = build_design_matrices(tr);
  EXPECT_EQ(dm.Z_dd.rows(), 8);
  EXPECT_EQ(dm.Z_dd.cols(), 22);
  const Eigen::MatrixXd resid = dm.Y_dd - (cfg.model.Phi * dm.Z_dd + cfg.model.D * dm.U_dd + dm.W_dd);
  EXPECT_LT(resid.norm(), 1e-12 * (1 + dm.Y_dd.norm()));
  EXPECT_TRUE(rank_assumption_check(dm));
  // Column t of Z_dd is the window before step t.
  EXPECT_EQ(dm.Z_dd.col(0), tr.initial_state());
}

TEST(Design, ZeroAndShort) {
  Trajectory tr;
  tr.u = Eigen::MatrixXd::Zero(1, 5);
  tr.w = Eigen::MatrixXd::Zero(1, 5);
  tr.y = Eigen::MatrixXd::Zero(1, 5);
  tr.u_prefix = Eigen::MatrixXd::Zero(1, 1);
  tr.y_prefix = Eigen::MatrixXd::Zero(1, 1);
  const DesignMatrices dm = build_design_matrices(tr);
  EXPECT_EQ(dm.Z_dd.norm() + dm.U_dd.norm() + dm.Y_dd.norm(), 0.0);
  EXPECT_FALSE(rank_assumption_check(dm));
  tr.u_prefix.resize(1, 0);
  EXPECT_THROW(build_design_matrices(tr), DimensionError);
}

TEST(Design, TooFewColumns) {
  const BenchmarkConfig cfg = aircraft_config();
  std::mt19937_64 rng(2);
  const Trajectory tr = collect_data(cfg.model, 8, unit_box(1), Eigen::VectorXd::Zero(8), rng, std::nullopt);
  EXPECT_FALSE(rank_assumption_check(build_design_matrices(tr)));
}
