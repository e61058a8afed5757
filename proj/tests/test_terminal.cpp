#include <gtest/gtest.h>

#include <random>

#include "ddspc/benchmark.hpp"
#include "ddspc/linalg.hpp"

using namespace ddspc;

namespace {

struct Synth {
  BenchmarkConfig cfg;
  DesignMatrices dm;
  ExtendedMatrices em;
  TerminalIngredients ti;
  SynthesisReport rep;
};

Synth synth(const BenchmarkConfig& cfg) {
  Synth s;
  s.cfg = cfg;
  s.dm = build_design_matrices(collect_offline(cfg).synth);
  s.em = extended_matrices(cfg.model);
  s.ti = synthesize_terminal(s.dm, cfg.model.n_u(), cfg.model.n_y(), synthesis_options(cfg), &s.rep);
  return s;
}

const Synth& aircraft() {
  static const Synth s = synth(aircraft_config());
  return s;
}

const Synth& scalar() {
  static const Synth s = synth(scalar_config());
  return s;
}

// Scalar DARE for x+ = 0.5 x + u, stage x^2 + u^2; the minimal state is y = Phi z.
Eigen::RowVector2d scalar_lqr_gain() {
  const double p = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  const double k = 0.5 * p / (1.0 + p);
  return -k * Eigen::RowVector2d(1.0, 0.5);
}

double rel_err_sq(const Eigen::MatrixXd& K, const Eigen::MatrixXd& Ks) {
  const double a = (K - Ks).jacobiSvd().singularValues()(0), b = Ks.jacobiSvd().singularValues()(0);
  return a * a / (b * b);
}

}  // namespace

TEST(Stein, Examples) {
  const Eigen::Matrix2d Q = (Eigen::Matrix2d() << 2, 1, 1, 3).finished();
  EXPECT_LT((stein_solve(Eigen::Matrix2d::Zero(), Q) - Q).norm(), 1e-14);
  EXPECT_NEAR(stein_solve(Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0))(0, 0),
              4.0 / 3.0, 1e-14);
  EXPECT_THROW(stein_solve(Eigen::MatrixXd::Constant(1, 1, 1.5), Eigen::MatrixXd::Ones(1, 1)), AssumptionError);
}

TEST(Gamma, Examples) {
  const Eigen::MatrixXd E = structural_matrices(1, 3, 2).E_tilde;
  const Eigen::Matrix3d Sw = Eigen::Vector3d(1e-4, 1, 1e-2).asDiagonal();
  EXPECT_EQ(compute_gamma(Eigen::MatrixXd::Identity(8, 8), Eigen::Matrix3d::Zero(), E), 0.0);
  EXPECT_NEAR(compute_gamma(Eigen::MatrixXd::Identity(8, 8), Sw, E), Sw.trace(), 1e-15);
}

TEST(Riccati, ScalarClosedForm) {
  const ExtendedMatrices em = extended_matrices(scalar_config().model);
  const Eigen::MatrixXd Ks = riccati_oracle(em, em.E_tilde * em.E_tilde.transpose(), Eigen::MatrixXd::Identity(1, 1));
  EXPECT_LT((Ks - Eigen::MatrixXd(scalar_lqr_gain())).norm(), 1e-10);
}

TEST(Riccati, NoInputGivesZeroGain) {
  ExtendedMatrices em = extended_matrices(scalar_config().model);
  em.B_tilde.setZero();
  const Eigen::MatrixXd Ks = riccati_oracle(em, Eigen::Matrix2d::Identity(), Eigen::MatrixXd::Identity(1, 1));
  EXPECT_LT(Ks.norm(), 1e-14);
}

// With any K fitted through the data, M H reproduces the true closed loop.
TEST(Surrogate, ModelConsistency) {
  const Synth& s = aircraft();
  const Eigen::MatrixXd M = surrogate_M(s.dm, s.em);
  EXPECT_EQ(M.rows(), 8);
  EXPECT_EQ(M.cols(), 22);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int t = 0; t < 5; ++t) {
    Eigen::MatrixXd K(1, 8);
    for (int i = 0; i < 8; ++i) K(i) = n(rng);
    Eigen::MatrixXd ZU(9, 22), IK(9, 8);
    ZU << s.dm.Z_dd, s.dm.U_dd;
    IK << Eigen::MatrixXd::Identity(8, 8), K;
    const Eigen::MatrixXd H = pseudo_inverse(ZU) * IK;
    const Eigen::MatrixXd ref = s.em.A_tilde + s.em.B_tilde * K;
    EXPECT_LT((M * H - ref).norm(), 1e-10 * (1 + ref.norm()));
  }
}

TEST(Surrogate, ZeroDataFails) {
  DesignMatrices dm;
  dm.Z_dd = Eigen::MatrixXd::Zero(2, 10);
  dm.U_dd = Eigen::MatrixXd::Zero(1, 10);
  dm.Y_dd = Eigen::MatrixXd::Zero(1, 10);
  dm.W_dd = Eigen::MatrixXd::Zero(1, 10);
  dm.T_ini = 1;
  EXPECT_THROW(surrogate_M(dm, structural_matrices(1, 1, 1)), AssumptionError);
}

TEST(Synthesis, ScalarMatchesLqr) {
  const Synth& s = scalar();
  EXPECT_LE(rel_err_sq(s.ti.K, scalar_lqr_gain()), 1e-8);
}

TEST(Synthesis, AircraftMatchesRiccati) {
  const Synth& s = aircraft();
  const Eigen::MatrixXd Ks = riccati_oracle(s.em, s.em.E_tilde * s.em.E_tilde.transpose(), s.cfg.R);
  EXPECT_LE(rel_err_sq(s.ti.K, Ks), 1e-4);
  EXPECT_EQ(s.rep.sdp_status, "Optimal");
}

TEST(Synthesis, ReportInvariants) {
  for (const Synth* s : {&scalar(), &aircraft()}) {
    const Eigen::MatrixXd AK = s->ti.A_K();
    const Eigen::MatrixXd Qt = s->em.E_tilde * s->cfg.Q * s->em.E_tilde.transpose();
    const Eigen::MatrixXd Qp = s->ti.K.transpose() * s->cfg.R * s->ti.K + AK.transpose() * Qt * AK;
    EXPECT_LT(spectral_radius(AK), 1.0);
    EXPECT_LE(stein_residual(AK, s->ti.P, Qp), 1e-8);
    EXPECT_LE(stein_residual(AK, s->ti.Gamma, Eigen::MatrixXd::Identity(AK.rows(), AK.cols())), 1e-8);
    EXPECT_TRUE(is_positive_definite(s->ti.Gamma));
    EXPECT_TRUE(is_psd(s->ti.P, 1e-9 * s->ti.P.norm()));
    EXPECT_GT(s->ti.gamma, 0.0);
    EXPECT_NEAR(s->ti.gamma, compute_gamma(s->ti.Gamma, s->cfg.model.Sigma_W, s->em.E_tilde), 1e-9 * s->ti.gamma);
    EXPECT_GT(s->ti.eps_z, 0.0);
  }
}

TEST(Synthesis, CheapControlShrinksGain) {
  BenchmarkConfig cfg = scalar_config();
  const double k1 = scalar().ti.K.norm();
  cfg.R *= 1e6;
  cfg.u_box = Box::unbounded(1);
  cfg.y_box = Box::unbounded(1);
  const Synth s = synth(cfg);
  EXPECT_LT(s.ti.K.norm(), k1);
}

TEST(Synthesis, AircraftCleanDataHasNearRankDrop) {
  // The printed model is not exactly order 4, so the drop shows only as a tiny singular value.
  BenchmarkConfig cfg = aircraft_config();
  cfg.model.Sigma_W.setZero();
  std::mt19937_64 rng(cfg.seed);
  const DesignMatrices dm = build_design_matrices(collect_data(cfg.model, 22, cfg.data_box, cfg.z_ini_data, rng, {}));
  Eigen::MatrixXd ZU(9, 22);
  ZU << dm.Z_dd, dm.U_dd;
  const Eigen::VectorXd sv = ZU.jacobiSvd().singularValues();
  EXPECT_LT(sv(8) / sv(0), 1e-5);
  EXPECT_TRUE(rank_assumption_check(build_design_matrices(collect_offline(aircraft_config()).synth)));
}

// Sublevel sets of P are invariant under A_K.
TEST(Terminal, EllipsoidInvariance) {
  for (const Synth* s : {&scalar(), &aircraft()}) {
    const Eigen::MatrixXd AK = s->ti.A_K(), P = s->ti.P;
    const double eps = s->ti.eps_z;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    const Eigen::Index nz = P.rows();
    for (int t = 0; t < 10000; ++t) {
      Eigen::VectorXd z(nz);
      for (Eigen::Index i = 0; i < nz; ++i) z(i) = n(rng);
      const double q = z.dot(P * z);
      if (q <= 0) continue;
      z *= std::sqrt(eps * u(rng) / q);
      const Eigen::VectorXd zn = AK * z;
      ASSERT_LE(zn.dot(P * zn), eps * (1 + 1e-9) + 1e-12);
    }
  }
}

// Certified terminal rows hold on sampled points of the mean ellipsoid.
TEST(Terminal, CertifiedRowsHoldOnSamples) {
  const Synth& s = scalar();
  const Eigen::MatrixXd AK = s.ti.A_K(), P = s.ti.P;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0, 1);
  const double sig = s.cfg.sigma_y_value();
  const Eigen::MatrixXd Ginv = s.ti.Gamma.inverse();
  for (int t = 0; t < 10000; ++t) {
    Eigen::Vector2d z(n(rng), n(rng));
    z *= std::sqrt(s.ti.eps_z * u(rng) / z.dot(P * z));
    const double uk = (s.ti.K * z)(0);
    ASSERT_LE(std::abs(uk) + sig * std::sqrt(s.ti.gamma * s.ti.K.row(0).dot(Ginv * s.ti.K.row(0).transpose())),
              s.cfg.u_box.hi(0) + 1e-9);
    const Eigen::RowVector2d a = s.em.E_tilde.transpose() * AK;
    const double y = a.dot(z);
    const double sd = std::sqrt(s.cfg.model.Sigma_W(0, 0) + s.ti.gamma * a.dot(Ginv * a.transpose()));
    ASSERT_LE(std::abs(y) + sig * sd, s.cfg.y_box.hi(0) + 1e-9);
  }
}

// One closed-loop step keeps sum_j |z^j|_Gamma^2 <= gamma.
TEST(Terminal, CovarianceBudgetChain) {
  for (const Synth* s : {&scalar(), &aircraft()}) {
    const Eigen::MatrixXd AK = s->ti.A_K(), G = s->ti.Gamma, E = s->em.E_tilde;
    const Eigen::MatrixXd F = disturbance_factor(s->cfg.model.Sigma_W);
    const double gamma = s->ti.gamma;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(0, 1);
    const Eigen::Index nz = G.rows();
    for (int t = 0; t < 1000; ++t) {
      Eigen::MatrixXd Z(nz, 6);
      for (Eigen::Index k = 0; k < Z.size(); ++k) Z(k) = n(rng);
      Z *= std::sqrt(gamma * u(rng) / (Z.transpose() * G * Z).trace());
      const Eigen::MatrixXd Zn = AK * Z;
      const double after = (Zn.transpose() * G * Zn).trace() + (F.transpose() * E.transpose() * G * E * F).trace();
      ASSERT_LE(after, gamma * (1 + 1e-10));
    }
  }
}

TEST(Terminal, CalibrationLimits) {
  const Synth& s = scalar();
  EpsilonProblem ep{s.ti.K, s.ti.A_K(), s.ti.P, s.ti.Gamma, s.em.E_tilde, s.cfg.model.Sigma_W, s.ti.gamma,
                    Box::unbounded(1), Box::unbounded(1), {3, 3}, 1};
  EXPECT_EQ(calibrate_epsilon_z(ep, EpsilonMode::Full), 1e3);
  ep.u_box = Box{Eigen::VectorXd::Constant(1, -5e-7), Eigen::VectorXd::Constant(1, 5e-7)};
  ep.y_box = ep.u_box;
  EXPECT_THROW(calibrate_epsilon_z(ep, EpsilonMode::Full), AssumptionError);
}

TEST(Terminal, ChanceSigma) {
  EXPECT_DOUBLE_EQ(chance_sigma(1.0), 1.0);
  EXPECT_DOUBLE_EQ(chance_sigma(0.2), 3.0);
  EXPECT_THROW(chance_sigma(0.0), DimensionError);
}

TEST(Terminal, IngredientsJsonRoundTrip) {
  const Synth& s = aircraft();
  const std::string p = ::testing::TempDir() + "ingredients.json";
  write_ingredients_json(s.ti, p);
  const TerminalIngredients b = read_ingredients_json(p);
  EXPECT_EQ(b.K, s.ti.K);
  EXPECT_EQ(b.P, s.ti.P);
  EXPECT_EQ(b.Gamma, s.ti.Gamma);
  EXPECT_EQ(b.M, s.ti.M);
  EXPECT_EQ(b.H, s.ti.H);
  EXPECT_EQ(b.gamma, s.ti.gamma);
  EXPECT_EQ(b.eps_z, s.ti.eps_z);
  EXPECT_EQ(b.eps_mode, s.ti.eps_mode);
}
