#include <gtest/gtest.h>

#include <random>

#include "ddspc/arx.hpp"
#include "ddspc/benchmark.hpp"

using namespace ddspc;

namespace {

ArxModel scalar_model() { return scalar_config().model; }

Eigen::MatrixXd randn(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = n(rng);
  return m;
}

}  // namespace

TEST(Extended, ScalarMatrices) {
  const ExtendedMatrices em = extended_matrices(scalar_model());
  Eigen::Matrix2d A;
  A << 0, 0, 1.0, 0.5;
  EXPECT_EQ(em.A_tilde, A);
  EXPECT_EQ(em.B_tilde, Eigen::Vector2d(1, 0));
  EXPECT_EQ(em.E_tilde, Eigen::Vector2d(0, 1));
}

TEST(Extended, ZeroModel) {
  ArxModel m;
  m.Phi = Eigen::MatrixXd::Zero(2, 6);
  m.D = Eigen::MatrixXd::Zero(2, 1);
  m.T_ini = 2;
  m.Sigma_W = Eigen::Matrix2d::Identity();
  const ExtendedMatrices em = extended_matrices(m);
  EXPECT_EQ(em.A_tilde.topRows(4), em.A_bar);
  EXPECT_EQ(em.A_tilde.bottomRows(2).norm(), 0.0);
  for (Eigen::Index k = 0; k < em.A_bar.size(); ++k) EXPECT_TRUE(em.A_bar(k) == 0.0 || em.A_bar(k) == 1.0);
}

TEST(Extended, AircraftStateSize) { EXPECT_EQ(aircraft_config().model.n_z(), 8); }

TEST(Step, Examples) {
  const ArxModel m = scalar_model();
  StepResult r = step_realization(m, Eigen::Vector2d::Zero(), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  EXPECT_EQ(r.y.norm(), 0.0);
  EXPECT_EQ(r.z_next.norm(), 0.0);
  r = step_realization(m, Eigen::Vector2d(1, 2), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(r.y(0), 2.0);
}

// y = E' z_next and z_next = A z + B u + E w, on random triples.
TEST(Step, AgreesWithStateSpace) {
  const ArxModel m = aircraft_config().model;
  const ExtendedMatrices em = extended_matrices(m);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd z = randn(8, 1, rng), u = randn(1, 1, rng), w = randn(3, 1, rng);
    const StepResult r = step_realization(m, z, u, w);
    ASSERT_LT((r.z_next - (em.A_tilde * z + em.B_tilde * u + em.E_tilde * w)).norm(), 1e-12 * (1 + z.norm()) * 30);
    ASSERT_EQ(em.E_tilde.transpose() * r.z_next, r.y);
  }
}

TEST(Simulate, ScalarClosedForm) {
  // u = 0 after the first step, w = 0: y_k = 0.5^k y_0.
  const ArxModel m = scalar_model();
  const int T = 10;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(1, T), w = Eigen::MatrixXd::Zero(1, T);
  const Trajectory tr = simulate(m, Eigen::Vector2d(1, 2), u, w);
  EXPECT_DOUBLE_EQ(tr.y(0, 0), 2.0);
  for (int k = 1; k < T; ++k) EXPECT_NEAR(tr.y(0, k), 2.0 * std::pow(0.5, k), 1e-15);
}

TEST(Simulate, ShiftConsistency) {
  const ArxModel m = aircraft_config().model;
  std::mt19937_64 rng(2);
  const Trajectory tr = simulate(m, randn(8, 1, rng), randn(1, 15, rng), randn(3, 15, rng));
  Eigen::VectorXd z = tr.initial_state();
  for (int k = 0; k < 15; ++k) {
    const StepResult r = step_realization(m, z, tr.u.col(k), tr.w.col(k));
    ASSERT_LT((r.y - tr.y.col(k)).norm(), 1e-9 * (1 + r.y.norm()));
    z = shift_extended_state(1, 3, 2, z, tr.u.col(k), tr.y.col(k));
    ASSERT_EQ(z.segment(1, 1), tr.u.col(k));
    ASSERT_EQ(z.tail(3), tr.y.col(k));
  }
}

TEST(Disturbance, SampleCovariance) {
  ArxModel m = aircraft_config().model;
  for (auto dist : {DisturbanceDistribution::Gaussian, DisturbanceDistribution::Uniform}) {
    std::mt19937_64 rng(9);
    const int S = 100000;
    Eigen::MatrixXd X(3, S);
    for (int s = 0; s < S; ++s) X.col(s) = sample_disturbance(m, rng, dist);
    for (int i = 0; i < 3; ++i) {
      const double var = X.row(i).squaredNorm() / S, sw = m.Sigma_W(i, i);
      const double m4 = X.row(i).array().pow(4).mean();
      EXPECT_LT(std::abs(X.row(i).mean()), 3 * std::sqrt(sw / S));
      EXPECT_LT(std::abs(var - sw), 3 * std::sqrt((m4 - sw * sw) / S));
    }
  }
  m.Sigma_W.setZero();
  std::mt19937_64 rng(1);
  EXPECT_EQ(sample_disturbance(m, rng).norm(), 0.0);
}

TEST(PceStep, DeterministicReducesToRealization) {
  const ArxModel m = aircraft_config().model;
  std::mt19937_64 rng(4);
  const Eigen::VectorXd z = randn(8, 1, rng), u = randn(1, 1, rng), w = randn(3, 1, rng);
  const PceStep p = pce_step(m, PceVector::deterministic(z, 5), PceVector::deterministic(u, 5),
                             PceVector::deterministic(w, 5));
  const StepResult r = step_realization(m, z, u, w);
  EXPECT_LT((p.y.mean() - r.y).norm(), 1e-12);
  EXPECT_TRUE(p.y.is_deterministic());
  EXPECT_LT((p.z_next.mean() - r.z_next).norm(), 1e-12);
}

TEST(PceStep, ScalarGermCoefficient) {
  const ArxModel m = scalar_model();
  PceVector w = PceVector::zero(1, 2);
  w.coeffs(0, 1) = 1.0;
  const PceStep p = pce_step(m, PceVector::zero(2, 2), PceVector::zero(1, 2), w);
  EXPECT_DOUBLE_EQ(p.y.coeffs(0, 1), 1.0);
}

// Realizing after the coefficient step equals stepping the realization.
TEST(PceStep, RealizationCommutes) {
  const ArxModel m = aircraft_config().model;
  const BasisSpec b = build_joint_basis(4, 4, 2);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    const PceVector z(randn(8, b.L, rng)), u(randn(1, b.L, rng)), w(randn(3, b.L, rng));
    const PceStep p = pce_step(m, z, u, w);
    const Eigen::VectorXd phi = draw_germs(b, rng);
    const StepResult r =
        step_realization(m, sample_realization(z, phi), sample_realization(u, phi), sample_realization(w, phi));
    ASSERT_LT((sample_realization(p.y, phi) - r.y).norm(), 1e-12 * (1 + r.y.norm()) * 100);
    ASSERT_LT((sample_realization(p.z_next, phi) - r.z_next).norm(), 1e-12 * (1 + r.z_next.norm()) * 100);
  }
}

TEST(Model, Validation) {
  ArxModel m = scalar_model();
  m.Sigma_W(0, 0) = -1;
  EXPECT_THROW(m.validate(), AssumptionError);
  m = scalar_model();
  m.Phi = Eigen::MatrixXd::Zero(1, 3);
  EXPECT_THROW(m.validate(), DimensionError);
}
