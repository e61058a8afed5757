#include <gtest/gtest.h>

#include <random>

#include "ddspc/pce.hpp"

using namespace ddspc;

TEST(Basis, AircraftDimension) {
  const BasisSpec b = build_joint_basis(9, 4, 10);
  EXPECT_EQ(b.L, 39);
  EXPECT_EQ(b.norms_sq.size(), 39);
}

TEST(Basis, DeterministicSystem) { EXPECT_EQ(build_joint_basis(1, 1, 5).L, 1); }

TEST(Basis, BlockLayout) {
  const BasisSpec b = build_joint_basis(3, 2, 3);
  EXPECT_EQ(b.L, 6);
  EXPECT_EQ(b.block_begin(0), 3);
  EXPECT_EQ(b.block_begin(1), 4);
  EXPECT_EQ(b.block_begin(2), 5);
}

TEST(Basis, SizeFormulaSweep) {
  for (int li = 1; li <= 5; ++li)
    for (int lw = 1; lw <= 4; ++lw)
      for (int n = 1; n <= 6; ++n) {
        const BasisSpec b = build_joint_basis(li, lw, n, GermFamily::Legendre, GermFamily::Hermite);
        ASSERT_EQ(b.L, li + n * (lw - 1));
        ASSERT_EQ(b.norms_sq(0), 1.0);
        for (int j = 0; j < b.L; ++j) ASSERT_EQ(b.norms_sq(j), 1.0);
      }
}

TEST(Moments, DeterministicAndScalar) {
  const BasisSpec b = build_joint_basis(2, 1, 1);
  PceVector d = PceVector::deterministic(Eigen::Vector2d(1.5, -2.0), b.L);
  Moments m = moments(d, b);
  EXPECT_EQ(m.mean, Eigen::Vector2d(1.5, -2.0));
  EXPECT_EQ(m.cov.norm(), 0.0);

  PceVector s(Eigen::MatrixXd(Eigen::RowVector2d(0.0, 2.0)));
  m = moments(s, b);
  EXPECT_DOUBLE_EQ(m.mean(0), 0.0);
  EXPECT_DOUBLE_EQ(m.cov(0, 0), 4.0);
}

TEST(Moments, Linearity) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  const BasisSpec b = build_joint_basis(3, 3, 2);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd A(2, b.L), B(2, b.L);
    for (Eigen::Index k = 0; k < A.size(); ++k) {
      A(k) = n(rng);
      B(k) = n(rng);
    }
    const double a = n(rng), c = n(rng);
    const PceVector u(A), v(B);
    const Moments m = moments(a * u + c * v, b);
    EXPECT_LT((m.mean - (a * moments(u, b).mean + c * moments(v, b).mean)).norm(), 1e-12);
  }
}

TEST(Disturbance, AircraftCovariance) {
  const Eigen::Matrix3d Sw = Eigen::Vector3d(1e-4, 1.0, 1e-2).asDiagonal();
  const BasisSpec b = build_joint_basis(9, 4, 10);
  for (int i = 0; i < 10; ++i) {
    const PceVector w = disturbance_pce(Sw, b, i);
    EXPECT_LT((moments(w, b).cov - Sw).norm(), 1e-14);
    EXPECT_EQ(w.mean().norm(), 0.0);
    // Block columns carry diag(sigma).
    EXPECT_LT((w.coeffs.middleCols(b.block_begin(i), 3) - Eigen::Matrix3d(Eigen::Vector3d(1e-2, 1.0, 1e-1).asDiagonal()))
                  .norm(),
              1e-14);
    EXPECT_EQ(w.coeffs.leftCols(b.block_begin(i)).norm(), 0.0);
  }
}

TEST(Disturbance, ZeroCovariance) {
  const BasisSpec b = build_joint_basis(2, 3, 2);
  EXPECT_EQ(disturbance_pce(Eigen::Matrix2d::Zero(), b, 1).coeffs.norm(), 0.0);
}

TEST(Disturbance, RankDeficientFactor) {
  Eigen::Matrix2d Sw;
  Sw << 1, 1, 1, 1;
  const Eigen::MatrixXd F = disturbance_factor(Sw);
  EXPECT_LT((F * F.transpose() - Sw).norm(), 1e-12);
}

TEST(Realization, Examples) {
  const PceVector d = PceVector::deterministic(Eigen::Vector2d(3, 4), 3);
  EXPECT_EQ(sample_realization(d, Eigen::Vector3d(1, 0.3, -7)), Eigen::Vector2d(3, 4));
  const PceVector s(Eigen::MatrixXd(Eigen::RowVector2d(1, 2)));
  EXPECT_DOUBLE_EQ(sample_realization(s, Eigen::Vector2d(1, 0.5))(0), 2.0);
}

// Sample moments under germ draws agree with the coefficient moments.
TEST(Realization, MonteCarloMoments) {
  for (GermFamily f : {GermFamily::Hermite, GermFamily::Legendre}) {
    const BasisSpec b = build_joint_basis(3, 3, 2, f, f);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0, 1);
    Eigen::MatrixXd C(2, b.L);
    for (Eigen::Index k = 0; k < C.size(); ++k) C(k) = n(rng);
    const PceVector v(C);
    const Moments m = moments(v, b);
    const int S = 100000;
    Eigen::MatrixXd X(2, S);
    for (int s = 0; s < S; ++s) X.col(s) = sample_realization(v, draw_germs(b, rng));
    const Eigen::Vector2d mu = X.rowwise().mean();
    const Eigen::MatrixXd D = X.colwise() - mu;
    const Eigen::Matrix2d cov = D * D.transpose() / (S - 1);
    for (int i = 0; i < 2; ++i) {
      EXPECT_LT(std::abs(mu(i) - m.mean(i)), 3 * std::sqrt(m.cov(i, i) / S));
      const double m4 = D.row(i).array().pow(4).mean();
      EXPECT_LT(std::abs(cov(i, i) - m.cov(i, i)), 3 * std::sqrt((m4 - cov(i, i) * cov(i, i)) / S));
    }
  }
}

TEST(Realization, GermsAreOrthonormal) {
  const BasisSpec b = build_joint_basis(2, 2, 1, GermFamily::Legendre, GermFamily::Hermite);
  std::mt19937_64 rng(3);
  const int S = 200000;
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  for (int s = 0; s < S; ++s) {
    const Eigen::Vector3d p = draw_germs(b, rng);
    G += p * p.transpose();
  }
  G /= S;
  EXPECT_LT((G - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 0.02);
}
