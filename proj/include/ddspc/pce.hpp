#pragma once

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "ddspc/errors.hpp"

namespace ddspc {

enum class GermFamily { Hermite, Legendre };

// Joint basis: index 0 is the constant, [1, L_ini-1] the initial-condition
// germs, then N blocks of (L_w - 1) disturbance germs, one block per step.
struct BasisSpec {
  int L_ini = 1;
  int L_w = 1;
  int N = 1;
  int L = 1;
  std::vector<GermFamily> ini_family;   // size L_ini - 1
  std::vector<GermFamily> dist_family;  // size L_w - 1, shared by all blocks
  Eigen::VectorXd norms_sq;

  int block_begin(int i) const { return L_ini + i * (L_w - 1); }
  GermFamily family(int j) const;
};

BasisSpec build_joint_basis(int L_ini, int L_w, int N, GermFamily ini = GermFamily::Hermite,
                            GermFamily dist = GermFamily::Hermite);
BasisSpec build_joint_basis(int L_ini, int L_w, int N, std::vector<GermFamily> ini_family,
                            std::vector<GermFamily> dist_family);

template <typename Scalar>
struct PceVectorT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix coeffs;  // dim x L

  PceVectorT() = default;
  explicit PceVectorT(Matrix c) : coeffs(std::move(c)) {}
  static PceVectorT zero(Eigen::Index dim, Eigen::Index L) { return PceVectorT(Matrix::Zero(dim, L)); }
  static PceVectorT deterministic(const Vector& v, Eigen::Index L) {
    PceVectorT p = zero(v.size(), L);
    p.coeffs.col(0) = v;
    return p;
  }

  Eigen::Index dim() const { return coeffs.rows(); }
  Eigen::Index terms() const { return coeffs.cols(); }
  auto mean() const { return coeffs.col(0); }
  bool is_deterministic(Scalar tol = Scalar(0)) const {
    return terms() <= 1 || coeffs.rightCols(terms() - 1).cwiseAbs().maxCoeff() <= tol;
  }

  PceVectorT operator+(const PceVectorT& o) const { return PceVectorT(Matrix(coeffs + o.coeffs)); }
  PceVectorT operator-(const PceVectorT& o) const { return PceVectorT(Matrix(coeffs - o.coeffs)); }
  friend PceVectorT operator*(Scalar a, const PceVectorT& v) { return PceVectorT(Matrix(a * v.coeffs)); }
  template <typename D>
  friend PceVectorT operator*(const Eigen::MatrixBase<D>& A, const PceVectorT& v) {
    return PceVectorT(Matrix(A * v.coeffs));
  }
};

using PceVector = PceVectorT<double>;

template <typename Scalar>
struct MomentsT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov;
};
using Moments = MomentsT<double>;

template <typename Derived>
MomentsT<typename Derived::Scalar> moments(const Eigen::MatrixBase<Derived>& coeffs,
                                           const Eigen::VectorXd& norms_sq) {
  using Scalar = typename Derived::Scalar;
  require_dims(coeffs.cols() == norms_sq.size() && coeffs.cols() >= 1, "moments: coefficient count != basis size");
  MomentsT<Scalar> m;
  m.mean = coeffs.col(0);
  const auto rest = coeffs.rightCols(coeffs.cols() - 1);
  m.cov = rest * norms_sq.tail(norms_sq.size() - 1).template cast<Scalar>().asDiagonal() * rest.transpose();
  return m;
}

template <typename Scalar>
MomentsT<Scalar> moments(const PceVectorT<Scalar>& v, const BasisSpec& basis) {
  return moments(v.coeffs, basis.norms_sq);
}

// sum_j v^j phi^j(xi) for an evaluated germ draw (draw[0] = 1).
template <typename Scalar, typename D>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sample_realization(const PceVectorT<Scalar>& v,
                                                            const Eigen::MatrixBase<D>& draw) {
  require_dims(draw.size() == v.terms(), "sample_realization: draw length != basis size");
  return v.coeffs * draw.template cast<Scalar>();
}

// Factor F (n_w x n_w) with F F^T = Sigma_W, the symmetric PSD square root.
Eigen::MatrixXd disturbance_factor(const Eigen::MatrixXd& Sigma_W);

// PCE of the disturbance at horizon step i: columns of the factor placed in
// block i, each column on one degree-1 germ.
PceVector disturbance_pce(const Eigen::MatrixXd& Sigma_W, const BasisSpec& basis, int block_index);

// Evaluated basis polynomials phi^j(xi) for an independent germ draw.
Eigen::VectorXd draw_germs(const BasisSpec& basis, std::mt19937_64& rng);

// Normalized degree-1 polynomial of a germ family evaluated at xi.
double germ_polynomial(GermFamily f, double xi);

}  // namespace ddspc
