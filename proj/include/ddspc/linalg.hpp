#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <complex>

#include "ddspc/errors.hpp"

namespace ddspc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kRankTolerance = 1e-8;
inline constexpr double kPsdClamp = 1e-12;

// Block Hankel matrix of a signal stored column-wise (one column per time
// step). Column c of the result stacks seq[c], ..., seq[c + depth - 1].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> hankel(
    const Eigen::MatrixBase<Derived>& seq, Eigen::Index depth) {
  const Eigen::Index n = seq.rows(), T = seq.cols();
  if (depth < 1 || depth > T) throw DimensionError("hankel: depth must lie in [1, T]");
  const Eigen::Index cols = T - depth + 1;
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> H(n * depth, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index d = 0; d < depth; ++d) H.block(d * n, c, n, 1) = seq.col(c + d);
  return H;
}

// Rank from singular values above rel_tol * sigma_max.
template <typename Derived>
Eigen::Index numerical_rank(const Eigen::MatrixBase<Derived>& A, double rel_tol = kRankTolerance) {
  if (A.size() == 0) return 0;
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::BDCSVD<M> svd(A.eval());
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

template <typename Derived>
bool has_full_row_rank(const Eigen::MatrixBase<Derived>& A, double rel_tol = kRankTolerance) {
  return A.rows() <= A.cols() && numerical_rank(A, rel_tol) == A.rows();
}

template <typename Derived>
typename Derived::Scalar symmetry_error(const Eigen::MatrixBase<Derived>& A) {
  if (A.rows() != A.cols()) throw DimensionError("symmetry_error: matrix not square");
  return (A - A.transpose()).cwiseAbs().maxCoeff();
}

// Symmetric square root U D^{1/2} U^T of a PSD matrix; eigenvalues within
// clamp * max(1, |lambda|_max) of zero are treated as zero, more negative
// ones are rejected.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> psd_sqrt(
    const Eigen::MatrixBase<Derived>& A, double clamp = kPsdClamp) {
  using Scalar = typename Derived::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != A.cols()) throw DimensionError("psd_sqrt: matrix not square");
  if (A.size() == 0) return M(0, 0);
  M S = (A + A.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<M> es(S);
  auto d = es.eigenvalues();
  const Scalar scale = std::max<Scalar>(Scalar(1), d.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d(i) < -clamp * scale - Scalar(1e-9) * scale)
      throw AssumptionError("psd_sqrt: matrix is not positive semidefinite");
    d(i) = d(i) <= clamp * scale ? Scalar(0) : std::sqrt(d(i));
  }
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

template <typename Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& A, double tol = 1e-10) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != A.cols()) return false;
  if (A.size() == 0) return true;
  M S = (A + A.transpose()) / 2;
  Eigen::SelfAdjointEigenSolver<M> es(S, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, double(es.eigenvalues().cwiseAbs().maxCoeff()));
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

template <typename Derived>
bool is_positive_definite(const Eigen::MatrixBase<Derived>& A) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() != A.cols() || symmetry_error(A) > 1e-8 * std::max(1.0, double(A.cwiseAbs().maxCoeff())))
    return false;
  Eigen::LLT<M> llt(((A + A.transpose()) / 2).eval());
  return llt.info() == Eigen::Success;
}

template <typename Derived>
double spectral_radius(const Eigen::MatrixBase<Derived>& A) {
  if (A.rows() != A.cols()) throw DimensionError("spectral_radius: matrix not square");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(A.template cast<double>(), false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pseudo_inverse(
    const Eigen::MatrixBase<Derived>& A, double rel_tol = 1e-12) {
  using M = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.size() == 0) return M::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<M> svd(A.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto s = svd.singularValues();
  const auto smax = s.size() ? s(0) : 0;
  decltype(s) inv = s;
  for (Eigen::Index i = 0; i < s.size(); ++i) inv(i) = s(i) > rel_tol * smax && s(i) > 0 ? 1 / s(i) : 0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Solves A^T X A - X = -Q by Kronecker vectorization.
template <typename DA, typename DQ>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, Eigen::Dynamic> stein_solve(
    const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DQ>& Q) {
  using Scalar = typename DA::Scalar;
  using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) throw DimensionError("stein_solve: shape mismatch");
  if (spectral_radius(A) >= 1.0) throw AssumptionError("stein_solve: A is not Schur");
  M At = A.transpose();
  M K = M::Identity(n * n, n * n) - Eigen::kroneckerProduct(At, At).eval();
  M Qs = (Q + Q.transpose()) / Scalar(2);
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> q(Qs.data(), n * n);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = K.partialPivLu().solve(q);
  M X = Eigen::Map<M>(x.data(), n, n);
  return (X + X.transpose()) / Scalar(2);
}

template <typename DA, typename DX, typename DQ>
double stein_residual(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DX>& X,
                      const Eigen::MatrixBase<DQ>& Q) {
  return (A.transpose() * X * A - X + Q).norm();
}

}  // namespace ddspc
