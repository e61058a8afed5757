#pragma once

#include <Eigen/Dense>

#include <vector>

namespace ddspc::detail {

// Standard-form cone layout: nonnegative orthant, then second-order cones,
// then PSD cones stored as svec (off-diagonals scaled by sqrt 2).
struct ConeDims {
  int l = 0;
  std::vector<int> q;
  std::vector<int> s;

  int size() const;
  int degree() const;
  int soc_offset(int k) const;
  int psd_offset(int k) const;
};

inline int svec_size(int n) { return n * (n + 1) / 2; }
Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);
Eigen::VectorXd svec(const Eigen::MatrixXd& M);

struct SocScaling {
  double eta = 1.0;
  Eigen::VectorXd wbar;  // W = eta (2 wbar wbar^T - J), wbar^T J wbar = 1
};

struct PsdScaling {
  Eigen::MatrixXd R, Rinv;
};

// Nesterov-Todd scaling W with W z = W^{-T} s = lambda.
struct Scaling {
  Eigen::VectorXd d;  // LP: W = diag(d), d = sqrt(s / z)
  std::vector<SocScaling> soc;
  std::vector<PsdScaling> psd;
  Eigen::VectorXd lambda;
};

bool compute_scaling(const ConeDims& dims, const Eigen::VectorXd& s, const Eigen::VectorXd& z, Scaling& W);

enum class ScaleOp { W, WT, Winv, WinvT };
Eigen::VectorXd apply_scaling(const ConeDims& dims, const Scaling& W, ScaleOp op, const Eigen::VectorXd& x);

Eigen::VectorXd identity_element(const ConeDims& dims);
double cone_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// Jordan product a o b; for PSD parts (AB + BA) / 2.
Eigen::VectorXd jordan_product(const ConeDims& dims, const Eigen::VectorXd& a, const Eigen::VectorXd& b);
// Solves lambda o x = b for a scaled point lambda (PSD parts of lambda diagonal).
Eigen::VectorXd jordan_divide(const ConeDims& dims, const Eigen::VectorXd& lambda, const Eigen::VectorXd& b);
// Smallest t with x + t e in the cone (negative when x is interior).
double min_shift(const ConeDims& dims, const Eigen::VectorXd& x);
// Largest alpha with lambda + alpha d in the cone; lambda interior and, for
// PSD parts, diagonal. Returns +inf if unbounded.
double max_step(const ConeDims& dims, const Eigen::VectorXd& lambda, const Eigen::VectorXd& d);

}  // namespace ddspc::detail
