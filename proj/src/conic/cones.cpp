#include "conic/cones.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace ddspc::detail {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

int ConeDims::size() const {
  int m = l;
  for (int k : q) m += k;
  for (int k : s) m += svec_size(k);
  return m;
}

int ConeDims::degree() const {
  int d = l + int(q.size());
  for (int k : s) d += k;
  return d;
}

int ConeDims::soc_offset(int k) const {
  int o = l;
  for (int i = 0; i < k; ++i) o += q[i];
  return o;
}

int ConeDims::psd_offset(int k) const {
  int o = soc_offset(int(q.size()));
  for (int i = 0; i < k; ++i) o += svec_size(s[i]);
  return o;
}

Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  Eigen::MatrixXd M(n, n);
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) {
      const double x = r == c ? v(k) : v(k) / kSqrt2;
      M(r, c) = x;
      M(c, r) = x;
      ++k;
    }
  return M;
}

Eigen::VectorXd svec(const Eigen::MatrixXd& M) {
  const int n = int(M.rows());
  Eigen::VectorXd v(svec_size(n));
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c; r < n; ++r) v(k++) = r == c ? M(r, c) : kSqrt2 * 0.5 * (M(r, c) + M(c, r));
  return v;
}

namespace {

double jdot(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b) {
  return a(0) * b(0) - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
}

}  // namespace

bool compute_scaling(const ConeDims& dims, const Eigen::VectorXd& s, const Eigen::VectorXd& z, Scaling& W) {
  const int m = dims.size();
  W.lambda.resize(m);
  W.d.resize(dims.l);
  for (int i = 0; i < dims.l; ++i) {
    if (!(s(i) > 0 && z(i) > 0)) return false;
    W.d(i) = std::sqrt(s(i) / z(i));
    W.lambda(i) = std::sqrt(s(i) * z(i));
  }
  W.soc.resize(dims.q.size());
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    auto sk = s.segment(o, n);
    auto zk = z.segment(o, n);
    const double sn = jdot(sk, sk), zn = jdot(zk, zk);
    if (!(sn > 0 && zn > 0 && sk(0) > 0 && zk(0) > 0)) return false;
    const double ss = std::sqrt(sn), zs = std::sqrt(zn);
    Eigen::VectorXd sb = sk / ss, zb = zk / zs;
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    Eigen::VectorXd wb(n);
    wb(0) = (sb(0) + zb(0)) / (2 * gamma);
    wb.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2 * gamma);
    // W = eta (2 v v^T - J) with v the hyperbolic square root of wbar.
    Eigen::VectorXd v = wb;
    v(0) += 1.0;
    v /= std::sqrt(2.0 * (wb(0) + 1.0));
    auto& sc = W.soc[k];
    sc.eta = std::sqrt(ss / zs);
    sc.wbar = v;
    // lambda = W z
    Eigen::VectorXd Jz = zk;
    Jz.tail(n - 1) *= -1;
    W.lambda.segment(o, n) = sc.eta * (2 * v.dot(zk) * v - Jz);
  }
  W.psd.resize(dims.s.size());
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    Eigen::LLT<Eigen::MatrixXd> ls(smat(s.segment(o, svec_size(n)), n));
    Eigen::LLT<Eigen::MatrixXd> lz(smat(z.segment(o, svec_size(n)), n));
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    Eigen::MatrixXd Ls = ls.matrixL(), Lz = lz.matrixL();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd lam = svd.singularValues();
    if (!(lam.minCoeff() > 0)) return false;
    const Eigen::VectorXd isq = lam.cwiseSqrt().cwiseInverse();
    auto& sc = W.psd[k];
    sc.R = Ls * svd.matrixV() * isq.asDiagonal();
    sc.Rinv = isq.asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    L.diagonal() = lam;
    W.lambda.segment(o, svec_size(n)) = svec(L);
  }
  return true;
}

Eigen::VectorXd apply_scaling(const ConeDims& dims, const Scaling& W, ScaleOp op, const Eigen::VectorXd& x) {
  Eigen::VectorXd y(x.size());
  const bool inverse = op == ScaleOp::Winv || op == ScaleOp::WinvT;
  if (dims.l) {
    if (inverse) y.head(dims.l) = x.head(dims.l).cwiseQuotient(W.d);
    else y.head(dims.l) = x.head(dims.l).cwiseProduct(W.d);
  }
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    const auto& sc = W.soc[k];
    auto xk = x.segment(o, n);
    Eigen::VectorXd Jx = xk;
    Jx.tail(n - 1) *= -1;
    if (!inverse) {
      y.segment(o, n) = sc.eta * (2 * sc.wbar.dot(xk) * sc.wbar - Jx);
    } else {
      Eigen::VectorXd a = sc.wbar;
      a.tail(n - 1) *= -1;
      y.segment(o, n) = (2 * a.dot(xk) * a - Jx) / sc.eta;
    }
  }
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    const auto& sc = W.psd[k];
    Eigen::MatrixXd X = smat(x.segment(o, svec_size(n)), n), Y;
    switch (op) {
      case ScaleOp::W: Y = sc.R.transpose() * X * sc.R; break;
      case ScaleOp::WT: Y = sc.R * X * sc.R.transpose(); break;
      case ScaleOp::Winv: Y = sc.Rinv.transpose() * X * sc.Rinv; break;
      case ScaleOp::WinvT: Y = sc.Rinv * X * sc.Rinv.transpose(); break;
    }
    y.segment(o, svec_size(n)) = svec(Y);
  }
  return y;
}

Eigen::VectorXd identity_element(const ConeDims& dims) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dims.size());
  e.head(dims.l).setOnes();
  for (std::size_t k = 0; k < dims.q.size(); ++k) e(dims.soc_offset(int(k))) = 1.0;
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    e.segment(o, svec_size(n)) = svec(Eigen::MatrixXd::Identity(n, n));
  }
  return e;
}

double cone_dot(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }

Eigen::VectorXd jordan_product(const ConeDims& dims, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd c(a.size());
  c.head(dims.l) = a.head(dims.l).cwiseProduct(b.head(dims.l));
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    auto ak = a.segment(o, n);
    auto bk = b.segment(o, n);
    c(o) = ak.dot(bk);
    c.segment(o + 1, n - 1) = ak(0) * bk.tail(n - 1) + bk(0) * ak.tail(n - 1);
  }
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    Eigen::MatrixXd A = smat(a.segment(o, svec_size(n)), n), B = smat(b.segment(o, svec_size(n)), n);
    c.segment(o, svec_size(n)) = svec(0.5 * (A * B + B * A));
  }
  return c;
}

Eigen::VectorXd jordan_divide(const ConeDims& dims, const Eigen::VectorXd& lambda, const Eigen::VectorXd& b) {
  Eigen::VectorXd x(b.size());
  x.head(dims.l) = b.head(dims.l).cwiseQuotient(lambda.head(dims.l));
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    auto u = lambda.segment(o, n);
    auto v = b.segment(o, n);
    const double det = jdot(u, u);
    const double x0 = (u(0) * v(0) - u.tail(n - 1).dot(v.tail(n - 1))) / det;
    x(o) = x0;
    x.segment(o + 1, n - 1) = (v.tail(n - 1) - x0 * u.tail(n - 1)) / u(0);
  }
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    const Eigen::VectorXd lam = smat(lambda.segment(o, svec_size(n)), n).diagonal();
    Eigen::MatrixXd B = smat(b.segment(o, svec_size(n)), n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) *= 2.0 / (lam(i) + lam(j));
    x.segment(o, svec_size(n)) = svec(B);
  }
  return x;
}

double min_shift(const ConeDims& dims, const Eigen::VectorXd& x) {
  double t = -kInf;
  if (dims.l) t = std::max(t, -x.head(dims.l).minCoeff());
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    t = std::max(t, x.segment(o + 1, n - 1).norm() - x(o));
  }
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(smat(x.segment(o, svec_size(n)), n), Eigen::EigenvaluesOnly);
    t = std::max(t, -es.eigenvalues().minCoeff());
  }
  return t;
}

double max_step(const ConeDims& dims, const Eigen::VectorXd& lambda, const Eigen::VectorXd& d) {
  double alpha = kInf;
  for (int i = 0; i < dims.l; ++i)
    if (d(i) < 0) alpha = std::min(alpha, -lambda(i) / d(i));
  for (std::size_t k = 0; k < dims.q.size(); ++k) {
    const int o = dims.soc_offset(int(k)), n = dims.q[k];
    auto u = lambda.segment(o, n);
    auto v = d.segment(o, n);
    // f(a) = (u0 + a v0)^2 - |u1 + a v1|^2 >= 0, f(0) > 0.
    const double A = jdot(v, v), B = 2 * jdot(u, v), C = jdot(u, u);
    double root = kInf;
    if (std::abs(A) <= 1e-300) {
      if (B < 0) root = -C / B;
    } else {
      const double disc = B * B - 4 * A * C;
      if (disc >= 0) {
        const double sq = std::sqrt(disc);
        const double qq = -0.5 * (B + (B >= 0 ? sq : -sq));
        double r1 = qq / A, r2 = qq != 0 ? C / qq : kInf;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 0) root = r1;
        else if (r2 > 0) root = r2;
      }
    }
    // Guard against leaving through the negative branch.
    if (v(0) < 0) root = std::min(root, -u(0) / v(0));
    alpha = std::min(alpha, root);
  }
  for (std::size_t k = 0; k < dims.s.size(); ++k) {
    const int o = dims.psd_offset(int(k)), n = dims.s[k];
    const Eigen::VectorXd isq = smat(lambda.segment(o, svec_size(n)), n).diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd M = isq.asDiagonal() * smat(d.segment(o, svec_size(n)), n) * isq.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    const double mn = es.eigenvalues().minCoeff();
    if (mn < 0) alpha = std::min(alpha, -1.0 / mn);
  }
  return alpha;
}

}  // namespace ddspc::detail
