#include "conic/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ddspc::detail {

namespace {

using RowSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
constexpr double kInf = std::numeric_limits<double>::infinity();

SparseMatrix row_slice(const RowSparse& Gr, int o, int n) { return SparseMatrix(Gr.middleRows(o, n)); }

// Row groups that must share one scale factor (a whole SOC or PSD block).
std::vector<int> row_groups(const ConeDims& d) {
  std::vector<int> g(d.size());
  int id = 0, r = 0;
  for (; r < d.l; ++r) g[r] = id++;
  for (int n : d.q) {
    for (int i = 0; i < n; ++i) g[r++] = id;
    ++id;
  }
  for (int n : d.s) {
    for (int i = 0; i < svec_size(n); ++i) g[r++] = id;
    ++id;
  }
  return g;
}

}  // namespace

void IpmStructure::build(const ConeDims& d, const SparseMatrix& G_raw, bool equilibrate) {
  dims = d;
  G = G_raw;
  G.makeCompressed();
  const int m = int(G.rows()), n = int(G.cols());
  col_scale = Eigen::VectorXd::Ones(n);
  row_scale = Eigen::VectorXd::Ones(m);
  if (equilibrate && m > 0 && n > 0) {
    const std::vector<int> grp = row_groups(d);
    const int ngroups = grp.empty() ? 0 : grp.back() + 1;
    for (int pass = 0; pass < 12; ++pass) {
      Eigen::VectorXd cn = Eigen::VectorXd::Zero(n), gn = Eigen::VectorXd::Zero(ngroups);
      for (int k = 0; k < G.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(G, k); it; ++it) {
          const double a = std::abs(it.value());
          cn(k) = std::max(cn(k), a);
          gn(grp[it.row()]) = std::max(gn(grp[it.row()]), a);
        }
      Eigen::VectorXd cf(n), gf(ngroups);
      for (int j = 0; j < n; ++j) cf(j) = cn(j) > 0 ? 1.0 / std::sqrt(cn(j)) : 1.0;
      for (int j = 0; j < ngroups; ++j) gf(j) = gn(j) > 0 ? 1.0 / std::sqrt(gn(j)) : 1.0;
      for (int k = 0; k < G.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(G, k); it; ++it) it.valueRef() *= cf(k) * gf(grp[it.row()]);
      col_scale = col_scale.cwiseProduct(cf);
      for (int r = 0; r < m; ++r) row_scale(r) *= gf(grp[r]);
    }
  }
  RowSparse Gr = G;
  G_lp = row_slice(Gr, 0, d.l);
  G_soc.clear();
  GtG_soc.clear();
  for (std::size_t k = 0; k < d.q.size(); ++k) {
    G_soc.push_back(row_slice(Gr, d.soc_offset(int(k)), d.q[k]));
    GtG_soc.push_back(SparseMatrix(G_soc.back().transpose() * G_soc.back()));
  }
  G_psd.clear();
  for (std::size_t k = 0; k < d.s.size(); ++k)
    G_psd.push_back(Eigen::MatrixXd(row_slice(Gr, d.psd_offset(int(k)), svec_size(d.s[k]))));
}

namespace {

void add_sparse(Eigen::MatrixXd& H, const SparseMatrix& S, double scale) {
  for (int k = 0; k < S.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(S, k); it; ++it) H(it.row(), it.col()) += scale * it.value();
}

// Newton system [0 G^T; G -W^T W]. Cholesky of the normal equations is cheap
// but squares the condition number of W^{-T} G; when refinement cannot
// recover the accuracy, the system is re-solved with a QR of W^{-T} G.
class Kkt {
 public:
  // accept: tolerated refinement error relative to the right-hand side.
  Kkt(const IpmStructure& st, const Scaling& W, double accept) : st_(st), W_(W), accept_(accept) {}

  bool factor() {
    const int n = int(st_.G.cols());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    const auto& d = st_.dims;
    if (d.l) {
      SparseMatrix Gs = W_.d.cwiseInverse().asDiagonal() * st_.G_lp;
      add_sparse(H, SparseMatrix(Gs.transpose() * Gs), 1.0);
    }
    for (std::size_t k = 0; k < d.q.size(); ++k) {
      const auto& sc = W_.soc[k];
      const double ie2 = 1.0 / (sc.eta * sc.eta);
      Eigen::VectorXd a = sc.wbar;
      a.tail(a.size() - 1) *= -1;
      const Eigen::VectorXd u = st_.G_soc[k].transpose() * a, v = st_.G_soc[k].transpose() * sc.wbar;
      add_sparse(H, st_.GtG_soc[k], ie2);
      H.noalias() += (ie2 * 4 * sc.wbar.squaredNorm()) * u * u.transpose();
      H.noalias() -= (2 * ie2) * (u * v.transpose() + v * u.transpose());
    }
    for (std::size_t k = 0; k < d.s.size(); ++k) {
      const int ord = d.s[k];
      const auto& Gk = st_.G_psd[k];
      Eigen::MatrixXd Gh(Gk.rows(), n);
      const auto& Ri = W_.psd[k].Rinv;
      for (int j = 0; j < n; ++j) {
        if (Gk.col(j).isZero(0.0)) {
          Gh.col(j).setZero();
          continue;
        }
        Gh.col(j) = svec(Ri * smat(Gk.col(j), ord) * Ri.transpose());
      }
      H.noalias() += Gh.transpose() * Gh;
    }
    H = 0.5 * (H + H.transpose());
    const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
    double delta = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd Hr = H;
      if (delta > 0) Hr.diagonal().array() += delta;
      llt_.compute(Hr);
      if (llt_.info() == Eigen::Success) return true;
      delta = delta == 0 ? 1e-14 * scale : delta * 100;
    }
    return factor_qr();
  }

  void solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& ux, Eigen::VectorXd& uz) {
    if (!use_qr_) {
      const double err = refined_solve(bx, bz, ux, uz);
      if (err <= accept_ * std::max({1.0, bx.lpNorm<Eigen::Infinity>(), bz.lpNorm<Eigen::Infinity>()})) return;
      if (!factor_qr()) return;
    }
    refined_solve(bx, bz, ux, uz);
  }

  bool used_qr() const { return use_qr_; }

 private:
  bool factor_qr() {
    const int n = int(st_.G.cols()), m = int(st_.G.rows());
    Gt_.resize(m, n);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd col = st_.G.col(j);
      Gt_.col(j) = col.isZero(0.0) ? col : apply_scaling(st_.dims, W_, ScaleOp::WinvT, col);
    }
    qr_.compute(Gt_);
    const auto& R = qr_.matrixQR();
    const double rmax = n ? R.diagonal().cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < n; ++i)
      if (!(std::abs(R(i, i)) > 1e-15 * rmax)) return false;
    use_qr_ = true;
    return true;
  }

  double refined_solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& ux,
                       Eigen::VectorXd& uz) const {
    raw_solve(bx, bz, ux, uz);
    double err = 0.0;
    for (int ref = 0; ref < 3; ++ref) {
      const Eigen::VectorXd r1 = bx - st_.G.transpose() * uz;
      const Eigen::VectorXd WWuz = apply_scaling(st_.dims, W_, ScaleOp::WT, apply_scaling(st_.dims, W_, ScaleOp::W, uz));
      const Eigen::VectorXd r2 = bz - (st_.G * ux - WWuz);
      err = std::max(r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>());
      if (ref == 2) break;
      Eigen::VectorXd cx, cz;
      raw_solve(r1, r2, cx, cz);
      ux += cx;
      uz += cz;
    }
    return err;
  }

  Eigen::VectorXd w2inv(const Eigen::VectorXd& v) const {
    return apply_scaling(st_.dims, W_, ScaleOp::Winv, apply_scaling(st_.dims, W_, ScaleOp::WinvT, v));
  }

  void raw_solve(const Eigen::VectorXd& bx, const Eigen::VectorXd& bz, Eigen::VectorXd& ux,
                 Eigen::VectorXd& uz) const {
    if (!use_qr_) {
      ux = llt_.solve(bx + st_.G.transpose() * w2inv(bz));
      uz = w2inv(st_.G * ux - bz);
      return;
    }
    const int n = int(Gt_.cols());
    const auto R = qr_.matrixQR().topLeftCorner(n, n).triangularView<Eigen::Upper>();
    const Eigen::VectorXd bt = apply_scaling(st_.dims, W_, ScaleOp::WinvT, bz);
    Eigen::VectorXd y = R.transpose().solve(bx);
    y += (qr_.householderQ().transpose() * bt).head(n);
    ux = R.solve(y);
    uz = apply_scaling(st_.dims, W_, ScaleOp::Winv, Gt_ * ux - bt);
  }

  const IpmStructure& st_;
  const Scaling& W_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::MatrixXd Gt_;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
  const double accept_;
  bool use_qr_ = false;
};

}  // namespace

IpmResult ipm_solve(const IpmStructure& st, const Eigen::VectorXd& h_raw, const Eigen::VectorXd& c_raw,
                    const SolverSettings& settings) {
  const auto& dims = st.dims;
  const int m = dims.size(), n = int(st.G.cols());
  const Eigen::VectorXd h = h_raw.cwiseProduct(st.row_scale);
  const Eigen::VectorXd c = c_raw.cwiseProduct(st.col_scale);
  const auto& G = st.G;
  const Eigen::VectorXd e = identity_element(dims);
  const double resx0 = std::max(1.0, c.norm()), resz0 = std::max(1.0, h.norm());
  const double ftol = settings.tol;
  if (settings.verbose) {
    std::printf("ipm   n %d m %d (l %d, soc %zu, psd %zu)", n, m, dims.l, dims.q.size(), dims.s.size());
    for (int k : dims.q) std::printf(" %d", k);
    std::printf("\n");
  }

  IpmResult out;
  auto finish = [&](IpmStatus status, const Eigen::VectorXd& x, const Eigen::VectorXd& s, const Eigen::VectorXd& z,
                    double scale) {
    out.status = status;
    out.x = (x / scale).cwiseProduct(st.col_scale);
    out.s = (s / scale).cwiseQuotient(st.row_scale);
    out.z = (z / scale).cwiseProduct(st.row_scale);
    return out;
  };

  Eigen::VectorXd x, s, z;
  {
    Scaling I;
    I.d = Eigen::VectorXd::Ones(dims.l);
    for (int k : dims.q) {
      SocScaling sc;
      sc.eta = 1.0;
      sc.wbar = Eigen::VectorXd::Zero(k);
      sc.wbar(0) = 1.0;
      I.soc.push_back(sc);
    }
    for (int k : dims.s) I.psd.push_back({Eigen::MatrixXd::Identity(k, k), Eigen::MatrixXd::Identity(k, k)});
    Kkt kkt(st, I, 1e-11);
    if (!kkt.factor()) return finish(IpmStatus::Numerical, Eigen::VectorXd::Zero(n), e, e, 1.0);
    Eigen::VectorXd u;
    kkt.solve(Eigen::VectorXd::Zero(n), h, x, u);
    s = -u;
    Eigen::VectorXd xd;
    kkt.solve(-c, Eigen::VectorXd::Zero(m), xd, z);
    const double ts = min_shift(dims, s), tz = min_shift(dims, z);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0, kappa = 1.0;
  Scaling W;
  double best_score = kInf;
  Eigen::VectorXd bx_, bs_, bz_;
  double btau = 1.0;
  bool accurate = false;
  int since_best = 0;

  for (int it = 0; it <= settings.max_iterations; ++it) {
    out.iterations = it;
    const Eigen::VectorXd rx = G.transpose() * z + c * tau;
    const Eigen::VectorXd rz = G * x + s - h * tau;
    const double cx = c.dot(x), hz = h.dot(z), rt = kappa + cx + hz;
    const double gap = s.dot(z);
    const double pcost = cx / tau, dcost = -hz / tau, gap_true = gap / (tau * tau);
    const double pres = rz.norm() / tau / resz0, dres = rx.norm() / tau / resx0;
    const double pinf = hz < 0 ? (G.transpose() * z).norm() / resx0 / (-hz) : kInf;
    const double dinf = cx < 0 ? (G * x + s).norm() / resz0 / (-cx) : kInf;
    const double gscale = std::max(1.0, std::min(std::abs(pcost), std::abs(dcost)));
    out.pres = pres;
    out.dres = dres;
    out.gap = gap_true;
    if (settings.verbose)
      std::fprintf(stderr, "ipm %3d pcost % .10e dcost % .10e gap %.2e pres %.2e dres %.2e k/t %.2e\n", it, pcost,
                   dcost, gap_true, pres, dres, kappa / tau);
    const double score = std::max({pres, dres, gap_true / gscale / settings.gap_tol * ftol});
    if (score < 0.9 * best_score) since_best = 0;
    else if (++since_best >= 6) accurate = true;
    if (score < best_score) {
      best_score = score;
      bx_ = x;
      bs_ = s;
      bz_ = z;
      btau = tau;
    }
    if (pres <= ftol && dres <= ftol && (gap_true <= 1e-13 || gap_true <= settings.gap_tol * gscale))
      return finish(IpmStatus::Optimal, x, s, z, tau);
    if (pinf <= ftol) {
      out.pres = pinf;
      return finish(IpmStatus::PrimalInfeasible, x, s, z, -hz);
    }
    if (dinf <= ftol) {
      out.dres = dinf;
      return finish(IpmStatus::DualInfeasible, x, s, z, -cx);
    }
    if (it == settings.max_iterations) break;

    if (!compute_scaling(dims, s, z, W)) break;
    // Normal equations until progress stalls, then the accurate solve for the rest of the run.
    Kkt kkt(st, W, accurate ? 1e-11 : kInf);
    if (!kkt.factor()) break;
    const Eigen::VectorXd& lam = W.lambda;
    const double mu = (gap + tau * kappa) / (dims.degree() + 1);

    Eigen::VectorXd x1, z1;
    kkt.solve(-c, h, x1, z1);
    const double denom = kappa - tau * (c.dot(x1) + h.dot(z1));

    struct Dir {
      Eigen::VectorXd dx, dz, ds_scaled, dz_scaled, ds;
      double dtau, dkappa;
    };
    auto direction = [&](double eta, const Eigen::VectorXd& ds_rhs, double dk_rhs) {
      Dir d;
      const Eigen::VectorXd lds = jordan_divide(dims, lam, ds_rhs);
      const Eigen::VectorXd bx = -eta * rx;
      const Eigen::VectorXd bz = -eta * rz - apply_scaling(dims, W, ScaleOp::WT, lds);
      Eigen::VectorXd x2, z2;
      kkt.solve(bx, bz, x2, z2);
      d.dtau = (dk_rhs + tau * eta * rt + tau * (c.dot(x2) + h.dot(z2))) / denom;
      d.dx = x2 + d.dtau * x1;
      d.dz = z2 + d.dtau * z1;
      d.dz_scaled = apply_scaling(dims, W, ScaleOp::W, d.dz);
      // ds from the primal equation keeps rz exact in the step.
      d.ds = -eta * rz - G * d.dx + h * d.dtau;
      d.ds_scaled = apply_scaling(dims, W, ScaleOp::WinvT, d.ds);
      d.dkappa = (dk_rhs - kappa * d.dtau) / tau;
      return d;
    };
    auto step_len = [&](const Dir& d) {
      double a = std::min(max_step(dims, lam, d.ds_scaled), max_step(dims, lam, d.dz_scaled));
      if (d.dtau < 0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    const Eigen::VectorXd ll = jordan_product(dims, lam, lam);
    const Dir aff = direction(1.0, -ll, -tau * kappa);
    const double a_aff = std::min(1.0, step_len(aff));
    const double sigma = std::pow(std::max(0.0, 1.0 - a_aff), 3);
    const Eigen::VectorXd corr = jordan_product(dims, aff.ds_scaled, aff.dz_scaled);
    const Dir d = direction(1.0 - sigma, -ll + sigma * mu * e - corr, -tau * kappa + sigma * mu - aff.dtau * aff.dkappa);
    const double amax = step_len(d);
    const double alpha = std::min(1.0, 0.99 * amax);
    const double ex = (G.transpose() * d.dz + c * d.dtau + (1 - sigma) * rx).norm();
    const double ez = (G * d.dx + d.ds - h * d.dtau + (1 - sigma) * rz).norm();
    if (settings.verbose)
      std::fprintf(stderr, "    alpha %.3e sigma %.3e qr %d lin_x %.2e lin_z %.2e\n", alpha, sigma, int(kkt.used_qr()),
                   ex / std::max(1e-300, rx.norm()), ez / std::max(1e-300, rz.norm()));
    // A direction that does not reduce the residuals is redone with the accurate solve.
    const bool poor = ex > 0.5 * (1 - sigma) * rx.norm() + 0.1 * ftol * resx0 * tau ||
                      ez > 0.5 * (1 - sigma) * rz.norm() + 0.1 * ftol * resz0 * tau;
    if (!accurate && (poor || !std::isfinite(alpha) || alpha < 1e-12 || !d.dx.allFinite())) {
      accurate = true;
      --it;
      continue;
    }
    if (!std::isfinite(alpha) || alpha < 1e-12 || !d.dx.allFinite()) break;
    if (alpha < 0.1) accurate = true;
    x += alpha * d.dx;
    s += alpha * d.ds;
    z += alpha * d.dz;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
  }
  if (bx_.size() == 0) return finish(IpmStatus::Numerical, x, s, z, tau);
  // Report the best iterate seen; the caller decides whether it is usable.
  x = bx_;
  s = bs_;
  z = bz_;
  tau = btau;
  {
    const Eigen::VectorXd rx = G.transpose() * z + c * tau;
    const Eigen::VectorXd rz = G * x + s - h * tau;
    out.pres = rz.norm() / tau / resz0;
    out.dres = rx.norm() / tau / resx0;
    out.gap = s.dot(z) / (tau * tau);
  }
  return finish(out.iterations >= settings.max_iterations ? IpmStatus::MaxIterations : IpmStatus::Numerical, x, s,
                z, tau);
}

}  // namespace ddspc::detail
