#include "ddspc/ocp.hpp"

#include <cmath>

#include "ddspc/linalg.hpp"

namespace ddspc {

const char* to_string(NormConvention c) { return c == NormConvention::Half ? "half" : "plain"; }

NormConvention parse_norm_convention(const std::string& s) {
  if (s == "plain") return NormConvention::Plain;
  if (s == "half") return NormConvention::Half;
  throw DimensionError("norm convention must be 'half' or 'plain', got '" + s + "'");
}

void OcpSpec::validate() const {
  const int nu = n_u(), ny = n_y(), nz = n_z();
  require_dims(hankels.N == N && basis.N == N, "OcpSpec: horizon mismatch between spec, Hankels and basis");
  require_dims(Q.rows() == ny && Q.cols() == ny && R.rows() == nu && R.cols() == nu, "OcpSpec: weight shapes");
  require_dims(int(w_pce.size()) == N, "OcpSpec: need one disturbance PCE per horizon step");
  for (const auto& w : w_pce)
    require_dims(w.dim() == hankels.n_w() && w.terms() == L(), "OcpSpec: disturbance PCE shape");
  require_dims(u_box.lo.size() == nu && u_box.hi.size() == nu && y_box.lo.size() == ny && y_box.hi.size() == ny,
               "OcpSpec: box sizes");
  if (terminal_constraints || ti.P.size())
    require_dims(ti.P.rows() == nz && ti.Gamma.rows() == nz, "OcpSpec: terminal ingredient shapes");
  if (!sigma_override) {
    require_dims(std::abs(sigma_u - chance_sigma(eps_u)) <= 1e-12 * std::max(1.0, sigma_u) &&
                     std::abs(sigma_y - chance_sigma(eps_y)) <= 1e-12 * std::max(1.0, sigma_y),
                 "OcpSpec: sigma inconsistent with eps");
  }
}

std::vector<PceVector> horizon_disturbances(const Eigen::MatrixXd& Sigma_W, const BasisSpec& basis) {
  std::vector<PceVector> w;
  for (int i = 0; i < basis.N; ++i) w.push_back(disturbance_pce(Sigma_W, basis, i));
  return w;
}

InitialCondition measured_init(const Eigen::VectorXd& z) { return MeasuredInit{z}; }

InitialCondition backup_init(const Eigen::MatrixXd& pred, const Eigen::VectorXd& norms_sq) {
  require_dims(pred.cols() >= 1 && pred.cols() <= norms_sq.size(), "backup_init: coefficient count");
  BackupInit b;
  b.mean = pred.col(0);
  const Eigen::Index n = pred.rows();
  b.Q_rhs = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 1; j < pred.cols(); ++j) b.Q_rhs += norms_sq(j) * pred.col(j) * pred.col(j).transpose();
  if (symmetry_error(b.Q_rhs) > 1e-10 * std::max(1.0, b.Q_rhs.cwiseAbs().maxCoeff()))
    throw DimensionError("backup_init: Q_rhs not symmetric");
  b.A_z = psd_sqrt(b.Q_rhs);
  return b;
}

Eigen::MatrixXd OcpSolution::z_at(int i) const {
  const int nu = int(u[0].rows()), ny = int(y[0].rows()), L = int(u[0].cols());
  Eigen::MatrixXd z(T_ini * (nu + ny), L);
  for (int t = 0; t < T_ini; ++t) {
    const int s = i - T_ini + t + T_ini;  // vector index of step i - T_ini + t
    z.middleRows(t * nu, nu) = u[s];
    z.middleRows(T_ini * nu + t * ny, ny) = y[s];
  }
  return z;
}

double trajectory_cost(const std::vector<Eigen::MatrixXd>& u, const std::vector<Eigen::MatrixXd>& y,
                       const Eigen::MatrixXd& z_N, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                       const Eigen::MatrixXd& P, const Eigen::VectorXd& norms_sq, NormConvention conv) {
  require_dims(u.size() == y.size(), "trajectory_cost: step count mismatch");
  double c = 0.0;
  for (Eigen::Index j = 0; j < z_N.cols(); ++j) {
    double cj = z_N.col(j).dot(P * z_N.col(j));
    for (std::size_t i = 0; i < u.size(); ++i)
      cj += y[i].col(j).dot(Q * y[i].col(j)) + u[i].col(j).dot(R * u[i].col(j));
    c += norms_sq(j) * cj;
  }
  return cost_factor(conv) * c;
}

double stage_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& y, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, NormConvention conv) {
  return cost_factor(conv) * (y.dot(Q * y) + u.dot(R * u));
}

namespace {

// Rows of the Hankel blocks for time index tau in [0, N + T_ini).
Eigen::MatrixXd block_rows(const Eigen::MatrixXd& H, int n, int tau) { return H.middleRows(tau * n, n); }

Eigen::MatrixXd terminal_map(const OcpSpec& s, const HankelSet& H) {
  const int nu = s.n_u(), ny = s.n_y(), Ti = s.T_ini();
  Eigen::MatrixXd Hz(s.n_z(), H.g_dim);
  for (int t = 0; t < Ti; ++t) {
    Hz.middleRows(t * nu, nu) = block_rows(H.Hu, nu, s.N + t);
    Hz.middleRows(Ti * nu + t * ny, ny) = block_rows(H.Hy, ny, s.N + t);
  }
  return Hz;
}

// [Hu; Hy; Hw] g = Qr theta with Qr orthonormal. The raw Hankels of an
// unstable plant span many orders of magnitude, the rotated ones do not.
struct Reduced {
  HankelSet h;
  Eigen::MatrixXd g_map;
};

Reduced reduce(const HankelSet& H) {
  const Eigen::Index mu = H.Hu.rows(), my = H.Hy.rows(), mw = H.Hw.rows();
  Eigen::MatrixXd S(mu + my + mw, H.g_dim);
  S << H.Hu, H.Hy, H.Hw;
  Eigen::MatrixXd Sn = S;
  for (Eigen::Index i = 0; i < Sn.rows(); ++i) {
    const double nr = Sn.row(i).norm();
    if (nr > 0) Sn.row(i) /= nr;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Sn, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > 1e-10 * sv(0)) ++r;
  if (r == 0) throw AssumptionError("OCP Hankels are zero");
  const Eigen::MatrixXd V = svd.matrixV().leftCols(r);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(S * V);
  const Eigen::MatrixXd Qr = qr.householderQ() * Eigen::MatrixXd::Identity(S.rows(), r);
  const Eigen::MatrixXd Rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  Reduced out;
  out.g_map = V * Rr.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(r, r));
  out.h = H;
  out.h.g_dim = int(r);
  out.h.Hu = Qr.topRows(mu);
  out.h.Hy = Qr.middleRows(mu, my);
  out.h.Hw = Qr.bottomRows(mw);
  return out;
}

AffineRow row_of(const Eigen::RowVectorXd& a, int offset, double scale = 1.0, double constant = 0.0) {
  AffineRow r;
  for (Eigen::Index k = 0; k < a.size(); ++k) r.add(offset + int(k), scale * a(k));
  r.constant = constant;
  return r;
}

}  // namespace

OcpProgram assemble(const OcpSpec& spec, const InitialCondition& init) {
  spec.validate();
  Reduced red = reduce(spec.hankels);
  const auto& H = red.h;
  const int nu = spec.n_u(), ny = spec.n_y(), nz = spec.n_z(), Ti = spec.T_ini(), N = spec.N, L = spec.L();
  const auto& basis = spec.basis;
  const Eigen::VectorXd& nsq = basis.norms_sq;

  // Initial block per column j.
  Eigen::MatrixXd zbar = Eigen::MatrixXd::Zero(nz, L);
  if (const auto* m = std::get_if<MeasuredInit>(&init)) {
    require_dims(m->z.size() == nz, "assemble: measured z has wrong length");
    zbar.col(0) = m->z;
  } else {
    const auto& b = std::get<BackupInit>(init);
    require_dims(basis.L_ini - 1 >= nz, "assemble: backup init needs L_ini - 1 >= n_z");
    require_dims(b.mean.size() == nz && b.A_z.rows() == nz && b.A_z.cols() == nz, "assemble: backup init shape");
    zbar.col(0) = b.mean;
    // Unit-norm initial germs carry the columns of A_z.
    for (int c = 0; c < nz; ++c) zbar.col(1 + c) = b.A_z.col(c) / std::sqrt(nsq(1 + c));
  }

  ProgramBuilder pb;
  OcpLayout lay{H.g_dim, L, std::move(red.g_map)};
  pb.add_variables(lay.n_g());

  // Hankel equalities (disturbance part), initial pins and causality zeros.
  std::vector<AffineRow> eq;
  for (int j = 0; j < L; ++j) {
    const int off = lay.g_offset(j);
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < H.n_w(); ++c)
        eq.push_back(row_of(H.Hw.row(i * H.n_w() + c), off, 1.0, -spec.w_pce[i].coeffs(c, j)));
    for (int t = 0; t < Ti; ++t) {
      for (int c = 0; c < nu; ++c) eq.push_back(row_of(H.Hu.row(t * nu + c), off, 1.0, -zbar(t * nu + c, j)));
      for (int c = 0; c < ny; ++c)
        eq.push_back(row_of(H.Hy.row(t * ny + c), off, 1.0, -zbar(Ti * nu + t * ny + c, j)));
    }
    for (int i = 0; i < N; ++i)
      if (j >= causality_start(basis, i))
        for (int c = 0; c < nu; ++c) eq.push_back(row_of(H.Hu.row((Ti + i) * nu + c), off));
  }
  pb.add_block(ConeKind::Zero, eq, "hankel_init_causality");

  // Chance constraints: v^0 +- sigma t in box, t >= |(v^j |phi^j|)_{j>=1}|.
  auto chance = [&](const Eigen::MatrixXd& Hv, int n, const Box& box, double sigma, const char* tag) {
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < n; ++c) {
        if (!box.bounded(c)) continue;
        const Eigen::RowVectorXd a = Hv.row((Ti + i) * n + c);
        const int t = pb.add_variables(1);
        std::vector<AffineRow> lin;
        if (std::isfinite(box.hi(c))) {
          AffineRow r = row_of(a, lay.g_offset(0), -1.0, box.hi(c));
          r.add(t, -sigma);
          lin.push_back(r);
        }
        if (std::isfinite(box.lo(c))) {
          AffineRow r = row_of(a, lay.g_offset(0), 1.0, -box.lo(c));
          r.add(t, -sigma);
          lin.push_back(r);
        }
        pb.add_block(ConeKind::NonNeg, lin, std::string(tag) + "_box");
        std::vector<AffineRow> soc{AffineRow().add(t, 1.0)};
        for (int j = 1; j < L; ++j) soc.push_back(row_of(a, lay.g_offset(j), std::sqrt(nsq(j))));
        pb.add_block(ConeKind::SecondOrder, soc, std::string(tag) + "_chance");
      }
  };
  chance(H.Hu, nu, spec.u_box, spec.sigma_u, "u");
  chance(H.Hy, ny, spec.y_box, spec.sigma_y, "y");

  const Eigen::MatrixXd Hz = terminal_map(spec, H);
  if (spec.terminal_constraints) {
    const Eigen::MatrixXd Ph = psd_sqrt(spec.ti.P) * Hz;
    std::vector<AffineRow> mean{AffineRow::constant_row(std::sqrt(std::max(0.0, spec.ti.eps_z)))};
    for (int r = 0; r < nz; ++r) mean.push_back(row_of(Ph.row(r), lay.g_offset(0)));
    pb.add_block(ConeKind::SecondOrder, mean, "terminal_mean");
    const Eigen::MatrixXd Gh = psd_sqrt(spec.ti.Gamma) * Hz;
    std::vector<AffineRow> cov{AffineRow::constant_row(std::sqrt(std::max(0.0, spec.ti.gamma)))};
    for (int j = 1; j < L; ++j)
      for (int r = 0; r < nz; ++r) cov.push_back(row_of(Gh.row(r), lay.g_offset(j), std::sqrt(nsq(j))));
    pb.add_block(ConeKind::SecondOrder, cov, "terminal_cov");
  }

  // Objective: per column the same quadratic form in g^j.
  // Gram form keeps the quadratic PSD even when P carries rounding-level negative eigenvalues.
  const Eigen::MatrixXd Qh = psd_sqrt(spec.Q), Rh = psd_sqrt(spec.R);
  const bool has_P = spec.ti.P.size() > 0;
  Eigen::MatrixXd F(N * (ny + nu) + (has_P ? nz : 0), H.g_dim);
  for (int i = 0; i < N; ++i) {
    F.middleRows(i * (ny + nu), ny) = Qh * block_rows(H.Hy, ny, Ti + i);
    F.middleRows(i * (ny + nu) + ny, nu) = Rh * block_rows(H.Hu, nu, Ti + i);
  }
  if (has_P) F.bottomRows(nz) = psd_sqrt(spec.ti.P) * Hz;
  const Eigen::MatrixXd Mq = F.transpose() * F;
  const double cf = cost_factor(spec.norm);
  for (int j = 0; j < L; ++j) {
    std::vector<int> idx(H.g_dim);
    for (int k = 0; k < H.g_dim; ++k) idx[k] = lay.g_offset(j) + k;
    pb.add_quadratic_block(idx, (2.0 * cf * nsq(j)) * Mq);
  }
  return {pb.build(), lay};
}

OcpSolution extract_solution(const OcpSpec& spec, const OcpProgram& op, const Solution& sol) {
  OcpSolution out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  out.T_ini = spec.T_ini();
  if (!sol.optimal()) return out;
  const auto& H = spec.hankels;
  const int nu = spec.n_u(), ny = spec.n_y(), L = spec.L(), steps = spec.N + spec.T_ini();
  out.g = op.layout.g_map * Eigen::Map<const Eigen::MatrixXd>(sol.primal.data(), op.layout.g_dim, L);
  const Eigen::MatrixXd U = H.Hu * out.g, Y = H.Hy * out.g;
  for (int t = 0; t < steps; ++t) {
    out.u.push_back(U.middleRows(t * nu, nu));
    out.y.push_back(Y.middleRows(t * ny, ny));
  }
  for (int i = 0; i < spec.N; ++i)
    for (int j = causality_start(spec.basis, i); j < L; ++j) out.u[spec.T_ini() + i].col(j).setZero();
  out.cost = sol.objective_value;
  return out;
}

OcpSolution solve_ocp(const OcpSpec& spec, const InitialCondition& init, const SolverSettings& settings,
                      SolverWorkspace* ws) {
  const OcpProgram op = assemble(spec, init);
  return extract_solution(spec, op, solve(op.program, settings, ws));
}

}  // namespace ddspc
