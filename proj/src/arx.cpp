#include "ddspc/arx.hpp"

#include "ddspc/linalg.hpp"

namespace ddspc {

void ArxModel::validate() const {
  if (T_ini < 1) throw DimensionError("ArxModel: T_ini must be >= 1");
  if (D.rows() < 1) throw DimensionError("ArxModel: n_y must be >= 1");
  require_dims(Phi.rows() == D.rows() && Phi.cols() == n_z(), "ArxModel: Phi must be n_y x T_ini(n_u+n_y)");
  require_dims(Sigma_W.rows() == n_y() && Sigma_W.cols() == n_y(), "ArxModel: Sigma_W must be n_y x n_y");
  if (symmetry_error(Sigma_W) > 1e-12 * std::max(1.0, Sigma_W.cwiseAbs().maxCoeff()) || !is_psd(Sigma_W))
    throw AssumptionError("ArxModel: Sigma_W must be symmetric PSD");
  if (n_x < 1) throw DimensionError("ArxModel: n_x must be >= 1");
}

ExtendedMatrices structural_matrices(int n_u, int n_y, int T_ini) {
  const int nu_blk = T_ini * n_u, ny_blk = T_ini * n_y, n_z = nu_blk + ny_blk;
  ExtendedMatrices em;
  // Rows: the shifted u-block (nu_blk rows), then the older y-block rows that
  // are pure shifts ((T_ini - 1) n_y rows). The newest y comes from Phi.
  em.A_bar = Eigen::MatrixXd::Zero(n_z - n_y, n_z);
  em.B_bar = Eigen::MatrixXd::Zero(n_z - n_y, n_u);
  for (int r = 0; r < nu_blk - n_u; ++r) em.A_bar(r, r + n_u) = 1.0;
  em.B_bar.block(nu_blk - n_u, 0, n_u, n_u).setIdentity();
  for (int r = 0; r < ny_blk - n_y; ++r) em.A_bar(nu_blk + r, nu_blk + r + n_y) = 1.0;
  em.E_tilde = Eigen::MatrixXd::Zero(n_z, n_y);
  em.E_tilde.bottomRows(n_y).setIdentity();
  em.A_tilde = Eigen::MatrixXd::Zero(n_z, n_z);
  em.A_tilde.topRows(n_z - n_y) = em.A_bar;
  em.B_tilde = Eigen::MatrixXd::Zero(n_z, n_u);
  em.B_tilde.topRows(n_z - n_y) = em.B_bar;
  return em;
}

ExtendedMatrices extended_matrices(const ArxModel& model) {
  model.validate();
  ExtendedMatrices em = structural_matrices(model.n_u(), model.n_y(), model.T_ini);
  em.A_tilde.bottomRows(model.n_y()) = model.Phi;
  em.B_tilde.bottomRows(model.n_y()) = model.D;
  return em;
}

Eigen::VectorXd shift_extended_state(int n_u, int n_y, int T_ini, const Eigen::VectorXd& z,
                                     const Eigen::VectorXd& u, const Eigen::VectorXd& y) {
  const int nu_blk = T_ini * n_u, ny_blk = T_ini * n_y;
  require_dims(z.size() == nu_blk + ny_blk && u.size() == n_u && y.size() == n_y,
               "shift_extended_state: dimension mismatch");
  Eigen::VectorXd zn(z.size());
  zn.head(nu_blk - n_u) = z.segment(n_u, nu_blk - n_u);
  zn.segment(nu_blk - n_u, n_u) = u;
  zn.segment(nu_blk, ny_blk - n_y) = z.segment(nu_blk + n_y, ny_blk - n_y);
  zn.tail(n_y) = y;
  return zn;
}

Eigen::VectorXd stack_extended_state(const Eigen::MatrixXd& u_past, const Eigen::MatrixXd& y_past) {
  require_dims(u_past.cols() == y_past.cols(), "stack_extended_state: window lengths differ");
  Eigen::VectorXd z(u_past.size() + y_past.size());
  z.head(u_past.size()) = Eigen::Map<const Eigen::VectorXd>(u_past.data(), u_past.size());
  z.tail(y_past.size()) = Eigen::Map<const Eigen::VectorXd>(y_past.data(), y_past.size());
  return z;
}

StepResult step_realization(const ArxModel& model, const Eigen::VectorXd& z, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w) {
  require_dims(z.size() == model.n_z() && u.size() == model.n_u() && w.size() == model.n_w(),
               "step_realization: dimension mismatch");
  StepResult r;
  r.y = model.Phi * z + model.D * u + w;
  r.z_next = shift_extended_state(model.n_u(), model.n_y(), model.T_ini, z, u, r.y);
  return r;
}

void Trajectory::validate(int T_ini) const {
  require_dims(u.cols() == w.cols() && u.cols() == y.cols(), "Trajectory: u, w, y column counts differ");
  require_dims(u_prefix.cols() == T_ini && y_prefix.cols() == T_ini, "Trajectory: prefix length != T_ini");
  require_dims(u_prefix.rows() == u.rows() && y_prefix.rows() == y.rows(), "Trajectory: prefix row mismatch");
}

Trajectory simulate(const ArxModel& model, const Eigen::VectorXd& z_ini, const Eigen::MatrixXd& u_seq,
                    const Eigen::MatrixXd& w_seq) {
  model.validate();
  require_dims(z_ini.size() == model.n_z(), "simulate: z_ini length != n_z");
  require_dims(u_seq.cols() == w_seq.cols(), "simulate: u and w lengths differ");
  require_dims(u_seq.rows() == model.n_u() && w_seq.rows() == model.n_w(), "simulate: row mismatch");
  const int T = int(u_seq.cols()), l = model.T_ini;
  Trajectory tr;
  tr.u = u_seq;
  tr.w = w_seq;
  tr.y.resize(model.n_y(), T);
  tr.u_prefix = Eigen::Map<const Eigen::MatrixXd>(z_ini.data(), model.n_u(), l);
  tr.y_prefix = Eigen::Map<const Eigen::MatrixXd>(z_ini.data() + model.n_u() * l, model.n_y(), l);
  Eigen::VectorXd z = z_ini;
  for (int k = 0; k < T; ++k) {
    StepResult s = step_realization(model, z, u_seq.col(k), w_seq.col(k));
    tr.y.col(k) = s.y;
    z = std::move(s.z_next);
  }
  return tr;
}

Eigen::VectorXd sample_disturbance(const ArxModel& model, std::mt19937_64& rng, DisturbanceDistribution dist) {
  const int n = model.n_w();
  Eigen::VectorXd xi(n);
  if (dist == DisturbanceDistribution::Gaussian) {
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int i = 0; i < n; ++i) xi(i) = nd(rng);
  } else {
    std::uniform_real_distribution<double> ud(-std::sqrt(3.0), std::sqrt(3.0));
    for (int i = 0; i < n; ++i) xi(i) = ud(rng);
  }
  return psd_sqrt(model.Sigma_W) * xi;
}

PceStep pce_step(const ArxModel& model, const PceVector& z, const PceVector& u, const PceVector& w) {
  require_dims(z.dim() == model.n_z() && u.dim() == model.n_u() && w.dim() == model.n_w(),
               "pce_step: dimension mismatch");
  require_dims(z.terms() == u.terms() && z.terms() == w.terms(), "pce_step: basis sizes differ");
  PceStep r;
  r.y = PceVector(model.Phi * z.coeffs + model.D * u.coeffs + w.coeffs);
  Eigen::MatrixXd zn(z.dim(), z.terms());
  for (Eigen::Index j = 0; j < z.terms(); ++j)
    zn.col(j) = shift_extended_state(model.n_u(), model.n_y(), model.T_ini, z.coeffs.col(j), u.coeffs.col(j),
                                     r.y.coeffs.col(j));
  r.z_next = PceVector(zn);
  return r;
}

}  // namespace ddspc
