#include "ddspc/controller.hpp"

#include <cmath>
#include <sstream>

#include "ddspc/linalg.hpp"

namespace ddspc {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::Measured: return "measured";
    case Branch::Backup: return "backup";
    case Branch::MeasuredFallback: return "measured_fallback";
  }
  return "?";
}

Shifted shift_candidate(const OcpSolution& sol, const TerminalIngredients& ti, const OcpSpec& spec) {
  require_dims(sol.status == SolveStatus::Optimal, "shift_candidate: solution not optimal");
  const int N = spec.N, L = spec.L(), Lw = spec.basis.L_w, Lt = L + Lw - 1;
  const int nu = spec.n_u(), ny = spec.n_y(), nz = spec.n_z();
  const auto& basis = spec.basis;
  const Eigen::MatrixXd A_K = ti.A_K();
  const ExtendedMatrices em = structural_matrices(nu, ny, spec.T_ini());

  Shifted s;
  s.norms_sq.resize(Lt);
  s.norms_sq.head(L) = basis.norms_sq;
  s.norms_sq.tail(Lw - 1) = basis.norms_sq.segment(basis.block_begin(N - 1), Lw - 1);
  // New disturbance at the end of the horizon, same factor as any block.
  const Eigen::MatrixXd w_new = spec.w_pce[N - 1].coeffs.middleCols(basis.block_begin(N - 1), Lw - 1);

  auto pad = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m.rows(), Lt);
    p.leftCols(L) = m;
    return p;
  };
  for (int i = 0; i + 1 < N; ++i) {
    s.u.push_back(pad(sol.u_at(i + 1)));
    s.y.push_back(pad(sol.y_at(i + 1)));
  }
  const Eigen::MatrixXd zN = sol.z_at(N);
  s.z_N = Eigen::MatrixXd::Zero(nz, Lt);
  s.z_N.leftCols(L) = A_K * zN;
  s.z_N.rightCols(Lw - 1) = em.E_tilde * w_new;
  s.u.push_back(pad(ti.K * zN));
  Eigen::MatrixXd y_last = em.E_tilde.transpose() * s.z_N;
  s.y.push_back(y_last);
  s.J_tilde = trajectory_cost(s.u, s.y, s.z_N, spec.Q, spec.R, spec.ti.P, s.norms_sq, spec.norm);

  const int Lti = basis.L_ini + Lw - 1;
  s.pred_z = sol.z_at(1).leftCols(Lti);
  s.pred_norms = basis.norms_sq.head(Lti);
  return s;
}

Eigen::VectorXd realize_feedback(const OcpSolution& sol, const InitialCondition& init, const Eigen::VectorXd& z_cl,
                                 const BasisSpec& basis, double* residual) {
  const Eigen::MatrixXd& u0 = sol.u_at(0);
  if (residual) *residual = 0.0;
  if (std::holds_alternative<MeasuredInit>(init)) return u0.col(0);
  const auto& b = std::get<BackupInit>(init);
  const Eigen::VectorXd bz = z_cl - b.mean;
  const Eigen::VectorXd p = pseudo_inverse(b.A_z) * bz;
  if (residual) *residual = (b.A_z * p - bz).norm();
  Eigen::VectorXd u = u0.col(0);
  for (Eigen::Index c = 0; c < p.size(); ++c) u += u0.col(1 + c) * (std::sqrt(basis.norms_sq(1 + c)) * p(c));
  return u;
}

Decision select_and_solve(Controller& c, const ControllerState& state, const Eigen::VectorXd& z_cl,
                          ControllerState& next) {
  require_dims(z_cl.size() == c.spec.n_z(), "select_and_solve: z_cl has wrong length");
  Decision d;
  d.J_tilde = state.J_tilde;

  InitialCondition init_m = measured_init(z_cl);
  OcpSolution sol_m = solve_ocp(c.spec, init_m, c.solver, &c.workspace);
  d.status_measured = sol_m.status;
  d.iterations += sol_m.iterations;
  const bool ok_m = sol_m.status == SolveStatus::Optimal;
  if (ok_m) d.V_measured = sol_m.cost;

  const OcpSolution* applied = nullptr;
  const InitialCondition* applied_init = nullptr;
  InitialCondition init_b;
  OcpSolution sol_b;
  if (state.pred_z.size() == 0) {
    if (!ok_m)
      throw InfeasibleError("select_and_solve: OCP with the measured initial condition is " +
                            std::string(to_string(sol_m.status)) + " at k = " + std::to_string(state.k));
    applied = &sol_m;
    applied_init = &init_m;
    d.branch = Branch::Measured;
    d.V = sol_m.cost;
  } else if (ok_m && sol_m.cost <= state.J_tilde) {
    applied = &sol_m;
    applied_init = &init_m;
    d.branch = Branch::Measured;
    d.V = sol_m.cost;
  } else {
    init_b = backup_init(state.pred_z, state.pred_norms);
    sol_b = solve_ocp(c.spec, init_b, c.solver, &c.workspace);
    d.status_backup = sol_b.status;
    d.iterations += sol_b.iterations;
    if (sol_b.status == SolveStatus::Optimal) {
      d.V_backup = sol_b.cost;
      applied = &sol_b;
      applied_init = &init_b;
      d.branch = Branch::Backup;
      d.V = ok_m ? std::min(sol_m.cost, sol_b.cost) : sol_b.cost;
    } else if (ok_m) {
      applied = &sol_m;
      applied_init = &init_m;
      d.branch = Branch::MeasuredFallback;
      d.V = sol_m.cost;
    } else {
      std::ostringstream os;
      os << "select_and_solve: both initial conditions failed at k = " << state.k << " (measured "
         << to_string(sol_m.status) << ", backup " << to_string(sol_b.status) << ", J_tilde " << state.J_tilde << ")";
      throw InfeasibleError(os.str());
    }
  }

  d.u_cl = realize_feedback(*applied, *applied_init, z_cl, c.spec.basis, &d.germ_residual);
  const Shifted sh = shift_candidate(*applied, c.spec.ti, c.spec);
  next.k = state.k + 1;
  next.J_tilde = sh.J_tilde;
  next.pred_z = sh.pred_z;
  next.pred_norms = sh.pred_norms;
  return d;
}

ClosedLoopRecord step(Controller& c, ControllerState& state, Plant& plant) {
  ControllerState next;
  const Decision d = select_and_solve(c, state, plant.z, next);
  ClosedLoopRecord r;
  r.k = state.k;
  r.branch = d.branch;
  r.V = d.V;
  r.J_tilde = d.J_tilde;
  r.V_measured = d.V_measured;
  r.V_backup = d.V_backup;
  r.germ_residual = d.germ_residual;
  r.iterations = d.iterations;
  r.u = d.u_cl;
  r.w = plant.noise_scale * sample_disturbance(plant.model, plant.rng, plant.dist);
  const StepResult sr = step_realization(plant.model, plant.z, r.u, r.w);
  r.y = sr.y;
  plant.z = sr.z_next;
  r.stage_plain = stage_cost(r.u, r.y, c.spec.Q, c.spec.R, NormConvention::Plain);
  r.stage_half = stage_cost(r.u, r.y, c.spec.Q, c.spec.R, NormConvention::Half);
  state = std::move(next);
  return r;
}

}  // namespace ddspc
