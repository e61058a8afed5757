#include "ddspc/validation.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ddspc/linalg.hpp"

namespace ddspc {

namespace {

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Affine expression over the program variables.
struct Lin {
  Eigen::MatrixXd A;  // rows x n_vars
  Eigen::VectorXd c;
};

AffineRow to_row(const Eigen::RowVectorXd& a, double c, double scale = 1.0) {
  AffineRow r;
  for (Eigen::Index k = 0; k < a.size(); ++k) r.add(int(k), scale * a(k));
  r.constant = scale * c;
  return r;
}

}  // namespace

ModelOcpResult solve_model_ocp(const ArxModel& model, const OcpSpec& spec, const InitialCondition& init,
                               const SolverSettings& settings) {
  const int N = spec.N, L = spec.L(), nu = model.n_u(), ny = model.n_y(), nz = model.n_z(), Ti = model.T_ini;
  const auto& basis = spec.basis;
  const Eigen::VectorXd& nsq = basis.norms_sq;

  // Variable index of u_i^j(c), -1 where causality forces zero.
  std::vector<int> var((std::size_t)N * L * nu, -1);
  int nv = 0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < std::min(L, causality_start(basis, i)); ++j)
      for (int c = 0; c < nu; ++c) var[(std::size_t(i) * L + j) * nu + c] = nv++;

  Eigen::MatrixXd z0 = Eigen::MatrixXd::Zero(nz, L);
  if (const auto* m = std::get_if<MeasuredInit>(&init)) {
    z0.col(0) = m->z;
  } else {
    const auto& b = std::get<BackupInit>(init);
    z0.col(0) = b.mean;
    for (int c = 0; c < nz; ++c) z0.col(1 + c) = b.A_z.col(c) / std::sqrt(nsq(1 + c));
  }

  // u[i][j], y[i][j] as affine maps; z propagated per column.
  std::vector<std::vector<Lin>> U(N, std::vector<Lin>(L)), Y(N, std::vector<Lin>(L));
  std::vector<Lin> zN(L);
  for (int j = 0; j < L; ++j) {
    Lin z{Eigen::MatrixXd::Zero(nz, nv), z0.col(j)};
    for (int i = 0; i < N; ++i) {
      Lin u{Eigen::MatrixXd::Zero(nu, nv), Eigen::VectorXd::Zero(nu)};
      for (int c = 0; c < nu; ++c) {
        const int v = var[(std::size_t(i) * L + j) * nu + c];
        if (v >= 0) u.A(c, v) = 1.0;
      }
      Lin y{model.Phi * z.A + model.D * u.A, model.Phi * z.c + model.D * u.c + spec.w_pce[i].coeffs.col(j)};
      Lin zn{Eigen::MatrixXd(nz, nv), Eigen::VectorXd(nz)};
      const int ub = nu * Ti, yb = ny * Ti;
      zn.A.topRows(ub - nu) = z.A.middleRows(nu, ub - nu);
      zn.c.head(ub - nu) = z.c.segment(nu, ub - nu);
      zn.A.middleRows(ub - nu, nu) = u.A;
      zn.c.segment(ub - nu, nu) = u.c;
      zn.A.middleRows(ub, yb - ny) = z.A.middleRows(ub + ny, yb - ny);
      zn.c.segment(ub, yb - ny) = z.c.segment(ub + ny, yb - ny);
      zn.A.bottomRows(ny) = y.A;
      zn.c.tail(ny) = y.c;
      U[i][j] = std::move(u);
      Y[i][j] = std::move(y);
      z = std::move(zn);
    }
    zN[j] = std::move(z);
  }

  ProgramBuilder pb;
  pb.add_variables(nv);
  auto chance = [&](const std::vector<std::vector<Lin>>& V, int n, const Box& box, double sigma) {
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < n; ++c) {
        if (!box.bounded(c)) continue;
        const int t = pb.add_variables(1);
        std::vector<AffineRow> lin;
        if (std::isfinite(box.hi(c))) lin.push_back(to_row(-V[i][0].A.row(c), box.hi(c) - V[i][0].c(c)).add(t, -sigma));
        if (std::isfinite(box.lo(c))) lin.push_back(to_row(V[i][0].A.row(c), V[i][0].c(c) - box.lo(c)).add(t, -sigma));
        pb.add_block(ConeKind::NonNeg, lin);
        std::vector<AffineRow> soc{AffineRow().add(t, 1.0)};
        for (int j = 1; j < L; ++j) soc.push_back(to_row(V[i][j].A.row(c), V[i][j].c(c), std::sqrt(nsq(j))));
        pb.add_block(ConeKind::SecondOrder, soc);
      }
  };
  chance(U, nu, spec.u_box, spec.sigma_u);
  chance(Y, ny, spec.y_box, spec.sigma_y);

  const Eigen::MatrixXd Ph = psd_sqrt(spec.ti.P);
  if (spec.terminal_constraints) {
    const Eigen::MatrixXd Gh = psd_sqrt(spec.ti.Gamma);
    std::vector<AffineRow> mean{AffineRow::constant_row(std::sqrt(std::max(0.0, spec.ti.eps_z)))};
    const Eigen::MatrixXd PA = Ph * zN[0].A;
    const Eigen::VectorXd Pc = Ph * zN[0].c;
    for (int r = 0; r < nz; ++r) mean.push_back(to_row(PA.row(r), Pc(r)));
    pb.add_block(ConeKind::SecondOrder, mean);
    std::vector<AffineRow> cov{AffineRow::constant_row(std::sqrt(std::max(0.0, spec.ti.gamma)))};
    for (int j = 1; j < L; ++j) {
      const Eigen::MatrixXd GA = Gh * zN[j].A;
      const Eigen::VectorXd Gc = Gh * zN[j].c;
      for (int r = 0; r < nz; ++r) cov.push_back(to_row(GA.row(r), Gc(r), std::sqrt(nsq(j))));
    }
    pb.add_block(ConeKind::SecondOrder, cov);
  }

  // cf sum_j n_j |F_j x + f_j|^2
  const Eigen::MatrixXd Qh = psd_sqrt(spec.Q), Rh = psd_sqrt(spec.R);
  const double cf = cost_factor(spec.norm);
  Eigen::MatrixXd Hq = Eigen::MatrixXd::Zero(nv, nv);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(nv);
  double k0 = 0.0;
  for (int j = 0; j < L; ++j) {
    const int rows = N * (ny + nu) + nz;
    Eigen::MatrixXd F(rows, nv);
    Eigen::VectorXd f(rows);
    for (int i = 0; i < N; ++i) {
      F.middleRows(i * (ny + nu), ny) = Qh * Y[i][j].A;
      f.segment(i * (ny + nu), ny) = Qh * Y[i][j].c;
      F.middleRows(i * (ny + nu) + ny, nu) = Rh * U[i][j].A;
      f.segment(i * (ny + nu) + ny, nu) = Rh * U[i][j].c;
    }
    F.bottomRows(nz) = Ph * zN[j].A;
    f.tail(nz) = Ph * zN[j].c;
    const double w = cf * nsq(j);
    Hq += 2.0 * w * F.transpose() * F;
    g += 2.0 * w * F.transpose() * f;
    k0 += w * f.squaredNorm();
  }
  std::vector<int> idx(nv);
  for (int k = 0; k < nv; ++k) idx[k] = k;
  pb.add_quadratic_block(idx, Hq);
  for (int k = 0; k < nv; ++k) pb.add_linear(k, g(k));
  pb.add_constant(k0);

  const Solution sol = solve(pb.build(), settings);
  ModelOcpResult out;
  out.status = sol.status;
  if (!sol.optimal()) return out;
  out.cost = sol.objective_value;
  const Eigen::VectorXd x = sol.primal.head(nv);
  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd u(nu, L), y(ny, L);
    for (int j = 0; j < L; ++j) {
      u.col(j) = U[i][j].A * x + U[i][j].c;
      y.col(j) = Y[i][j].A * x + Y[i][j].c;
    }
    out.u.push_back(u);
    out.y.push_back(y);
  }
  return out;
}

OfflineSetup offline_setup(const BenchmarkConfig& cfg) {
  OfflineSetup s;
  s.cfg = cfg;
  s.data = collect_offline(cfg);
  s.ti = synthesize_terminal(build_design_matrices(s.data.synth), cfg.model.n_u(), cfg.model.n_y(),
                             synthesis_options(cfg), &s.report);
  s.spec = make_spec(cfg, s.ti, s.data.ocp);
  return s;
}

Check check_oracle_equivalence(int instances, std::uint64_t seed, double tol) {
  Check ck{"oracle_equivalence", true, ""};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  int done = 0, redraws = 0, backups = 0;
  OfflineSetup setup;
  for (int k = 0; done < instances; ++k) {
    // Fresh offline data every 10 instances.
    if (done % 10 == 0 && (k == 0 || setup.cfg.seed != seed + std::uint64_t(done / 10))) {
      BenchmarkConfig cfg = scalar_config();
      cfg.seed = seed + std::uint64_t(done / 10);
      setup = offline_setup(cfg);
    }
    const int nz = setup.spec.n_z();
    InitialCondition init;
    const bool backup = k % 2 == 1;
    if (!backup) {
      Eigen::VectorXd z(nz);
      for (int i = 0; i < nz; ++i) z(i) = unif(rng);
      init = measured_init(z);
    } else {
      Eigen::MatrixXd pred(nz, 3);
      for (int i = 0; i < nz; ++i) {
        pred(i, 0) = unif(rng);
        pred(i, 1) = 0.05 * normal(rng);
        pred(i, 2) = 0.05 * normal(rng);
      }
      init = backup_init(pred, Eigen::VectorXd::Ones(3));
    }
    const OcpSolution h = solve_ocp(setup.spec, init, setup.cfg.solver);
    const ModelOcpResult m = solve_model_ocp(setup.cfg.model, setup.spec, init, setup.cfg.solver);
    const bool hf = h.status == SolveStatus::Optimal, mf = m.status == SolveStatus::Optimal;
    if (!hf && !mf) {
      ++redraws;
      if (redraws > 20 * instances) {
        ck.pass = false;
        ck.detail = "too few feasible instances";
        return ck;
      }
      continue;
    }
    ++done;
    backups += backup;
    if (hf != mf) {
      ck.pass = false;
      ck.detail = std::string("feasibility disagrees: hankel ") + to_string(h.status) + ", model " + to_string(m.status);
      return ck;
    }
    worst = std::max(worst, std::abs(h.cost - m.cost) / std::max(1.0, std::abs(m.cost)));
  }
  ck.pass = worst <= tol;
  std::ostringstream os;
  os << instances << " instances (" << backups << " backup), " << redraws << " redrawn, max rel diff " << worst;
  ck.detail = os.str();
  return ck;
}

Check check_synthesis_residuals(const BenchmarkConfig& cfg, const TerminalIngredients& ti, double tol) {
  Check ck{"synthesis_residuals_" + cfg.name, true, ""};
  const ExtendedMatrices em = extended_matrices(cfg.model);
  const Eigen::MatrixXd AK = ti.A_K();
  const Eigen::MatrixXd Qt = em.E_tilde * cfg.Q * em.E_tilde.transpose();
  const Eigen::MatrixXd Qp = ti.K.transpose() * cfg.R * ti.K + AK.transpose() * Qt * AK;
  const double rP = stein_residual(AK, ti.P, Qp);
  const double rG = stein_residual(AK, ti.Gamma, Eigen::MatrixXd::Identity(AK.rows(), AK.cols()));
  const double rho = spectral_radius(AK);
  ck.pass = rP <= tol && rG <= tol && rho < 1.0 && ti.gamma > 0.0;
  std::ostringstream os;
  os << "residual P " << rP << ", Gamma " << rG << ", rho(MH) " << rho << ", gamma " << ti.gamma;
  ck.detail = os.str();
  return ck;
}

Check check_pce_moments(int samples, std::uint64_t seed) {
  Check ck{"pce_moments", true, ""};
  const BenchmarkConfig cfg = aircraft_config();
  const ArxModel& m = cfg.model;
  const int nz = m.n_z(), steps = 3;
  // Hermite initial germs, Legendre disturbance germs.
  const BasisSpec basis = build_joint_basis(3, m.n_w() + 1, steps, GermFamily::Hermite, GermFamily::Legendre);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  PceVector z = PceVector::zero(nz, basis.L);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < basis.L_ini; ++j) z.coeffs(i, j) = 0.3 * normal(rng);
  PceVector y;
  for (int k = 0; k < steps; ++k) {
    PceVector u = PceVector::zero(m.n_u(), basis.L);
    for (int j = 0; j < basis.L; ++j) u.coeffs(0, j) = 0.2 * normal(rng);
    // Unit variance for the Legendre germs, as for the plant disturbance.
    const PceVector w = disturbance_pce(m.Sigma_W, basis, k);
    const PceStep st = pce_step(m, z, u, w);
    y = st.y;
    z = st.z_next;
  }
  const Moments mo = moments(y, basis);
  const int n = y.dim();
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd draws(n, samples);
  for (int s = 0; s < samples; ++s) draws.col(s) = sample_realization(y, draw_germs(basis, rng));
  const Eigen::VectorXd mean = draws.rowwise().mean();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::ArrayXd d = draws.row(i).array() - mean(i);
    const double var = d.square().sum() / (samples - 1);
    const double m4 = d.pow(4).mean();
    const double z_mean = std::abs(mean(i) - mo.mean(i)) / std::sqrt(var / samples);
    const double z_var = std::abs(var - mo.cov(i, i)) / std::sqrt(std::max(1e-300, m4 - var * var) / samples);
    worst = std::max({worst, z_mean, z_var});
  }
  ck.pass = worst <= 3.0;
  ck.detail = std::to_string(samples) + " samples, worst |z| " + fmt("%.3f", worst);
  return ck;
}

Check check_chance_conservatism(const OfflineSetup& scalar, int samples, std::uint64_t seed, double sigma_y) {
  Check ck{"chance_conservatism", true, ""};
  OcpSpec spec = scalar.spec;
  // Cost pulls y to 0 while the box keeps it above 0.5: the lower bound is active.
  spec.terminal_constraints = false;
  spec.y_box = Box{Eigen::VectorXd::Constant(1, 0.5), Eigen::VectorXd::Constant(1, 2.0)};
  if (sigma_y > 0) {
    spec.sigma_override = true;
    spec.sigma_y = sigma_y;
  }
  const Eigen::Vector2d z(0.5, 1.0);  // y_0 mean 1
  const OcpSolution sol = solve_ocp(spec, measured_init(z), scalar.cfg.solver);
  if (sol.status != SolveStatus::Optimal) {
    ck.pass = false;
    ck.detail = std::string("OCP ") + to_string(sol.status);
    return ck;
  }
  std::mt19937_64 rng(seed);
  std::vector<int> viol(spec.N, 0);
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd phi = draw_germs(spec.basis, rng);
    for (int i = 0; i < spec.N; ++i) {
      const double y = sol.y_at(i).row(0).dot(phi);
      viol[i] += y < spec.y_box.lo(0) || y > spec.y_box.hi(0);
    }
  }
  const double eps = spec.eps_y, se = std::sqrt(eps * (1 - eps) / samples);
  double worst = 0.0;
  for (int v : viol) worst = std::max(worst, double(v) / samples);
  ck.pass = worst <= eps + 3 * se;
  std::ostringstream os;
  os << "sigma_y " << spec.sigma_y << ", worst per-step violation " << worst << " vs eps " << eps;
  ck.detail = os.str();
  return ck;
}

FeasibilityStress run_feasibility_stress(const OfflineSetup& setup, int runs, int steps, double noise_scale) {
  BenchmarkConfig cfg = setup.cfg;
  cfg.steps = steps;
  cfg.noise_scale = noise_scale;
  const auto logs = monte_carlo(cfg, setup.spec, runs);
  FeasibilityStress fs;
  fs.runs = runs;
  fs.steps = steps;
  for (const auto& l : logs) {
    if (l.aborted) {
      ++fs.aborted;
      if (fs.errors.size() < 5) fs.errors.push_back(l.error);
    }
    for (const auto& r : l.records) fs.backup_failures += r.branch == Branch::MeasuredFallback;
  }
  return fs;
}

Check check_recursive_feasibility(const OfflineSetup& setup, int runs, int steps, double noise_scale) {
  const FeasibilityStress fs = run_feasibility_stress(setup, runs, steps, noise_scale);
  Check ck{"recursive_feasibility", fs.aborted == 0 && fs.backup_failures == 0, ""};
  std::ostringstream os;
  os << runs << " runs x " << steps << " steps, noise x" << noise_scale << ": " << fs.aborted
     << " infeasible steps, " << fs.backup_failures << " backup failures";
  if (!fs.errors.empty()) os << "; first: " << fs.errors.front();
  ck.detail = os.str();
  return ck;
}

std::vector<Check> validation_suite(bool quick) {
  std::vector<Check> out;
  const OfflineSetup scalar = offline_setup(scalar_config());
  const OfflineSetup aircraft = offline_setup(aircraft_config());
  out.push_back(check_oracle_equivalence(quick ? 20 : 100, 11));
  out.push_back(check_synthesis_residuals(scalar.cfg, scalar.ti));
  out.push_back(check_synthesis_residuals(aircraft.cfg, aircraft.ti));
  {
    TerminalIngredients bad = aircraft.ti;
    bad.P *= 1.1;
    Check c = check_synthesis_residuals(aircraft.cfg, bad);
    out.push_back({"fault_perturbed_P_detected", !c.pass, c.detail});
  }
  out.push_back(check_pce_moments(100000, 3));
  out.push_back(check_chance_conservatism(scalar, 100000, 5));
  {
    Check c = check_chance_conservatism(scalar, 100000, 5, 0.5);
    out.push_back({"fault_wrong_sigma_detected", !c.pass, c.detail});
  }
  out.push_back(check_recursive_feasibility(scalar, quick ? 20 : 1000, 100, 3.0));
  return out;
}

}  // namespace ddspc
