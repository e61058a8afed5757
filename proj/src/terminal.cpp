#include "ddspc/terminal.hpp"

#include <chrono>
#include <fstream>
#include <limits>

#include "ddspc/linalg.hpp"
#include "json.hpp"

namespace ddspc {

Box Box::unbounded(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

double chance_sigma(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DimensionError("chance_sigma: eps must lie in (0, 1]");
  return std::sqrt((2.0 - eps) / eps);
}

Eigen::MatrixXd surrogate_M(const DesignMatrices& dm, const ExtendedMatrices& em) {
  if (!rank_assumption_check(dm)) throw AssumptionError("surrogate_M: [Z_dd; U_dd] does not have full row rank");
  const Eigen::Index n_z = dm.Z_dd.rows(), T = dm.Z_dd.cols();
  require_dims(em.A_bar.cols() == n_z && em.A_bar.rows() + dm.Y_dd.rows() == n_z, "surrogate_M: shape mismatch");
  Eigen::MatrixXd M(n_z, T);
  M << em.A_bar * dm.Z_dd + em.B_bar * dm.U_dd, dm.Y_dd - dm.W_dd;
  return M;
}

LqrSdpResult solve_lqr_sdp(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Z_dd, const Eigen::MatrixXd& U_dd,
                           const Eigen::MatrixXd& Q_tilde, const Eigen::MatrixXd& R, const Eigen::MatrixXd& E_tilde,
                           const SolverSettings& settings) {
  const int n_z = int(Z_dd.rows()), T = int(Z_dd.cols()), n_u = int(U_dd.rows());
  require_dims(M.rows() == n_z && M.cols() == T && U_dd.cols() == T, "solve_lqr_sdp: data shape mismatch");
  require_dims(Q_tilde.rows() == n_z && R.rows() == n_u && E_tilde.rows() == n_z, "solve_lqr_sdp: weight shape");
  if (!is_psd(Q_tilde) || !is_positive_definite(R)) throw AssumptionError("solve_lqr_sdp: need Q_tilde >= 0, R > 0");

  // Only [Z; U] X2 enters the program, and M = Theta [Z; U] on the data, so X2 is
  // searched in the row space of [Z; U]: X2 = [Z; U]^+ G with G = [S; Y] and
  // S = Z X2 symmetric. The nullspace part of X2 changes neither cost nor LMIs.
  Eigen::MatrixXd ZU(n_z + n_u, T);
  ZU << Z_dd, U_dd;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(ZU);
  const Eigen::MatrixXd ZUp = cod.pseudoInverse();
  const Eigen::MatrixXd Theta = M * ZUp;

  ProgramBuilder b;
  const int x1 = b.add_variables(n_u * (n_u + 1) / 2);
  const int xs = b.add_variables(n_z * (n_z + 1) / 2);
  const int xy = b.add_variables(n_u * n_z);
  auto tri = [](int base, int n, int r, int c) {
    if (r < c) std::swap(r, c);
    return base + c * n - c * (c - 1) / 2 + (r - c);
  };
  auto X1 = [&](int r, int c) { return tri(x1, n_u, r, c); };
  auto S = [&](int r, int c) { return tri(xs, n_z, r, c); };
  auto Y = [&](int r, int c) { return xy + r + c * n_u; };
  // (Theta G)_{a, c}
  auto mg = [&](int a, int c) {
    AffineRow row;
    for (int i = 0; i < n_z; ++i) row.add(S(i, c), Theta(a, i));
    for (int i = 0; i < n_u; ++i) row.add(Y(i, c), Theta(a, n_z + i));
    return row;
  };
  const Eigen::MatrixXd Rh = psd_sqrt(R);
  const Eigen::MatrixXd EE = E_tilde * E_tilde.transpose();

  for (int c = 0; c < n_z; ++c)
    for (int r = 0; r < n_z; ++r)
      if (Q_tilde(c, r) != 0.0) b.add_linear(S(r, c), Q_tilde(c, r));
  for (int i = 0; i < n_u; ++i) b.add_linear(X1(i, i), 1.0);

  std::vector<AffineRow> lmi1;
  for (int c = 0; c < 2 * n_z; ++c)
    for (int r = c; r < 2 * n_z; ++r) {
      if (r < n_z) {
        lmi1.push_back(AffineRow().add(S(r, c), 1.0));
        lmi1.back().constant = -EE(r, c);
      } else if (c < n_z) {
        lmi1.push_back(mg(c, r - n_z));
      } else {
        lmi1.push_back(AffineRow().add(S(r - n_z, c - n_z), 1.0));
      }
    }
  b.add_psd(2 * n_z, lmi1, "lyapunov_lmi");

  std::vector<AffineRow> lmi2;
  for (int c = 0; c < n_u + n_z; ++c)
    for (int r = c; r < n_u + n_z; ++r) {
      if (r < n_u) {
        lmi2.push_back(AffineRow().add(X1(r, c), 1.0));
      } else if (c < n_u) {
        AffineRow row;
        for (int i = 0; i < n_u; ++i) row.add(Y(i, r - n_u), Rh(c, i));
        lmi2.push_back(row);
      } else {
        lmi2.push_back(AffineRow().add(S(r - n_u, c - n_u), 1.0));
      }
    }
  b.add_psd(n_u + n_z, lmi2, "input_lmi");

  LqrSdpResult res;
  res.sdp = solve(b.build(), settings);
  if (!res.sdp.optimal())
    throw AssumptionError(std::string("solve_lqr_sdp: SDP not solved (") + to_string(res.sdp.status) +
                          "); data inadequate or (A, B) not stabilizable");
  Eigen::MatrixXd G(n_z + n_u, n_z);
  for (int c = 0; c < n_z; ++c) {
    for (int r = 0; r < n_z; ++r) G(r, c) = res.sdp.primal(S(r, c));
    for (int i = 0; i < n_u; ++i) G(n_z + i, c) = res.sdp.primal(Y(i, c));
  }
  const Eigen::MatrixXd X2m = ZUp * G;
  Eigen::MatrixXd ZX = Z_dd * X2m;
  ZX = 0.5 * (ZX + ZX.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(ZX);
  if (llt.info() != Eigen::Success) throw AssumptionError("solve_lqr_sdp: Z_dd X2 is singular");
  const Eigen::MatrixXd ZXinv = llt.solve(Eigen::MatrixXd::Identity(n_z, n_z));
  res.K = U_dd * X2m * ZXinv;
  res.H = X2m * ZXinv;
  return res;
}

double compute_gamma(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd& Sigma_W, const Eigen::MatrixXd& E_tilde) {
  require_dims(Gamma.rows() == E_tilde.rows() && Sigma_W.rows() == E_tilde.cols(), "compute_gamma: shape mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Gamma + Gamma.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() * (Sigma_W * E_tilde.transpose() * Gamma * E_tilde).trace();
}

const char* to_string(EpsilonMode m) { return m == EpsilonMode::Full ? "full" : "mean_only"; }

namespace {

// Support of a z over {z^T P z <= eps} is sqrt(eps a P^+ a^T); P may be
// singular, and a row reaching into its nullspace is unbounded.
struct EllipsoidSupport {
  Eigen::MatrixXd V;
  Eigen::VectorXd inv;
  Eigen::MatrixXd N;

  explicit EllipsoidSupport(const Eigen::MatrixXd& P) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()));
    const double lmax = std::max(0.0, es.eigenvalues().maxCoeff());
    std::vector<int> keep, drop;
    for (int i = 0; i < int(P.rows()); ++i) (es.eigenvalues()(i) > 1e-12 * lmax ? keep : drop).push_back(i);
    V.resize(P.rows(), keep.size());
    inv.resize(keep.size());
    N.resize(P.rows(), drop.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      V.col(i) = es.eigenvectors().col(keep[i]);
      inv(i) = 1.0 / es.eigenvalues()(keep[i]);
    }
    for (std::size_t i = 0; i < drop.size(); ++i) N.col(i) = es.eigenvectors().col(drop[i]);
  }
  double quad(const Eigen::RowVectorXd& a) const {
    if (N.cols() > 0 && (a * N).norm() > 1e-9 * std::max(1.0, a.norm()))
      return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd c = V.transpose() * a.transpose();
    return c.cwiseAbs2().dot(inv);
  }
};

bool fits(double radius, double lo, double hi) { return radius <= hi && -radius >= lo; }

bool certified(const EpsilonProblem& pr, const EllipsoidSupport& es, const Eigen::MatrixXd& Ginv, EpsilonMode mode,
               double eps) {
  const int n_u = int(pr.K.rows()), n_y = int(pr.E_tilde.cols());
  const bool full = mode == EpsilonMode::Full;
  auto support = [&](const Eigen::RowVectorXd& a) {
    const double q = es.quad(a);
    return eps == 0.0 ? 0.0 : std::sqrt(eps * q);
  };
  for (int c = 0; c < n_u; ++c) {
    if (!pr.u_box.bounded(c)) continue;
    const Eigen::RowVectorXd a = pr.K.row(c);
    double r = support(a);
    if (full) r += pr.sigmas.u * std::sqrt(std::max(0.0, pr.gamma * a.dot(Ginv * a.transpose())));
    if (!fits(r, pr.u_box.lo(c), pr.u_box.hi(c))) return false;
  }
  const Eigen::MatrixXd S = pr.E_tilde.transpose() * pr.A_K;
  for (int c = 0; c < n_y; ++c) {
    if (!pr.y_box.bounded(c)) continue;
    const Eigen::RowVectorXd a = S.row(c);
    double var = pr.Sigma_W(c, c);
    if (full) var += pr.gamma * a.dot(Ginv * a.transpose());
    const double r = support(a) + pr.sigmas.y * std::sqrt(std::max(0.0, var));
    if (!fits(r, pr.y_box.lo(c), pr.y_box.hi(c))) return false;
  }
  return true;
}

}  // namespace

bool epsilon_certified(const EpsilonProblem& prob, EpsilonMode mode, double eps) {
  return certified(prob, EllipsoidSupport(prob.P), prob.Gamma.inverse(), mode, eps);
}

double calibrate_epsilon_z(const EpsilonProblem& prob, EpsilonMode mode, double upper, int iterations) {
  const EllipsoidSupport es(prob.P);
  const Eigen::MatrixXd Ginv = prob.Gamma.inverse();
  auto ok = [&](double eps) { return certified(prob, es, Ginv, mode, eps); };
  auto fail = [&] {
    return AssumptionError(std::string("calibrate_epsilon_z: no positive eps_z certifies the terminal conditions (") +
                           to_string(mode) + ")");
  };
  if (ok(upper)) return upper;
  if (!ok(0.0)) throw fail();
  double lo = 0.0, hi = upper;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw fail();
  return lo;
}

Eigen::MatrixXd riccati_oracle(const ExtendedMatrices& em, const Eigen::MatrixXd& Q_tilde, const Eigen::MatrixXd& R,
                               int max_iterations) {
  const Eigen::MatrixXd& A = em.A_tilde;
  const Eigen::MatrixXd& B = em.B_tilde;
  Eigen::MatrixXd P = Q_tilde;
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    const Eigen::MatrixXd BPA = B.transpose() * P * A;
    Eigen::MatrixXd Pn = Q_tilde + A.transpose() * P * A - BPA.transpose() * S.ldlt().solve(BPA);
    Pn = 0.5 * (Pn + Pn.transpose());
    const double rel = (Pn - P).norm() / std::max(1e-300, Pn.norm());
    P = std::move(Pn);
    if (rel <= 1e-12) {
      const Eigen::MatrixXd S2 = R + B.transpose() * P * B;
      return -S2.ldlt().solve(B.transpose() * P * A);
    }
  }
  throw AssumptionError("riccati_oracle: no convergence within the iteration budget");
}

TerminalIngredients synthesize_terminal(const DesignMatrices& dm, int n_u, int n_y, const SynthesisOptions& opt,
                                        SynthesisReport* report) {
  const auto t0 = std::chrono::steady_clock::now();
  SynthesisReport rep;
  const ExtendedMatrices em = structural_matrices(n_u, n_y, dm.T_ini);
  rep.rank_ok = rank_assumption_check(dm);
  if (!rep.rank_ok) {
    if (report) *report = rep;
    throw AssumptionError("synthesize_terminal: rank condition violated, [Z_dd; U_dd] does not have full row rank");
  }
  TerminalIngredients ti;
  ti.M = surrogate_M(dm, em);
  const Eigen::MatrixXd Qt = em.E_tilde * opt.Q * em.E_tilde.transpose();
  LqrSdpResult lqr = solve_lqr_sdp(ti.M, dm.Z_dd, dm.U_dd, Qt, opt.R, em.E_tilde, opt.solver);
  rep.sdp_status = to_string(lqr.sdp.status);
  rep.sdp_objective = lqr.sdp.objective_value;
  ti.K = lqr.K;
  ti.H = lqr.H;
  const Eigen::MatrixXd AK = ti.A_K();
  rep.spectral_radius = spectral_radius(AK);
  if (rep.spectral_radius >= 1.0) throw AssumptionError("synthesize_terminal: M H is not Schur");
  const Eigen::MatrixXd Qp = ti.K.transpose() * opt.R * ti.K + AK.transpose() * Qt * AK;
  ti.P = stein_solve(AK, Qp);
  ti.Gamma = stein_solve(AK, Eigen::MatrixXd::Identity(AK.rows(), AK.cols()));
  rep.residual_P = stein_residual(AK, ti.P, Qp);
  rep.residual_Gamma = stein_residual(AK, ti.Gamma, Eigen::MatrixXd::Identity(AK.rows(), AK.cols()));
  if (!is_positive_definite(ti.Gamma)) throw AssumptionError("synthesize_terminal: Gamma not positive definite");
  {
    // The extended state is not minimal in general, so P may be singular
    // along directions that no future cost sees.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ti.P, Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    rep.P_min_eig_ratio = lmax > 0 ? es.eigenvalues().minCoeff() / lmax : 0.0;
    if (rep.P_min_eig_ratio < -1e-10) throw AssumptionError("synthesize_terminal: P not positive semidefinite");
    if (rep.P_min_eig_ratio <= 1e-12) rep.warning = "P is numerically singular (extended state not minimal)";
  }
  ti.gamma = compute_gamma(ti.Gamma, opt.Sigma_W, em.E_tilde);

  EpsilonProblem ep{ti.K, AK, ti.P, ti.Gamma, em.E_tilde, opt.Sigma_W, ti.gamma, opt.u_box, opt.y_box, opt.sigmas,
                    dm.T_ini};
  if (opt.eps_policy != EpsilonPolicy::MeanOnly) {
    try {
      ti.eps_z = calibrate_epsilon_z(ep, EpsilonMode::Full);
      ti.eps_mode = to_string(EpsilonMode::Full);
      rep.full_certified = true;
    } catch (const AssumptionError& e) {
      if (opt.eps_policy == EpsilonPolicy::Full) throw;
      rep.warning += std::string(rep.warning.empty() ? "" : "; ") + e.what() + "; falling back to mean-only certification";
    }
  }
  if (!rep.full_certified) {
    ti.eps_z = calibrate_epsilon_z(ep, EpsilonMode::MeanOnly);
    ti.eps_mode = to_string(EpsilonMode::MeanOnly);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report) *report = rep;
  return ti;
}

namespace {

nlohmann::json mat_json(const Eigen::MatrixXd& A) {
  nlohmann::json j;
  j["rows"] = A.rows();
  j["cols"] = A.cols();
  std::vector<double> d;
  for (Eigen::Index r = 0; r < A.rows(); ++r)
    for (Eigen::Index c = 0; c < A.cols(); ++c) d.push_back(A(r, c));
  j["data"] = d;
  return j;
}

Eigen::MatrixXd json_mat(const nlohmann::json& j) {
  const Eigen::Index r = j.at("rows"), c = j.at("cols");
  const auto d = j.at("data").get<std::vector<double>>();
  if (Eigen::Index(d.size()) != r * c) throw std::runtime_error("ingredients json: matrix size mismatch");
  Eigen::MatrixXd A(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) A(i, k) = d[i * c + k];
  return A;
}

}  // namespace

void write_ingredients_json(const TerminalIngredients& ti, const std::string& path) {
  nlohmann::json j;
  j["K"] = mat_json(ti.K);
  j["H"] = mat_json(ti.H);
  j["M"] = mat_json(ti.M);
  j["P"] = mat_json(ti.P);
  j["Gamma"] = mat_json(ti.Gamma);
  j["gamma"] = ti.gamma;
  j["eps_z"] = ti.eps_z;
  j["eps_mode"] = ti.eps_mode;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << j.dump(1) << '\n';
}

TerminalIngredients read_ingredients_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  TerminalIngredients ti;
  ti.K = json_mat(j.at("K"));
  ti.H = json_mat(j.at("H"));
  ti.M = json_mat(j.at("M"));
  ti.P = json_mat(j.at("P"));
  ti.Gamma = json_mat(j.at("Gamma"));
  ti.gamma = j.at("gamma");
  ti.eps_z = j.at("eps_z");
  ti.eps_mode = j.value("eps_mode", std::string("full"));
  return ti;
}

}  // namespace ddspc
