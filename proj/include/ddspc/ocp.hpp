#pragma once

#include <Eigen/Dense>

#include <optional>
#include <variant>
#include <vector>

#include "ddspc/conic.hpp"
#include "ddspc/data.hpp"
#include "ddspc/pce.hpp"
#include "ddspc/terminal.hpp"

namespace ddspc {

// Plain: |x|_Q^2 = x^T Q x. Half: 1/2 x^T Q x.
enum class NormConvention { Plain, Half };
inline double cost_factor(NormConvention c) { return c == NormConvention::Half ? 0.5 : 1.0; }
const char* to_string(NormConvention c);
NormConvention parse_norm_convention(const std::string& s);

struct OcpSpec {
  int N = 1;
  Eigen::MatrixXd Q, R;
  TerminalIngredients ti;
  HankelSet hankels;
  BasisSpec basis;
  double eps_u = 1.0, eps_y = 1.0;
  double sigma_u = 1.0, sigma_y = 1.0;
  bool sigma_override = false;  // sigmas not tied to chance_sigma(eps)
  Box u_box, y_box;
  std::vector<PceVector> w_pce;  // one per horizon step, n_w x L
  NormConvention norm = NormConvention::Plain;
  bool terminal_constraints = true;

  int T_ini() const { return hankels.T_ini; }
  int n_u() const { return hankels.n_u(); }
  int n_y() const { return hankels.n_y(); }
  int n_z() const { return T_ini() * (n_u() + n_y()); }
  int L() const { return basis.L; }
  void validate() const;
};

// Fills the disturbance PCE of every horizon step from Sigma_W.
std::vector<PceVector> horizon_disturbances(const Eigen::MatrixXd& Sigma_W, const BasisSpec& basis);

struct MeasuredInit {
  Eigen::VectorXd z;
};

struct BackupInit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd A_z;    // symmetric PSD, A_z A_z^T = Q_rhs for unit norms
  Eigen::MatrixXd Q_rhs;  // predicted covariance that is matched
};

using InitialCondition = std::variant<MeasuredInit, BackupInit>;

InitialCondition measured_init(const Eigen::VectorXd& z);
// pred: z*_{1|k-1} coefficients (n_z x at least 1 columns) with their norms.
InitialCondition backup_init(const Eigen::MatrixXd& pred, const Eigen::VectorXd& norms_sq);

// Coefficients of step-indexed trajectories: u[i], y[i] are n x L matrices.
struct OcpSolution {
  std::vector<Eigen::MatrixXd> u, y;  // steps -T_ini .. N-1, index i + T_ini
  Eigen::MatrixXd g;                  // g_dim x L
  double cost = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  int iterations = 0;

  int T_ini = 1;
  const Eigen::MatrixXd& u_at(int i) const { return u[i + T_ini]; }
  const Eigen::MatrixXd& y_at(int i) const { return y[i + T_ini]; }
  // Extended state coefficients at relative step i in [0, N].
  Eigen::MatrixXd z_at(int i) const;
};

// sum_j |phi^j|^2 (sum_i |y_i^j|_Q^2 + |u_i^j|_R^2 + |z_N^j|_P^2) for steps 0..N-1.
double trajectory_cost(const std::vector<Eigen::MatrixXd>& u, const std::vector<Eigen::MatrixXd>& y,
                       const Eigen::MatrixXd& z_N, const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                       const Eigen::MatrixXd& P, const Eigen::VectorXd& norms_sq, NormConvention conv);

double stage_cost(const Eigen::VectorXd& u, const Eigen::VectorXd& y, const Eigen::MatrixXd& Q,
                  const Eigen::MatrixXd& R, NormConvention conv);

// Layout of the program variables. Each column is solved in orthonormal
// coordinates theta of the stacked Hankel range, g^j = g_map theta^j.
struct OcpLayout {
  int g_dim = 0, L = 0;  // g_dim: length of theta^j
  Eigen::MatrixXd g_map;
  int g_offset(int j) const { return j * g_dim; }
  int n_g() const { return g_dim * L; }
};

struct OcpProgram {
  ConicProgram program;
  OcpLayout layout;
};

OcpProgram assemble(const OcpSpec& spec, const InitialCondition& init);

OcpSolution extract_solution(const OcpSpec& spec, const OcpProgram& op, const Solution& sol);

// assemble + solve + extract.
OcpSolution solve_ocp(const OcpSpec& spec, const InitialCondition& init, const SolverSettings& settings = {},
                      SolverWorkspace* ws = nullptr);

// First coefficient index j' with u^{j'}_i forced to zero.
inline int causality_start(const BasisSpec& b, int i) { return b.L_ini + i * (b.L_w - 1) + 1; }

}  // namespace ddspc
