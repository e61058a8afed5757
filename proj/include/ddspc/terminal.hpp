#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "ddspc/arx.hpp"
#include "ddspc/conic.hpp"
#include "ddspc/data.hpp"

namespace ddspc {

struct TerminalIngredients {
  Eigen::MatrixXd K;      // n_u x n_z
  Eigen::MatrixXd H;      // T x n_z
  Eigen::MatrixXd M;      // n_z x T
  Eigen::MatrixXd P;      // n_z x n_z
  Eigen::MatrixXd Gamma;  // n_z x n_z
  double gamma = 0.0;
  double eps_z = 0.0;
  std::string eps_mode;   // certification used for eps_z

  Eigen::MatrixXd A_K() const { return M * H; }
};

// Per-component bounds; +-infinity drops the constraint.
struct Box {
  Eigen::VectorXd lo, hi;
  static Box unbounded(int n);
  bool bounded(int i) const { return std::isfinite(lo(i)) || std::isfinite(hi(i)); }
};

struct ChanceSigmas {
  double u = 0.0;
  double y = 0.0;
};

// sigma(eps) = sqrt((2 - eps) / eps)
double chance_sigma(double eps);

Eigen::MatrixXd surrogate_M(const DesignMatrices& dm, const ExtendedMatrices& em);

struct LqrSdpResult {
  Eigen::MatrixXd K, H;
  Solution sdp;
};

// Data-driven LQR via the convex program over (X1, X2).
LqrSdpResult solve_lqr_sdp(const Eigen::MatrixXd& M, const Eigen::MatrixXd& Z_dd, const Eigen::MatrixXd& U_dd,
                           const Eigen::MatrixXd& Q_tilde, const Eigen::MatrixXd& R, const Eigen::MatrixXd& E_tilde,
                           const SolverSettings& settings = {});

double compute_gamma(const Eigen::MatrixXd& Gamma, const Eigen::MatrixXd& Sigma_W, const Eigen::MatrixXd& E_tilde);

// Full: every row of the terminal conditions certified with the gamma-budgeted
// covariance term. MeanOnly: covariance part reduced to Var[W] on outputs.
enum class EpsilonMode { Full, MeanOnly };
const char* to_string(EpsilonMode m);

struct EpsilonProblem {
  Eigen::MatrixXd K, A_K, P, Gamma, E_tilde, Sigma_W;
  double gamma = 0.0;
  Box u_box, y_box;
  ChanceSigmas sigmas;
  int T_ini = 1;
};

// Largest certified level on [0, upper] by bisection over the input and output
// rows; throws AssumptionError when no positive level certifies.
double calibrate_epsilon_z(const EpsilonProblem& prob, EpsilonMode mode, double upper = 1e3, int iterations = 60);
bool epsilon_certified(const EpsilonProblem& prob, EpsilonMode mode, double eps);

// K* of the LQR for the true extended matrices by Riccati iteration.
Eigen::MatrixXd riccati_oracle(const ExtendedMatrices& em, const Eigen::MatrixXd& Q_tilde, const Eigen::MatrixXd& R,
                               int max_iterations = 1000000);

enum class EpsilonPolicy { Full, MeanOnly, FullThenMeanOnly };

struct SynthesisOptions {
  Eigen::MatrixXd Q, R;
  Eigen::MatrixXd Sigma_W;
  Box u_box, y_box;
  ChanceSigmas sigmas;
  EpsilonPolicy eps_policy = EpsilonPolicy::FullThenMeanOnly;
  SolverSettings solver;
};

struct SynthesisReport {
  bool rank_ok = false;
  double spectral_radius = 0.0;
  double residual_P = 0.0;
  double residual_Gamma = 0.0;
  double P_min_eig_ratio = 0.0;  // lambda_min / lambda_max
  double sdp_objective = 0.0;
  std::string sdp_status;
  bool full_certified = false;
  std::string warning;
  double seconds = 0.0;
};

TerminalIngredients synthesize_terminal(const DesignMatrices& dm, int n_u, int n_y, const SynthesisOptions& opt,
                                        SynthesisReport* report = nullptr);

void write_ingredients_json(const TerminalIngredients& ti, const std::string& path);
TerminalIngredients read_ingredients_json(const std::string& path);

}  // namespace ddspc
