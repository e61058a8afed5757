#pragma once

#include <Eigen/Dense>

#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ddspc/arx.hpp"
#include "ddspc/ocp.hpp"

namespace ddspc {

enum class Branch { Measured, Backup, MeasuredFallback };
const char* to_string(Branch b);

struct ControllerState {
  int k = 0;
  double J_tilde = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd pred_z;      // z*_{1|k-1}, n_z x (L_ini + L_w - 1); empty at k = 0
  Eigen::VectorXd pred_norms;  // norms of its basis terms
};

// Everything one closed-loop run shares across steps.
struct Controller {
  OcpSpec spec;
  SolverSettings solver;
  SolverWorkspace workspace;

  explicit Controller(OcpSpec s, SolverSettings st = {}) : spec(std::move(s)), solver(st) { spec.validate(); }
};

struct Shifted {
  std::vector<Eigen::MatrixXd> u, y;  // steps 0..N-1 in the extended basis
  Eigen::MatrixXd z_N;
  Eigen::VectorXd norms_sq;           // extended basis, L + L_w - 1 terms
  double J_tilde = 0.0;
  Eigen::MatrixXd pred_z;             // z at relative step 0, first L_ini + L_w - 1 columns
  Eigen::VectorXd pred_norms;
};

Shifted shift_candidate(const OcpSolution& sol, const TerminalIngredients& ti, const OcpSpec& spec);

// Measured: the mean input. Backup: germs from the least-squares fit of
// z_cl - mean onto the initial columns; the fit residual goes to *residual.
Eigen::VectorXd realize_feedback(const OcpSolution& sol, const InitialCondition& init, const Eigen::VectorXd& z_cl,
                                 const BasisSpec& basis, double* residual = nullptr);

struct Decision {
  Eigen::VectorXd u_cl;
  double V = 0.0;
  Branch branch = Branch::Measured;
  double J_tilde = 0.0;  // candidate bound in force at this step
  double V_measured = std::numeric_limits<double>::quiet_NaN();
  double V_backup = std::numeric_limits<double>::quiet_NaN();
  SolveStatus status_measured = SolveStatus::NumericalFailure;
  SolveStatus status_backup = SolveStatus::NumericalFailure;
  double germ_residual = 0.0;
  int iterations = 0;
};

// Initial-condition selection, solve and bookkeeping for the next step.
Decision select_and_solve(Controller& c, const ControllerState& state, const Eigen::VectorXd& z_cl,
                          ControllerState& next);

struct Plant {
  ArxModel model;
  Eigen::VectorXd z;
  std::mt19937_64 rng;
  DisturbanceDistribution dist = DisturbanceDistribution::Gaussian;
  double noise_scale = 1.0;
};

struct ClosedLoopRecord {
  int k = 0;
  Branch branch = Branch::Measured;
  double V = 0.0, J_tilde = 0.0, V_measured = 0.0, V_backup = 0.0;
  double stage_plain = 0.0, stage_half = 0.0;
  double germ_residual = 0.0;
  int iterations = 0;
  Eigen::VectorXd u, y, w;
};

ClosedLoopRecord step(Controller& c, ControllerState& state, Plant& plant);

}  // namespace ddspc
