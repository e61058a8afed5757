#pragma once

#include <Eigen/Dense>

#include <random>

#include "ddspc/pce.hpp"

namespace ddspc {

// y_k = Phi z_k + D u_k + w_k with z_k = [u_{k-l}; ...; u_{k-1}; y_{k-l}; ...; y_{k-1}].
struct ArxModel {
  Eigen::MatrixXd Phi;      // n_y x n_z
  Eigen::MatrixXd D;        // n_y x n_u
  int T_ini = 1;
  Eigen::MatrixXd Sigma_W;  // n_y x n_y
  int n_x = 1;

  int n_u() const { return int(D.cols()); }
  int n_y() const { return int(D.rows()); }
  int n_w() const { return n_y(); }
  int n_z() const { return T_ini * (n_u() + n_y()); }
  void validate() const;
};

struct ExtendedMatrices {
  Eigen::MatrixXd A_bar;    // (n_z - n_y) x n_z
  Eigen::MatrixXd B_bar;    // (n_z - n_y) x n_u
  Eigen::MatrixXd A_tilde;  // n_z x n_z
  Eigen::MatrixXd B_tilde;  // n_z x n_u
  Eigen::MatrixXd E_tilde;  // n_z x n_y
};

// Structural shift part only; needs no model matrices.
ExtendedMatrices structural_matrices(int n_u, int n_y, int T_ini);
ExtendedMatrices extended_matrices(const ArxModel& model);

// Next extended state after applying u and observing y.
Eigen::VectorXd shift_extended_state(int n_u, int n_y, int T_ini, const Eigen::VectorXd& z,
                                     const Eigen::VectorXd& u, const Eigen::VectorXd& y);

// z from past windows stored column-wise (oldest first), T_ini columns each.
Eigen::VectorXd stack_extended_state(const Eigen::MatrixXd& u_past, const Eigen::MatrixXd& y_past);

struct StepResult {
  Eigen::VectorXd y;
  Eigen::VectorXd z_next;
};

StepResult step_realization(const ArxModel& model, const Eigen::VectorXd& z, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& w);

// Offline record: u, w, y with one column per step, plus the T_ini-step (u, y)
// prefix preceding step 0.
struct Trajectory {
  Eigen::MatrixXd u, w, y;
  Eigen::MatrixXd u_prefix, y_prefix;

  Eigen::Index length() const { return u.cols(); }
  Eigen::VectorXd initial_state() const { return stack_extended_state(u_prefix, y_prefix); }
  void validate(int T_ini) const;
};

Trajectory simulate(const ArxModel& model, const Eigen::VectorXd& z_ini, const Eigen::MatrixXd& u_seq,
                    const Eigen::MatrixXd& w_seq);

enum class DisturbanceDistribution { Gaussian, Uniform };

// Zero mean, covariance Sigma_W. The uniform option scales a U(-sqrt3, sqrt3)
// germ through the PSD square root.
Eigen::VectorXd sample_disturbance(const ArxModel& model, std::mt19937_64& rng,
                                   DisturbanceDistribution dist = DisturbanceDistribution::Gaussian);

struct PceStep {
  PceVector y;
  PceVector z_next;
};

// Column-wise coefficient dynamics of the ARX model.
PceStep pce_step(const ArxModel& model, const PceVector& z, const PceVector& u, const PceVector& w);

}  // namespace ddspc
