#pragma once

#include <Eigen/Dense>

#include <optional>
#include <random>
#include <string>

#include "ddspc/arx.hpp"

namespace ddspc {

struct HankelSet {
  Eigen::MatrixXd Hu;  // (N + T_ini) n_u x g_dim
  Eigen::MatrixXd Hy;  // (N + T_ini) n_y x g_dim
  Eigen::MatrixXd Hw;  // N n_w x g_dim, from w_{[T_ini, T-1]}
  int N = 0;
  int T_ini = 0;
  int g_dim = 0;

  int n_u() const { return int(Hu.rows()) / (N + T_ini); }
  int n_y() const { return int(Hy.rows()) / (N + T_ini); }
  int n_w() const { return N > 0 ? int(Hw.rows()) / N : 0; }
};

struct DesignMatrices {
  Eigen::MatrixXd Z_dd, U_dd, Y_dd, W_dd;
  int T_ini = 0;
};

bool pe_order_check(const Eigen::MatrixXd& seq, int order);

// Persistency-of-excitation order required of the stacked (u, w) signal.
inline int required_pe_order(int n_x, int N, int T_ini) { return n_x + N + T_ini; }

// With n_x given, the stacked (u, w) data must be PE of order n_x + N + T_ini.
HankelSet build_ocp_hankels(const Trajectory& traj, int N, int T_ini, std::optional<int> n_x);

DesignMatrices build_design_matrices(const Trajectory& traj);
bool rank_assumption_check(const DesignMatrices& dm);

// Box for i.i.d. uniform offline inputs.
struct InputBox {
  Eigen::VectorXd lo, hi;
};

// Runs one offline experiment from z_ini. When pe_order is set the stacked
// (u, w) record is redrawn (up to max_attempts) until it is PE of that order.
Trajectory collect_data(const ArxModel& model, int T, const InputBox& box, const Eigen::VectorXd& z_ini,
                        std::mt19937_64& rng, std::optional<int> pe_order, int max_attempts = 20);

// CSV: header u0..,w0..,y0.., one row per step; prefix file has u0..,y0...
void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& prefix_path);
Trajectory read_trajectory_csv(const std::string& path, const std::string& prefix_path);

}  // namespace ddspc
