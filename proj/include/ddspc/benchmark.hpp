#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddspc/controller.hpp"
#include "ddspc/data.hpp"
#include "ddspc/ocp.hpp"
#include "ddspc/terminal.hpp"

namespace ddspc {

struct BenchmarkConfig {
  std::string name = "custom";
  ArxModel model;
  int N = 1;
  Eigen::MatrixXd Q, R;
  double eps_u = 1.0, eps_y = 1.0;
  std::optional<double> sigma_u, sigma_y;  // distribution-aware overrides of sigma(eps)
  Box u_box, y_box;
  int L_ini = 0;  // 0: 1 + n_z
  int L_w = 0;    // 0: 1 + n_w
  int T_synth = 0, T_ocp = 0;
  InputBox data_box;
  Eigen::VectorXd z_ini_data;  // offline experiments
  Eigen::VectorXd z_ini;       // closed loop
  std::uint64_t seed = 1;      // offline data
  std::uint64_t run_seed = 1000;
  int runs = 50, steps = 40;
  double noise_scale = 1.0;    // plant disturbance std relative to Sigma_W
  NormConvention norm = NormConvention::Plain;
  EpsilonPolicy eps_policy = EpsilonPolicy::FullThenMeanOnly;
  SolverSettings solver;
  int threads = 0;             // 0: hardware concurrency

  int basis_L_ini() const { return L_ini > 0 ? L_ini : 1 + model.n_z(); }
  int basis_L_w() const { return L_w > 0 ? L_w : 1 + model.n_w(); }
  double sigma_u_value() const { return sigma_u ? *sigma_u : chance_sigma(eps_u); }
  double sigma_y_value() const { return sigma_y ? *sigma_y : chance_sigma(eps_y); }
  void validate() const;
};

BenchmarkConfig aircraft_config();
// y_k = u_{k-1} + 0.5 y_{k-1} + w_k.
BenchmarkConfig scalar_config();
// Built-in name or path to a YAML file.
BenchmarkConfig load_config(const std::string& name_or_path);
void save_config(const BenchmarkConfig& cfg, const std::string& path);

struct OfflineData {
  Trajectory synth, ocp;
};

OfflineData collect_offline(const BenchmarkConfig& cfg);

SynthesisOptions synthesis_options(const BenchmarkConfig& cfg);

OcpSpec make_spec(const BenchmarkConfig& cfg, const TerminalIngredients& ti, const Trajectory& ocp_data);

// trace(Sigma_W (Q + E~' P E~)) scaled by the norm convention.
double alpha_bound(const BenchmarkConfig& cfg, const TerminalIngredients& ti, NormConvention conv);

struct RunLog {
  int run = 0;
  std::uint64_t seed = 0;
  std::vector<ClosedLoopRecord> records;
  bool aborted = false;
  std::string error;
  double seconds = 0.0;
};

std::uint64_t run_seed(const BenchmarkConfig& cfg, int run);

RunLog simulate_run(const BenchmarkConfig& cfg, const OcpSpec& spec, int run);

// Independent runs on a worker pool; results ordered by run index.
std::vector<RunLog> monte_carlo(const BenchmarkConfig& cfg, const OcpSpec& spec, int runs);

struct MetricsReport {
  double alpha = 0.0;
  NormConvention norm = NormConvention::Plain;
  int runs = 0, completed = 0, aborted = 0, steps = 0;
  double average_cost = 0.0;                  // over completed runs and steps
  std::vector<double> average_cost_by_step;   // over runs
  std::vector<double> run_average_cost;       // over steps, per completed run
  // violation frequency per constrained output component (rows) and step (cols)
  std::vector<int> y_constrained;
  Eigen::MatrixXd y_violation;
  std::vector<double> y_violation_pooled;
  int branch_measured = 0, branch_backup = 0, branch_fallback = 0;
  // mean and standard error of V_{k+1} - V_k + stage_k - alpha per k
  std::vector<double> decay_mean, decay_se;
  double decay_worst_z = 0.0;                 // max over k of mean / se
  int selection_violations = 0;               // steps with V > J_tilde
};

MetricsReport compute_metrics(const std::vector<RunLog>& logs, const BenchmarkConfig& cfg, double alpha);

}  // namespace ddspc
