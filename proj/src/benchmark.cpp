#include "ddspc/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace ddspc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Data record long enough for a PE test of the given order on m signals.
bool pe_testable(int T, int order, int m) { return T >= order * (m + 1) - 1; }

int ocp_pe_order(const BenchmarkConfig& cfg) { return required_pe_order(cfg.model.n_x, cfg.N, cfg.model.T_ini); }

}  // namespace

void BenchmarkConfig::validate() const {
  model.validate();
  const int nu = model.n_u(), ny = model.n_y(), nz = model.n_z();
  require_dims(N >= 1, "config: N must be positive");
  require_dims(Q.rows() == ny && Q.cols() == ny && R.rows() == nu && R.cols() == nu, "config: Q is n_y x n_y, R is n_u x n_u");
  require_dims(u_box.lo.size() == nu && u_box.hi.size() == nu, "config: u_box needs n_u bounds");
  require_dims(y_box.lo.size() == ny && y_box.hi.size() == ny, "config: y_box needs n_y bounds");
  require_dims(data_box.lo.size() == nu && data_box.hi.size() == nu, "config: data_box needs n_u bounds");
  require_dims(z_ini_data.size() == nz && z_ini.size() == nz, "config: initial states need n_z entries");
  require_dims(T_synth >= 1 && T_ocp >= N + model.T_ini, "config: data lengths too short");
  require_dims(runs >= 0 && steps >= 1, "config: runs >= 0 and steps >= 1");
  require_dims(basis_L_w() - 1 == model.n_w(), "config: L_w - 1 must equal n_w (one Hermite germ per component)");
  require_dims(basis_L_ini() >= 1, "config: L_ini must be positive");
  if (!(eps_u > 0 && eps_u <= 1 && eps_y > 0 && eps_y <= 1)) throw DimensionError("config: eps in (0, 1]");
}

BenchmarkConfig aircraft_config() {
  BenchmarkConfig c;
  c.name = "aircraft";
  c.model.Phi.resize(3, 8);
  c.model.Phi << -0.019, -1.440, -0.201, 0.256, 0.050, 0.160, -0.256, 0.0860,
                 0.711, -1.800, -4.773, 3.6875, 0.650, 2.982, -2.688, 1.707,
                 1.444, -26.922, -15.746, 12.898, 2.319, 10.461, -12.897, 5.171;
  c.model.D = Eigen::MatrixXd::Zero(3, 1);
  c.model.T_ini = 2;
  c.model.Sigma_W = Eigen::Vector3d(1e-4, 1.0, 1e-2).asDiagonal();
  c.model.n_x = 4;
  c.N = 10;
  c.Q = Eigen::MatrixXd::Identity(3, 3);
  c.R = Eigen::MatrixXd::Identity(1, 1);
  c.eps_u = 1.0;
  c.eps_y = 0.1;
  c.sigma_y = 1.645;
  c.u_box = Box::unbounded(1);
  c.y_box = Box::unbounded(3);
  c.y_box.lo(0) = -1.0;
  c.y_box.hi(0) = 1.0;
  c.L_ini = 9;
  c.L_w = 4;
  c.T_synth = 22;
  c.T_ocp = 90;
  c.data_box = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  c.z_ini_data = Eigen::VectorXd::Zero(8);
  c.z_ini = Eigen::VectorXd::Zero(8);
  c.seed = 1;
  c.run_seed = 1000;
  c.runs = 50;
  c.steps = 40;
  return c;
}

BenchmarkConfig scalar_config() {
  BenchmarkConfig c;
  c.name = "scalar";
  c.model.Phi.resize(1, 2);
  c.model.Phi << 1.0, 0.5;
  c.model.D = Eigen::MatrixXd::Zero(1, 1);
  c.model.T_ini = 1;
  c.model.Sigma_W = Eigen::MatrixXd::Constant(1, 1, 0.01);
  c.model.n_x = 1;
  c.N = 4;
  c.Q = Eigen::MatrixXd::Identity(1, 1);
  c.R = Eigen::MatrixXd::Identity(1, 1);
  c.eps_u = 0.2;
  c.eps_y = 0.2;
  c.u_box = {Eigen::VectorXd::Constant(1, -2.0), Eigen::VectorXd::Constant(1, 2.0)};
  c.y_box = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  c.L_ini = 3;
  c.L_w = 2;
  c.T_synth = 20;
  c.T_ocp = 40;
  c.data_box = {Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  c.z_ini_data = Eigen::VectorXd::Zero(2);
  c.z_ini = Eigen::VectorXd::Zero(2);
  c.seed = 1;
  c.run_seed = 5000;
  c.runs = 50;
  c.steps = 100;
  return c;
}

OfflineData collect_offline(const BenchmarkConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  OfflineData d;
  d.synth = collect_data(cfg.model, cfg.T_synth, cfg.data_box, cfg.z_ini_data, rng, std::nullopt);
  const int order = ocp_pe_order(cfg);
  const int m = cfg.model.n_u() + cfg.model.n_w();
  d.ocp = collect_data(cfg.model, cfg.T_ocp, cfg.data_box, cfg.z_ini_data, rng,
                       pe_testable(cfg.T_ocp, order, m) ? std::optional<int>(order) : std::nullopt);
  return d;
}

SynthesisOptions synthesis_options(const BenchmarkConfig& cfg) {
  SynthesisOptions o;
  o.Q = cfg.Q;
  o.R = cfg.R;
  o.Sigma_W = cfg.model.Sigma_W;
  o.u_box = cfg.u_box;
  o.y_box = cfg.y_box;
  o.sigmas = {cfg.sigma_u_value(), cfg.sigma_y_value()};
  o.eps_policy = cfg.eps_policy;
  o.solver = cfg.solver;
  return o;
}

OcpSpec make_spec(const BenchmarkConfig& cfg, const TerminalIngredients& ti, const Trajectory& ocp_data) {
  cfg.validate();
  const int order = ocp_pe_order(cfg);
  const int m = cfg.model.n_u() + cfg.model.n_w();
  OcpSpec s;
  s.N = cfg.N;
  s.Q = cfg.Q;
  s.R = cfg.R;
  s.ti = ti;
  s.hankels = build_ocp_hankels(ocp_data, cfg.N, cfg.model.T_ini,
                                pe_testable(int(ocp_data.length()), order, m) ? std::optional<int>(cfg.model.n_x)
                                                                             : std::nullopt);
  s.basis = build_joint_basis(cfg.basis_L_ini(), cfg.basis_L_w(), cfg.N);
  s.eps_u = cfg.eps_u;
  s.eps_y = cfg.eps_y;
  s.sigma_override = cfg.sigma_u.has_value() || cfg.sigma_y.has_value();
  s.sigma_u = cfg.sigma_u_value();
  s.sigma_y = cfg.sigma_y_value();
  s.u_box = cfg.u_box;
  s.y_box = cfg.y_box;
  s.w_pce = horizon_disturbances(cfg.model.Sigma_W, s.basis);
  s.norm = cfg.norm;
  s.validate();
  return s;
}

double alpha_bound(const BenchmarkConfig& cfg, const TerminalIngredients& ti, NormConvention conv) {
  const ExtendedMatrices em = extended_matrices(cfg.model);
  return cost_factor(conv) * (cfg.model.Sigma_W * (cfg.Q + em.E_tilde.transpose() * ti.P * em.E_tilde)).trace();
}

std::uint64_t run_seed(const BenchmarkConfig& cfg, int run) { return cfg.run_seed + std::uint64_t(run); }

RunLog simulate_run(const BenchmarkConfig& cfg, const OcpSpec& spec, int run) {
  RunLog log;
  log.run = run;
  log.seed = run_seed(cfg, run);
  const auto t0 = std::chrono::steady_clock::now();
  Controller c(spec, cfg.solver);
  ControllerState state;
  Plant plant{cfg.model, cfg.z_ini, std::mt19937_64(log.seed)};
  plant.noise_scale = cfg.noise_scale;
  try {
    for (int k = 0; k < cfg.steps; ++k) log.records.push_back(step(c, state, plant));
  } catch (const std::exception& e) {
    log.aborted = true;
    log.error = e.what();
  }
  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

std::vector<RunLog> monte_carlo(const BenchmarkConfig& cfg, const OcpSpec& spec, int runs) {
  std::vector<RunLog> logs(std::max(0, runs));
  const int hw = int(std::thread::hardware_concurrency());
  const int workers = std::clamp(cfg.threads > 0 ? cfg.threads : std::max(1, hw), 1, std::max(1, runs));
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next++; r < runs; r = next++) logs[r] = simulate_run(cfg, spec, r);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return logs;
}

MetricsReport compute_metrics(const std::vector<RunLog>& logs, const BenchmarkConfig& cfg, double alpha) {
  MetricsReport m;
  m.alpha = alpha;
  m.norm = cfg.norm;
  m.runs = int(logs.size());
  m.steps = cfg.steps;
  const int ny = cfg.model.n_y();
  for (int i = 0; i < ny; ++i)
    if (cfg.y_box.bounded(i)) m.y_constrained.push_back(i);
  const int K = cfg.steps;
  std::vector<double> sum_by_step(K, 0.0);
  std::vector<int> n_by_step(K, 0);
  m.y_violation = Eigen::MatrixXd::Zero(m.y_constrained.size(), K);
  std::vector<std::vector<double>> decay(std::max(0, K - 1));
  double total = 0.0;
  long count = 0;
  auto stage = [&](const ClosedLoopRecord& r) { return cfg.norm == NormConvention::Half ? r.stage_half : r.stage_plain; };
  for (const auto& log : logs) {
    if (log.aborted) {
      ++m.aborted;
      continue;
    }
    ++m.completed;
    const auto& rec = log.records;
    double run_sum = 0.0;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      const auto& r = rec[k];
      const double l = stage(r);
      run_sum += l;
      total += l;
      ++count;
      sum_by_step[k] += l;
      ++n_by_step[k];
      for (std::size_t c = 0; c < m.y_constrained.size(); ++c) {
        const int i = m.y_constrained[c];
        if (r.y(i) < cfg.y_box.lo(i) || r.y(i) > cfg.y_box.hi(i)) m.y_violation(c, k) += 1.0;
      }
      switch (r.branch) {
        case Branch::Measured: ++m.branch_measured; break;
        case Branch::Backup: ++m.branch_backup; break;
        case Branch::MeasuredFallback: ++m.branch_fallback; break;
      }
      if (k > 0 && r.V > r.J_tilde + 1e-6 * std::max(1.0, std::abs(r.J_tilde))) ++m.selection_violations;
      if (k + 1 < rec.size()) decay[k].push_back(rec[k + 1].V - r.V + l - alpha);
    }
    m.run_average_cost.push_back(rec.empty() ? 0.0 : run_sum / double(rec.size()));
  }
  m.average_cost = count ? total / double(count) : 0.0;
  for (int k = 0; k < K; ++k) m.average_cost_by_step.push_back(n_by_step[k] ? sum_by_step[k] / n_by_step[k] : 0.0);
  for (int k = 0; k < K; ++k)
    if (n_by_step[k]) m.y_violation.col(k) /= double(n_by_step[k]);
  for (std::size_t c = 0; c < m.y_constrained.size(); ++c) {
    double v = 0.0;
    long n = 0;
    for (int k = 0; k < K; ++k) {
      v += m.y_violation(c, k) * n_by_step[k];
      n += n_by_step[k];
    }
    m.y_violation_pooled.push_back(n ? v / double(n) : 0.0);
  }
  m.decay_worst_z = -kInf;
  for (const auto& d : decay) {
    const double n = double(d.size());
    double mean = 0.0, var = 0.0;
    for (double x : d) mean += x;
    mean = n > 0 ? mean / n : 0.0;
    for (double x : d) var += (x - mean) * (x - mean);
    const double se = n > 1 ? std::sqrt(var / (n - 1) / n) : kInf;
    m.decay_mean.push_back(mean);
    m.decay_se.push_back(se);
    const double z = se > 0 ? mean / se : (mean > 0 ? kInf : -kInf);
    m.decay_worst_z = std::max(m.decay_worst_z, z);
  }
  return m;
}

}  // namespace ddspc
