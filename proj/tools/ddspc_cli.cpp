#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "ddspc/benchmark.hpp"
#include "ddspc/report.hpp"
#include "ddspc/validation.hpp"

using namespace ddspc;
namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config = "aircraft";
  std::string out_dir = "out";
  std::string data_dir;  // defaults to out_dir
  std::optional<std::uint64_t> seed, run_seed;
  std::optional<int> runs, steps, threads;
  std::optional<std::string> norm;
  bool quick = false;
  bool verbose = false;
};

BenchmarkConfig resolve(const Args& a) {
  BenchmarkConfig c = load_config(a.config);
  if (a.seed) c.seed = *a.seed;
  if (a.run_seed) c.run_seed = *a.run_seed;
  if (a.runs) c.runs = *a.runs;
  if (a.steps) c.steps = *a.steps;
  if (a.threads) c.threads = *a.threads;
  if (a.norm) c.norm = parse_norm_convention(*a.norm);
  c.validate();
  return c;
}

fs::path data_dir(const Args& a) { return a.data_dir.empty() ? fs::path(a.out_dir) : fs::path(a.data_dir); }

void save_offline(const OfflineData& d, const fs::path& dir) {
  write_trajectory_csv(d.synth, (dir / "synth_data.csv").string(), (dir / "synth_prefix.csv").string());
  write_trajectory_csv(d.ocp, (dir / "ocp_data.csv").string(), (dir / "ocp_prefix.csv").string());
}

// Stored data when present, otherwise a fresh collection.
OfflineData offline(const BenchmarkConfig& cfg, const fs::path& dir) {
  if (fs::exists(dir / "synth_data.csv") && fs::exists(dir / "ocp_data.csv")) {
    std::cerr << "using offline data in " << dir << "\n";
    return {read_trajectory_csv((dir / "synth_data.csv").string(), (dir / "synth_prefix.csv").string()),
            read_trajectory_csv((dir / "ocp_data.csv").string(), (dir / "ocp_prefix.csv").string())};
  }
  return collect_offline(cfg);
}

TerminalIngredients ingredients(const BenchmarkConfig& cfg, const fs::path& dir, const OfflineData& d) {
  if (fs::exists(dir / "ingredients.json")) return read_ingredients_json((dir / "ingredients.json").string());
  return synthesize_terminal(build_design_matrices(d.synth), cfg.model.n_u(), cfg.model.n_y(), synthesis_options(cfg));
}

int cmd_collect(const Args& a) {
  const BenchmarkConfig cfg = resolve(a);
  fs::create_directories(a.out_dir);
  const OfflineData d = collect_offline(cfg);
  save_offline(d, a.out_dir);
  save_config(cfg, (fs::path(a.out_dir) / "config.yaml").string());
  std::cout << "collected " << d.synth.length() << " + " << d.ocp.length() << " steps into " << a.out_dir << "\n";
  return 0;
}

int cmd_synth(const Args& a) {
  const BenchmarkConfig cfg = resolve(a);
  fs::create_directories(a.out_dir);
  const OfflineData d = offline(cfg, data_dir(a));
  SynthesisReport rep;
  const auto t0 = std::chrono::steady_clock::now();
  TerminalIngredients ti;
  try {
    ti = synthesize_terminal(build_design_matrices(d.synth), cfg.model.n_u(), cfg.model.n_y(), synthesis_options(cfg),
                             &rep);
  } catch (...) {
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    SynthesisSummary s;
    s.report = rep;
    write_synthesis_json(s, (fs::path(a.out_dir) / "synthesis_report.json").string());
    throw;
  }
  const SynthesisSummary s = summarize_synthesis(cfg, ti, rep);
  write_ingredients_json(ti, (fs::path(a.out_dir) / "ingredients.json").string());
  write_synthesis_json(s, (fs::path(a.out_dir) / "synthesis_report.json").string());
  std::printf("K relative error  %.3e\nspectral radius   %.6f\nStein residual P  %.3e\nStein residual G  %.3e\n",
              s.K_rel_error, rep.spectral_radius, rep.residual_P, rep.residual_Gamma);
  std::printf("gamma             %.6g\neps_z             %.6g (%s)\nalpha plain/half  %.4f / %.4f\n", ti.gamma,
              ti.eps_z, ti.eps_mode.c_str(), s.alpha_plain, s.alpha_half);
  if (!rep.warning.empty()) std::printf("warning: %s\n", rep.warning.c_str());
  return 0;
}

int cmd_simulate(const Args& a) {
  BenchmarkConfig cfg = resolve(a);
  if (a.verbose) cfg.solver.verbose = true;
  fs::create_directories(a.out_dir);
  const OfflineData d = offline(cfg, data_dir(a));
  const TerminalIngredients ti = ingredients(cfg, data_dir(a), d);
  const OcpSpec spec = make_spec(cfg, ti, d.ocp);
  const RunLog log = simulate_run(cfg, spec, 0);
  const fs::path path = fs::path(a.out_dir) / "run_log.csv";
  write_run_log_csv(log, cfg.norm, path.string());
  double sum = 0.0;
  for (const auto& r : log.records) sum += cfg.norm == NormConvention::Half ? r.stage_half : r.stage_plain;
  std::printf("%zu steps in %.2f s, average stage cost %.4f, alpha %.4f, log %s\n", log.records.size(), log.seconds,
              log.records.empty() ? 0.0 : sum / log.records.size(), alpha_bound(cfg, ti, cfg.norm),
              path.string().c_str());
  if (log.aborted) {
    std::cerr << "aborted: " << log.error << "\n";
    return 2;
  }
  return 0;
}

int cmd_montecarlo(const Args& a) {
  const BenchmarkConfig cfg = resolve(a);
  const fs::path out(a.out_dir);
  fs::create_directories(out / "runs");
  const OfflineData d = offline(cfg, data_dir(a));
  const TerminalIngredients ti = ingredients(cfg, data_dir(a), d);
  const OcpSpec spec = make_spec(cfg, ti, d.ocp);
  const double alpha = alpha_bound(cfg, ti, cfg.norm);
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<RunLog> logs = monte_carlo(cfg, spec, cfg.runs);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& log : logs) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03d.csv", log.run);
    write_run_log_csv(log, cfg.norm, (out / "runs" / name).string());
  }
  const MetricsReport m = compute_metrics(logs, cfg, alpha);
  write_metrics_json(m, (out / "metrics.json").string());
  write_figure_csvs(logs, cfg, m, (out / "figures").string());
  save_config(cfg, (out / "config.yaml").string());
  std::printf("%d runs (%d aborted) x %d steps in %.1f s\n", m.runs, m.aborted, m.steps, secs);
  std::printf("average stage cost %.4f, alpha %.4f (%s)\n", m.average_cost, m.alpha, to_string(m.norm));
  for (std::size_t c = 0; c < m.y_constrained.size(); ++c)
    std::printf("y%d pooled violation %.4f, worst step %.4f\n", m.y_constrained[c], m.y_violation_pooled[c],
                m.y_violation.row(c).maxCoeff());
  std::printf("branches measured %d, backup %d, fallback %d; decay worst z %.3f; V > J_tilde %d\n",
              m.branch_measured, m.branch_backup, m.branch_fallback, m.decay_worst_z, m.selection_violations);
  for (const auto& log : logs)
    if (log.aborted) std::cerr << "run " << log.run << " aborted: " << log.error << "\n";
  return 0;
}

int cmd_validate(const Args& a) {
  const auto checks = validation_suite(a.quick);
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%-4s %-32s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.pass;
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven stochastic predictive control benchmark"};
  app.require_subcommand(1);
  Args a;
  auto common = [&](CLI::App* s) {
    s->add_option("--config", a.config, "built-in name (aircraft, scalar) or YAML file")->capture_default_str();
    s->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
    s->add_option("--data-dir", a.data_dir, "where stored data and ingredients are read (default: out-dir)");
    s->add_option("--seed", a.seed, "offline data seed");
    s->add_option("--run-seed", a.run_seed, "closed-loop base seed; run r uses run-seed + r");
    s->add_option("--runs", a.runs, "Monte Carlo runs");
    s->add_option("--steps", a.steps, "closed-loop steps per run");
    s->add_option("--threads", a.threads, "worker threads (0: all cores)");
    s->add_option("--norm-convention", a.norm, "stage cost convention")->check(CLI::IsMember({"plain", "half"}));
  };
  auto* collect = app.add_subcommand("collect", "offline experiments to CSV");
  auto* synth = app.add_subcommand("synth", "terminal ingredients with a validation report");
  auto* simulate = app.add_subcommand("simulate", "one closed-loop run");
  auto* mc = app.add_subcommand("montecarlo", "closed-loop batch, metrics and figure data");
  auto* validate = app.add_subcommand("validate", "property suite with a pass/fail table");
  for (auto* s : {collect, synth, simulate, mc}) common(s);
  simulate->add_flag("--verbose", a.verbose, "solver trace");
  validate->add_flag("--quick", a.quick, "smaller sample sizes");
  CLI11_PARSE(app, argc, argv);

  try {
    if (*collect) return cmd_collect(a);
    if (*synth) return cmd_synth(a);
    if (*simulate) return cmd_simulate(a);
    if (*mc) return cmd_montecarlo(a);
    if (*validate) return cmd_validate(a);
  } catch (const AssumptionError& e) {
    std::cerr << "assumption failed: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
