#include "ddspc/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace ddspc {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Branch parse_branch(const std::string& s) {
  if (s == "measured") return Branch::Measured;
  if (s == "backup") return Branch::Backup;
  if (s == "measured_fallback") return Branch::MeasuredFallback;
  throw std::runtime_error("run log: unknown branch " + s);
}

// JSON has no infinity; write null.
nlohmann::json jnum(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_run_log_csv(const RunLog& log, NormConvention conv, const std::string& path) {
  auto f = open_out(path);
  const int nu = log.records.empty() ? 0 : int(log.records[0].u.size());
  const int ny = log.records.empty() ? 0 : int(log.records[0].y.size());
  const int nw = log.records.empty() ? 0 : int(log.records[0].w.size());
  f << "k,branch,V_Nk,J_tilde,V_measured,V_backup,stage_cost,stage_plain,stage_half";
  for (int i = 0; i < nu; ++i) f << ",u" << i;
  for (int i = 0; i < ny; ++i) f << ",y" << i;
  for (int i = 0; i < nw; ++i) f << ",w" << i;
  f << ",germ_residual,iterations\n";
  for (const auto& r : log.records) {
    f << r.k << ',' << to_string(r.branch) << ',' << num(r.V) << ',' << num(r.J_tilde) << ',' << num(r.V_measured)
      << ',' << num(r.V_backup) << ',' << num(conv == NormConvention::Half ? r.stage_half : r.stage_plain) << ','
      << num(r.stage_plain) << ',' << num(r.stage_half);
    for (int i = 0; i < nu; ++i) f << ',' << num(r.u(i));
    for (int i = 0; i < ny; ++i) f << ',' << num(r.y(i));
    for (int i = 0; i < nw; ++i) f << ',' << num(r.w(i));
    f << ',' << num(r.germ_residual) << ',' << r.iterations << '\n';
  }
  if (log.aborted) f << "# aborted: " << log.error << '\n';
}

RunLog read_run_log_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  std::getline(f, line);
  const auto head = split(line);
  auto count = [&](char c) {
    return int(std::count_if(head.begin(), head.end(), [&](const std::string& h) {
      return h.size() > 1 && h[0] == c && std::isdigit(static_cast<unsigned char>(h[1]));
    }));
  };
  const int nu = count('u'), ny = count('y'), nw = count('w');
  RunLog log;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      log.aborted = true;
      log.error = line.substr(std::min<std::size_t>(line.size(), 11));
      continue;
    }
    const auto c = split(line);
    if (int(c.size()) != 9 + nu + ny + nw + 2) throw std::runtime_error("run log: bad row in " + path);
    ClosedLoopRecord r;
    r.k = std::stoi(c[0]);
    r.branch = parse_branch(c[1]);
    r.V = parse_num(c[2]);
    r.J_tilde = parse_num(c[3]);
    r.V_measured = parse_num(c[4]);
    r.V_backup = parse_num(c[5]);
    r.stage_plain = parse_num(c[7]);
    r.stage_half = parse_num(c[8]);
    r.u.resize(nu);
    r.y.resize(ny);
    r.w.resize(nw);
    int j = 9;
    for (int i = 0; i < nu; ++i) r.u(i) = parse_num(c[j++]);
    for (int i = 0; i < ny; ++i) r.y(i) = parse_num(c[j++]);
    for (int i = 0; i < nw; ++i) r.w(i) = parse_num(c[j++]);
    r.germ_residual = parse_num(c[j++]);
    r.iterations = std::stoi(c[j]);
    log.records.push_back(std::move(r));
  }
  return log;
}

void write_metrics_json(const MetricsReport& m, const std::string& path) {
  nlohmann::json j;
  j["alpha"] = m.alpha;
  j["norm"] = to_string(m.norm);
  j["runs"] = m.runs;
  j["completed"] = m.completed;
  j["aborted"] = m.aborted;
  j["steps"] = m.steps;
  j["average_cost"] = m.average_cost;
  j["average_cost_by_step"] = m.average_cost_by_step;
  j["run_average_cost"] = m.run_average_cost;
  j["y_constrained"] = m.y_constrained;
  nlohmann::json v = nlohmann::json::array();
  for (Eigen::Index c = 0; c < m.y_violation.rows(); ++c) {
    std::vector<double> row(m.y_violation.cols());
    for (Eigen::Index k = 0; k < m.y_violation.cols(); ++k) row[k] = m.y_violation(c, k);
    v.push_back(row);
  }
  j["y_violation"] = v;
  j["y_violation_pooled"] = m.y_violation_pooled;
  j["branches"] = {{"measured", m.branch_measured}, {"backup", m.branch_backup}, {"measured_fallback", m.branch_fallback}};
  nlohmann::json dm = nlohmann::json::array(), ds = nlohmann::json::array();
  for (double x : m.decay_mean) dm.push_back(jnum(x));
  for (double x : m.decay_se) ds.push_back(jnum(x));
  j["decay_mean"] = dm;
  j["decay_se"] = ds;
  j["decay_worst_z"] = jnum(m.decay_worst_z);
  j["selection_violations"] = m.selection_violations;
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

SynthesisSummary summarize_synthesis(const BenchmarkConfig& cfg, const TerminalIngredients& ti,
                                     const SynthesisReport& rep) {
  SynthesisSummary s;
  s.report = rep;
  const ExtendedMatrices em = extended_matrices(cfg.model);
  const Eigen::MatrixXd Qt = em.E_tilde * cfg.Q * em.E_tilde.transpose();
  const Eigen::MatrixXd Ks = riccati_oracle(em, Qt, cfg.R);
  const double nk = Ks.jacobiSvd().singularValues()(0);
  const double nd = (ti.K - Ks).jacobiSvd().singularValues()(0);
  s.K_rel_error = nd * nd / (nk * nk);
  s.alpha_plain = alpha_bound(cfg, ti, NormConvention::Plain);
  s.alpha_half = alpha_bound(cfg, ti, NormConvention::Half);
  s.gamma = ti.gamma;
  s.eps_z = ti.eps_z;
  return s;
}

void write_synthesis_json(const SynthesisSummary& s, const std::string& path) {
  const auto& r = s.report;
  nlohmann::json j;
  j["rank_ok"] = r.rank_ok;
  j["K_rel_error"] = s.K_rel_error;
  j["spectral_radius"] = r.spectral_radius;
  j["residual_P"] = r.residual_P;
  j["residual_Gamma"] = r.residual_Gamma;
  j["P_min_eig_ratio"] = r.P_min_eig_ratio;
  j["sdp_status"] = r.sdp_status;
  j["sdp_objective"] = r.sdp_objective;
  j["full_certified"] = r.full_certified;
  j["gamma"] = s.gamma;
  j["eps_z"] = s.eps_z;
  j["alpha_plain"] = s.alpha_plain;
  j["alpha_half"] = s.alpha_half;
  j["warning"] = r.warning;
  j["seconds"] = r.seconds;
  auto f = open_out(path);
  f << j.dump(2) << '\n';
}

void write_figure_csvs(const std::vector<RunLog>& logs, const BenchmarkConfig& cfg, const MetricsReport& m,
                       const std::string& out_dir, int bins) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const int nu = cfg.model.n_u(), ny = cfg.model.n_y();
  {
    auto f = open_out((fs::path(out_dir) / "trajectories.csv").string());
    f << "run,k";
    for (int i = 0; i < ny; ++i) f << ",y" << i;
    for (int i = 0; i < nu; ++i) f << ",u" << i;
    f << '\n';
    for (const auto& log : logs)
      for (const auto& r : log.records) {
        f << log.run << ',' << r.k;
        for (int i = 0; i < ny; ++i) f << ',' << num(r.y(i));
        for (int i = 0; i < nu; ++i) f << ',' << num(r.u(i));
        f << '\n';
      }
  }
  {
    auto f = open_out((fs::path(out_dir) / "average_cost.csv").string());
    f << "k,average_stage_cost,running_average,alpha\n";
    double run = 0.0;
    for (std::size_t k = 0; k < m.average_cost_by_step.size(); ++k) {
      run += m.average_cost_by_step[k];
      f << k << ',' << num(m.average_cost_by_step[k]) << ',' << num(run / double(k + 1)) << ',' << num(m.alpha)
        << '\n';
    }
  }
  {
    auto f = open_out((fs::path(out_dir) / "violation.csv").string());
    f << 'k';
    for (int c : m.y_constrained) f << ",y" << c;
    f << '\n';
    for (Eigen::Index k = 0; k < m.y_violation.cols(); ++k) {
      f << k;
      for (Eigen::Index c = 0; c < m.y_violation.rows(); ++c) f << ',' << num(m.y_violation(c, k));
      f << '\n';
    }
  }
  // Late-time output distribution: pooled over the second half of each run.
  for (int i = 0; i < ny; ++i) {
    std::vector<double> v;
    for (const auto& log : logs) {
      if (log.aborted) continue;
      for (const auto& r : log.records)
        if (2 * r.k >= cfg.steps) v.push_back(r.y(i));
    }
    auto f = open_out((fs::path(out_dir) / ("y" + std::to_string(i) + "_histogram.csv")).string());
    f << "bin_lo,bin_hi,count,density\n";
    if (v.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / bins;
    std::vector<int> cnt(bins, 0);
    for (double x : v) ++cnt[std::min(bins - 1, int((x - lo) / width))];
    for (int b = 0; b < bins; ++b)
      f << num(lo + b * width) << ',' << num(lo + (b + 1) * width) << ',' << cnt[b] << ','
        << num(cnt[b] / (double(v.size()) * width)) << '\n';
  }
}

}  // namespace ddspc
