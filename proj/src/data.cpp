#include "ddspc/data.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "ddspc/linalg.hpp"

namespace ddspc {

bool pe_order_check(const Eigen::MatrixXd& seq, int order) {
  if (order < 1 || order > seq.cols()) return false;
  return has_full_row_rank(hankel(seq, order));
}

HankelSet build_ocp_hankels(const Trajectory& traj, int N, int T_ini, std::optional<int> n_x) {
  traj.validate(T_ini);
  const int T = int(traj.length());
  if (N < 1 || T_ini < 1) throw DimensionError("build_ocp_hankels: N and T_ini must be positive");
  if (T < N + T_ini) throw AssumptionError("build_ocp_hankels: need T >= N + T_ini samples");
  if (n_x) {
    Eigen::MatrixXd uw(traj.u.rows() + traj.w.rows(), T);
    uw << traj.u, traj.w;
    const int order = required_pe_order(*n_x, N, T_ini);
    if (!pe_order_check(uw, order))
      throw AssumptionError("build_ocp_hankels: (u, w) data not persistently exciting of order " +
                            std::to_string(order));
  }
  HankelSet hs;
  hs.N = N;
  hs.T_ini = T_ini;
  hs.Hu = hankel(traj.u, N + T_ini);
  hs.Hy = hankel(traj.y, N + T_ini);
  hs.Hw = hankel(traj.w.rightCols(T - T_ini), N);
  hs.g_dim = int(hs.Hu.cols());
  return hs;
}

DesignMatrices build_design_matrices(const Trajectory& traj) {
  const int l = int(traj.u_prefix.cols());
  if (l < 1) throw DimensionError("build_design_matrices: prefix missing");
  traj.validate(l);
  const int T = int(traj.length());
  if (T < 1) throw DimensionError("build_design_matrices: empty trajectory");
  const Eigen::Index n_u = traj.u.rows(), n_y = traj.y.rows();
  Eigen::MatrixXd up(n_u, l + T - 1), yp(n_y, l + T - 1);
  up << traj.u_prefix, traj.u.leftCols(T - 1);
  yp << traj.y_prefix, traj.y.leftCols(T - 1);
  DesignMatrices dm;
  dm.T_ini = l;
  dm.Z_dd.resize(l * (n_u + n_y), T);
  dm.Z_dd << hankel(up, l), hankel(yp, l);
  dm.U_dd = traj.u;
  dm.Y_dd = traj.y;
  dm.W_dd = traj.w;
  return dm;
}

bool rank_assumption_check(const DesignMatrices& dm) {
  Eigen::MatrixXd ZU(dm.Z_dd.rows() + dm.U_dd.rows(), dm.Z_dd.cols());
  ZU << dm.Z_dd, dm.U_dd;
  return has_full_row_rank(ZU);
}

Trajectory collect_data(const ArxModel& model, int T, const InputBox& box, const Eigen::VectorXd& z_ini,
                        std::mt19937_64& rng, std::optional<int> pe_order, int max_attempts) {
  model.validate();
  require_dims(box.lo.size() == model.n_u() && box.hi.size() == model.n_u(), "collect_data: box size != n_u");
  if (T < 1) throw DimensionError("collect_data: T must be positive");
  if (pe_order && T < *pe_order) throw AssumptionError("collect_data: T shorter than the PE order");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    Eigen::MatrixXd U(model.n_u(), T), W(model.n_w(), T);
    for (int k = 0; k < T; ++k) {
      for (int i = 0; i < model.n_u(); ++i) U(i, k) = box.lo(i) + (box.hi(i) - box.lo(i)) * unit(rng);
      W.col(k) = sample_disturbance(model, rng);
    }
    if (pe_order) {
      Eigen::MatrixXd uw(model.n_u() + model.n_w(), T);
      uw << U, W;
      if (!pe_order_check(uw, *pe_order)) continue;
    }
    return simulate(model, z_ini, U, W);
  }
  throw AssumptionError("collect_data: no persistently exciting record after " + std::to_string(max_attempts) +
                        " attempts");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error("trajectory csv: bad number '" + s + "'");
  return v;
}

void write_table(const std::string& path, const std::vector<std::pair<std::string, const Eigen::MatrixXd*>>& cols) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  bool first = true;
  Eigen::Index T = cols.empty() ? 0 : cols.front().second->cols();
  for (auto& [name, M] : cols)
    for (Eigen::Index i = 0; i < M->rows(); ++i) {
      f << (first ? "" : ",") << name << i;
      first = false;
    }
  f << '\n';
  for (Eigen::Index t = 0; t < T; ++t) {
    first = true;
    for (auto& [name, M] : cols)
      for (Eigen::Index i = 0; i < M->rows(); ++i) {
        f << (first ? "" : ",") << format_double((*M)(i, t));
        first = false;
      }
    f << '\n';
  }
}

// Returns rows x columns and the header names.
std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_table(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
  };
  if (!std::getline(f, line)) throw std::runtime_error(path + ": missing header");
  header = split(line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) throw std::runtime_error(path + ": ragged row");
    std::vector<double> r;
    for (auto& c : cells) r.push_back(parse_double(c));
    rows.push_back(std::move(r));
  }
  return {header, rows};
}

int count_prefix(const std::vector<std::string>& header, char p) {
  int n = 0;
  for (auto& h : header)
    if (!h.empty() && h[0] == p) ++n;
  return n;
}

}  // namespace

void write_trajectory_csv(const Trajectory& traj, const std::string& path, const std::string& prefix_path) {
  write_table(path, {{"u", &traj.u}, {"w", &traj.w}, {"y", &traj.y}});
  write_table(prefix_path, {{"u", &traj.u_prefix}, {"y", &traj.y_prefix}});
}

Trajectory read_trajectory_csv(const std::string& path, const std::string& prefix_path) {
  auto [h, rows] = read_table(path);
  const int nu = count_prefix(h, 'u'), nw = count_prefix(h, 'w'), ny = count_prefix(h, 'y');
  Trajectory tr;
  const Eigen::Index T = Eigen::Index(rows.size());
  tr.u.resize(nu, T);
  tr.w.resize(nw, T);
  tr.y.resize(ny, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int i = 0; i < nu; ++i) tr.u(i, t) = rows[t][i];
    for (int i = 0; i < nw; ++i) tr.w(i, t) = rows[t][nu + i];
    for (int i = 0; i < ny; ++i) tr.y(i, t) = rows[t][nu + nw + i];
  }
  auto [hp, prow] = read_table(prefix_path);
  require_dims(count_prefix(hp, 'u') == nu && count_prefix(hp, 'y') == ny, "prefix csv: column mismatch");
  const Eigen::Index l = Eigen::Index(prow.size());
  tr.u_prefix.resize(nu, l);
  tr.y_prefix.resize(ny, l);
  for (Eigen::Index t = 0; t < l; ++t) {
    for (int i = 0; i < nu; ++i) tr.u_prefix(i, t) = prow[t][i];
    for (int i = 0; i < ny; ++i) tr.y_prefix(i, t) = prow[t][nu + i];
  }
  return tr;
}

}  // namespace ddspc
