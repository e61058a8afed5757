#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "ddspc/benchmark.hpp"

namespace ddspc {

namespace {

Eigen::MatrixXd read_matrix(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw DimensionError("config: " + key + " must be a list of rows");
  if (n.size() == 0) return {};
  // Flat list: a column vector.
  if (!n[0].IsSequence()) {
    Eigen::MatrixXd m(n.size(), 1);
    for (std::size_t i = 0; i < n.size(); ++i) m(i, 0) = n[i].as<double>();
    return m;
  }
  const std::size_t cols = n[0].size();
  Eigen::MatrixXd m(n.size(), cols);
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i].size() != cols) throw DimensionError("config: ragged rows in " + key);
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = n[i][j].as<double>();
  }
  return m;
}

Eigen::VectorXd read_vector(const YAML::Node& n, const std::string& key) {
  Eigen::MatrixXd m = read_matrix(n, key);
  if (m.cols() > 1) throw DimensionError("config: " + key + " must be a flat list");
  return m.col(0);
}

template <class Box_>
Box_ read_box(const YAML::Node& n, const std::string& key) {
  if (!n["lo"] || !n["hi"]) throw DimensionError("config: " + key + " needs lo and hi");
  return Box_{read_vector(n["lo"], key + ".lo"), read_vector(n["hi"], key + ".hi")};
}

EpsilonPolicy parse_policy(const std::string& s) {
  if (s == "full") return EpsilonPolicy::Full;
  if (s == "mean_only") return EpsilonPolicy::MeanOnly;
  if (s == "full_then_mean_only") return EpsilonPolicy::FullThenMeanOnly;
  throw DimensionError("config: unknown eps_policy '" + s + "'");
}

const char* policy_name(EpsilonPolicy p) {
  switch (p) {
    case EpsilonPolicy::Full: return "full";
    case EpsilonPolicy::MeanOnly: return "mean_only";
    case EpsilonPolicy::FullThenMeanOnly: return "full_then_mean_only";
  }
  return "?";
}

void apply(const YAML::Node& y, BenchmarkConfig& c) {
  if (y["name"]) c.name = y["name"].as<std::string>();
  if (const auto m = y["model"]) {
    if (m["Phi"]) c.model.Phi = read_matrix(m["Phi"], "model.Phi");
    if (m["D"]) c.model.D = read_matrix(m["D"], "model.D");
    if (m["T_ini"]) c.model.T_ini = m["T_ini"].as<int>();
    if (m["Sigma_W"]) c.model.Sigma_W = read_matrix(m["Sigma_W"], "model.Sigma_W");
    if (m["n_x"]) c.model.n_x = m["n_x"].as<int>();
  }
  if (y["N"]) c.N = y["N"].as<int>();
  if (y["Q"]) c.Q = read_matrix(y["Q"], "Q");
  if (y["R"]) c.R = read_matrix(y["R"], "R");
  if (y["eps_u"]) c.eps_u = y["eps_u"].as<double>();
  if (y["eps_y"]) c.eps_y = y["eps_y"].as<double>();
  // null clears an inherited override
  if (y["sigma_u"]) c.sigma_u = y["sigma_u"].IsNull() ? std::nullopt : std::optional(y["sigma_u"].as<double>());
  if (y["sigma_y"]) c.sigma_y = y["sigma_y"].IsNull() ? std::nullopt : std::optional(y["sigma_y"].as<double>());
  if (y["u_box"]) c.u_box = read_box<Box>(y["u_box"], "u_box");
  if (y["y_box"]) c.y_box = read_box<Box>(y["y_box"], "y_box");
  if (y["L_ini"]) c.L_ini = y["L_ini"].as<int>();
  if (y["L_w"]) c.L_w = y["L_w"].as<int>();
  if (y["T_synth"]) c.T_synth = y["T_synth"].as<int>();
  if (y["T_ocp"]) c.T_ocp = y["T_ocp"].as<int>();
  if (y["data_box"]) c.data_box = read_box<InputBox>(y["data_box"], "data_box");
  if (y["z_ini_data"]) c.z_ini_data = read_vector(y["z_ini_data"], "z_ini_data");
  if (y["z_ini"]) c.z_ini = read_vector(y["z_ini"], "z_ini");
  if (y["seed"]) c.seed = y["seed"].as<std::uint64_t>();
  if (y["run_seed"]) c.run_seed = y["run_seed"].as<std::uint64_t>();
  if (y["runs"]) c.runs = y["runs"].as<int>();
  if (y["steps"]) c.steps = y["steps"].as<int>();
  if (y["noise_scale"]) c.noise_scale = y["noise_scale"].as<double>();
  if (y["norm"]) c.norm = parse_norm_convention(y["norm"].as<std::string>());
  if (y["eps_policy"]) c.eps_policy = parse_policy(y["eps_policy"].as<std::string>());
  if (const auto s = y["solver"]) {
    if (s["tol"]) c.solver.tol = s["tol"].as<double>();
    if (s["gap_tol"]) c.solver.gap_tol = s["gap_tol"].as<double>();
    if (s["max_iterations"]) c.solver.max_iterations = s["max_iterations"].as<int>();
  }
  if (y["threads"]) c.threads = y["threads"].as<int>();
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  char buf[32];
  return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
}

void emit_vector(YAML::Emitter& e, const std::string& key, const Eigen::VectorXd& v) {
  e << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    e << num(v(i));
  }
  e << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& e, const std::string& key, const Eigen::MatrixXd& m) {
  e << YAML::Key << key << YAML::Value << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    e << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index j = 0; j < m.cols(); ++j) e << num(m(i, j));
    e << YAML::EndSeq;
  }
  e << YAML::EndSeq;
}

template <class Box_>
void emit_box(YAML::Emitter& e, const std::string& key, const Box_& b) {
  e << YAML::Key << key << YAML::Value << YAML::BeginMap;
  emit_vector(e, "lo", b.lo);
  emit_vector(e, "hi", b.hi);
  e << YAML::EndMap;
}

}  // namespace

BenchmarkConfig load_config(const std::string& name_or_path) {
  if (name_or_path == "aircraft") return aircraft_config();
  if (name_or_path == "scalar") return scalar_config();
  if (!std::filesystem::exists(name_or_path))
    throw DimensionError("config: '" + name_or_path + "' is neither a built-in name nor a file");
  YAML::Node y;
  try {
    y = YAML::LoadFile(name_or_path);
  } catch (const YAML::Exception& e) {
    throw DimensionError("config: " + name_or_path + ": " + e.what());
  }
  // `base:` starts from a built-in and overrides the listed keys.
  BenchmarkConfig c;
  if (y["base"]) c = load_config(y["base"].as<std::string>());
  try {
    apply(y, c);
  } catch (const YAML::Exception& e) {
    throw DimensionError("config: " + name_or_path + ": " + e.what());
  }
  c.validate();
  return c;
}

void save_config(const BenchmarkConfig& c, const std::string& path) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  emit_matrix(e, "Phi", c.model.Phi);
  emit_matrix(e, "D", c.model.D);
  e << YAML::Key << "T_ini" << YAML::Value << c.model.T_ini;
  emit_matrix(e, "Sigma_W", c.model.Sigma_W);
  e << YAML::Key << "n_x" << YAML::Value << c.model.n_x;
  e << YAML::EndMap;
  e << YAML::Key << "N" << YAML::Value << c.N;
  emit_matrix(e, "Q", c.Q);
  emit_matrix(e, "R", c.R);
  e << YAML::Key << "eps_u" << YAML::Value << num(c.eps_u);
  e << YAML::Key << "eps_y" << YAML::Value << num(c.eps_y);
  if (c.sigma_u) e << YAML::Key << "sigma_u" << YAML::Value << num(*c.sigma_u);
  if (c.sigma_y) e << YAML::Key << "sigma_y" << YAML::Value << num(*c.sigma_y);
  emit_box(e, "u_box", c.u_box);
  emit_box(e, "y_box", c.y_box);
  e << YAML::Key << "L_ini" << YAML::Value << c.L_ini;
  e << YAML::Key << "L_w" << YAML::Value << c.L_w;
  e << YAML::Key << "T_synth" << YAML::Value << c.T_synth;
  e << YAML::Key << "T_ocp" << YAML::Value << c.T_ocp;
  emit_box(e, "data_box", c.data_box);
  emit_vector(e, "z_ini_data", c.z_ini_data);
  emit_vector(e, "z_ini", c.z_ini);
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "run_seed" << YAML::Value << c.run_seed;
  e << YAML::Key << "runs" << YAML::Value << c.runs;
  e << YAML::Key << "steps" << YAML::Value << c.steps;
  e << YAML::Key << "noise_scale" << YAML::Value << num(c.noise_scale);
  e << YAML::Key << "norm" << YAML::Value << to_string(c.norm);
  e << YAML::Key << "eps_policy" << YAML::Value << policy_name(c.eps_policy);
  e << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "tol" << YAML::Value << num(c.solver.tol);
  e << YAML::Key << "gap_tol" << YAML::Value << num(c.solver.gap_tol);
  e << YAML::Key << "max_iterations" << YAML::Value << c.solver.max_iterations;
  e << YAML::EndMap;
  e << YAML::Key << "threads" << YAML::Value << c.threads;
  e << YAML::EndMap;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_config: cannot write " + path);
  f << e.c_str() << "\n";
}

}  // namespace ddspc
