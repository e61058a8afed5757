#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddspc/benchmark.hpp"

namespace ddspc {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Same OCP written directly on the model: free input coefficients, outputs
// propagated through Phi and D. Independent of the Hankel assembly.
struct ModelOcpResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  double cost = 0.0;
  std::vector<Eigen::MatrixXd> u, y;  // steps 0..N-1, n x L
};
ModelOcpResult solve_model_ocp(const ArxModel& model, const OcpSpec& spec, const InitialCondition& init,
                               const SolverSettings& settings = {});

struct OfflineSetup {
  BenchmarkConfig cfg;
  OfflineData data;
  TerminalIngredients ti;
  SynthesisReport report;
  OcpSpec spec;
};
OfflineSetup offline_setup(const BenchmarkConfig& cfg);

// Hankel OCP cost vs model OCP cost on random measured and backup initial
// conditions of the scalar system; instances infeasible for both are redrawn.
Check check_oracle_equivalence(int instances, std::uint64_t seed, double tol = 1e-5);

// Stein residuals of P and Gamma recomputed from K, H, M; Schur A_K; gamma > 0.
Check check_synthesis_residuals(const BenchmarkConfig& cfg, const TerminalIngredients& ti, double tol = 1e-8);

// Sample mean and variance of a propagated PCE vs its coefficient moments.
Check check_pce_moments(int samples, std::uint64_t seed);

// Germ sampling of a scalar OCP solution whose lower output bound is active:
// per-step violation frequency <= eps_y + 3 standard errors. sigma_y <= 0
// means chance_sigma(eps_y).
Check check_chance_conservatism(const OfflineSetup& scalar, int samples, std::uint64_t seed, double sigma_y = 0.0);

struct FeasibilityStress {
  int runs = 0, steps = 0, aborted = 0, backup_failures = 0;
  std::vector<std::string> errors;
};
FeasibilityStress run_feasibility_stress(const OfflineSetup& setup, int runs, int steps, double noise_scale);
Check check_recursive_feasibility(const OfflineSetup& setup, int runs, int steps, double noise_scale);

std::vector<Check> validation_suite(bool quick);

}  // namespace ddspc
