#pragma once

#include <string>
#include <vector>

#include "ddspc/benchmark.hpp"

namespace ddspc {

// One row per step; doubles written with 17 significant digits so the
// metrics can be recomputed from the files exactly.
void write_run_log_csv(const RunLog& log, NormConvention conv, const std::string& path);
RunLog read_run_log_csv(const std::string& path);

void write_metrics_json(const MetricsReport& m, const std::string& path);

struct SynthesisSummary {
  SynthesisReport report;
  double K_rel_error = 0.0;  // ||K - K*||_2^2 / ||K*||_2^2
  double alpha_plain = 0.0, alpha_half = 0.0;
  double gamma = 0.0, eps_z = 0.0;
};

SynthesisSummary summarize_synthesis(const BenchmarkConfig& cfg, const TerminalIngredients& ti,
                                     const SynthesisReport& rep);
void write_synthesis_json(const SynthesisSummary& s, const std::string& path);

// trajectories.csv, average_cost.csv, violation.csv and one y<i>_histogram.csv
// per output over the second half of the runs.
void write_figure_csvs(const std::vector<RunLog>& logs, const BenchmarkConfig& cfg, const MetricsReport& m,
                       const std::string& out_dir, int bins = 30);

}  // namespace ddspc
