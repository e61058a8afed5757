#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

#include "conic/cones.hpp"
#include "ddspc/conic.hpp"

namespace ddspc::detail {

// minimize c^T x subject to G x + s = h, s in K(dims). Holds everything that
// depends on G only, so it can be cached across right-hand sides.
struct IpmStructure {
  ConeDims dims;
  SparseMatrix G;                 // equilibrated
  Eigen::VectorXd col_scale;      // x = col_scale .* x_scaled
  Eigen::VectorXd row_scale;      // s_scaled = row_scale .* s
  SparseMatrix G_lp;              // rows of the orthant
  std::vector<SparseMatrix> G_soc;
  std::vector<SparseMatrix> GtG_soc;
  std::vector<Eigen::MatrixXd> G_psd;  // dense svec rows x n

  void build(const ConeDims& d, const SparseMatrix& G_raw, bool equilibrate = true);
};

enum class IpmStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, Numerical };

struct IpmResult {
  IpmStatus status = IpmStatus::Numerical;
  Eigen::VectorXd x, s, z;
  int iterations = 0;
  double pres = 0, dres = 0, gap = 0;
};

IpmResult ipm_solve(const IpmStructure& st, const Eigen::VectorXd& h, const Eigen::VectorXd& c,
                    const SolverSettings& settings);

}  // namespace ddspc::detail
