#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

#include "conic/ipm.hpp"
#include "ddspc/conic.hpp"

namespace ddspc {

// Everything derived from (P, block matrices) alone. Per solve only b and q
// enter: x = x0(b) + T phi with phi the reduced variables of the IPM.
struct PresolveData {
  struct Component {
    std::vector<int> vars;
    std::vector<int> eq_rows;      // indices into the stacked equality rows
    Eigen::VectorXd row_scale;     // 1 / |row|
    Eigen::MatrixXd E;             // normalized equality rows on vars
    Eigen::MatrixXd pinv;          // least-squares solve for x0 on vars
    Eigen::MatrixXd T;             // kept directions, vars x r
    Eigen::MatrixXd dropped;       // nullspace directions irrelevant to cones and P
    int phi_offset = 0;
  };
  int n = 0;
  int n_phi = 0;
  std::vector<Component> comps;
  std::vector<int> comp_of_var;
  // Stacked equality rows: source block and row, and rows with no variables.
  std::vector<std::pair<int, int>> eq_source;
  std::vector<int> empty_eq_rows;
  // IPM rows as (block, row, multiplier) with the multiplier from svec scaling.
  struct RowRef {
    int block, row;
    double mult;
  };
  std::vector<RowRef> cone_rows;
  SparseMatrix MA;               // multiplier * A for cone rows, m_cone x n
  SparseMatrix T;                // n x n_phi
  int epi_rows = 0;              // rows of the epigraph factor F (0: no quadratic)
  int t_index = -1;              // epigraph variable in IPM space
  detail::IpmStructure ipm;
};

std::uint64_t program_fingerprint(const ConicProgram& p);

// Throws DimensionError on an indefinite P.
PresolveData build_presolve(const ConicProgram& p);

}  // namespace ddspc
