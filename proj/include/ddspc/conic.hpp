#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace ddspc {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class ConeKind { Zero, NonNeg, SecondOrder, PSD };

// A x + b in K. SecondOrder rows are (t, x) with t >= |x|. PSD rows hold the
// lower triangle of a symmetric matrix column by column (unscaled entries).
struct ConeBlock {
  ConeKind kind = ConeKind::Zero;
  SparseMatrix A;
  Eigen::VectorXd b;
  int order = 0;  // matrix order for PSD blocks
  std::string label;

  Eigen::Index rows() const { return A.rows(); }
};

// minimize 1/2 x^T P x + q^T x + constant subject to the cone blocks.
struct ConicProgram {
  int n_vars = 0;
  SparseMatrix P;  // symmetric PSD, full storage
  Eigen::VectorXd q;
  double constant = 0.0;
  std::vector<ConeBlock> blocks;

  void validate() const;
  double objective(const Eigen::VectorXd& x) const;
};

// One row of an affine map: sum coeff * x[index] + constant.
struct AffineRow {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffineRow& add(int index, double coeff) {
    if (coeff != 0.0) terms.emplace_back(index, coeff);
    return *this;
  }
  static AffineRow constant_row(double c) {
    AffineRow r;
    r.constant = c;
    return r;
  }
};

class ProgramBuilder {
 public:
  int add_variables(int n);
  int n_vars() const { return n_vars_; }

  void add_block(ConeKind kind, const std::vector<AffineRow>& rows, std::string label = {}, int order = 0);
  void add_psd(int order, const std::vector<AffineRow>& lower_tri, std::string label = {}) {
    add_block(ConeKind::PSD, lower_tri, std::move(label), order);
  }
  // Adds coeff * x_i x_j to 1/2 x^T P x, i.e. P(i,j) += coeff and P(j,i) += coeff.
  void add_quadratic(int i, int j, double coeff);
  // 1/2 x_S^T M x_S for a symmetric block on the index set S.
  void add_quadratic_block(const std::vector<int>& idx, const Eigen::MatrixXd& M);
  void add_linear(int i, double coeff);
  void add_constant(double c) { constant_ += c; }

  ConicProgram build() const;

 private:
  int n_vars_ = 0;
  std::vector<Triplet> P_;
  std::vector<std::pair<int, double>> q_;
  double constant_ = 0.0;
  struct PendingBlock {
    ConeKind kind;
    std::vector<AffineRow> rows;
    std::string label;
    int order;
  };
  std::vector<PendingBlock> blocks_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };
const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd primal;  // empty unless Optimal
  double objective_value = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

struct SolverSettings {
  double tol = 1e-8;        // feasibility tolerance (relative to max(1, |b|_inf))
  double gap_tol = 1e-9;    // relative duality gap
  int max_iterations = 150;
  bool verbose = false;
};

struct PresolveData;

// Reuses presolve work across programs that differ only in b and q.
class SolverWorkspace {
 public:
  SolverWorkspace();
  ~SolverWorkspace();
  SolverWorkspace(SolverWorkspace&&) noexcept;
  SolverWorkspace& operator=(SolverWorkspace&&) noexcept;

  std::uint64_t fingerprint = 0;
  std::shared_ptr<PresolveData> presolve;
  int hits = 0;
  int misses = 0;
};

Solution solve(const ConicProgram& p, const SolverSettings& settings = {}, SolverWorkspace* ws = nullptr);

// Distance of each block's A x + b to its cone (0 when inside).
std::vector<double> block_residuals(const ConicProgram& p, const Eigen::VectorXd& x);

// Plain text: header, then "P i j v", "q i v", and per block "block kind rows order label"
// followed by "A i j v" and "b i v" triplets.
void dump_program(const ConicProgram& p, std::ostream& os);

}  // namespace ddspc
