#include <Eigen/Eigenvalues>

#include <ostream>
#include <stdexcept>

#include "ddspc/conic.hpp"
#include "ddspc/errors.hpp"

namespace ddspc {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
  }
  return "?";
}

void ConicProgram::validate() const {
  require_dims(n_vars >= 0, "ConicProgram: negative variable count");
  require_dims(P.rows() == n_vars && P.cols() == n_vars, "ConicProgram: P must be n_vars x n_vars");
  require_dims(q.size() == n_vars, "ConicProgram: q must have n_vars entries");
  for (const auto& b : blocks) {
    require_dims(b.A.cols() == n_vars && b.A.rows() == b.b.size(), "ConicProgram: block '" + b.label + "' shape");
    if (b.kind == ConeKind::SecondOrder) require_dims(b.rows() >= 1, "ConicProgram: empty second-order block");
    if (b.kind == ConeKind::PSD)
      require_dims(b.order >= 1 && b.rows() == b.order * (b.order + 1) / 2,
                   "ConicProgram: PSD block '" + b.label + "' size != order(order+1)/2");
  }
}

double ConicProgram::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x) + constant;
}

int ProgramBuilder::add_variables(int n) {
  if (n < 0) throw DimensionError("ProgramBuilder: negative variable count");
  const int start = n_vars_;
  n_vars_ += n;
  return start;
}

void ProgramBuilder::add_block(ConeKind kind, const std::vector<AffineRow>& rows, std::string label, int order) {
  if (rows.empty()) return;
  for (const auto& r : rows)
    for (auto [i, c] : r.terms) require_dims(i >= 0 && i < n_vars_, "ProgramBuilder: variable index out of range");
  blocks_.push_back({kind, rows, std::move(label), order});
}

void ProgramBuilder::add_quadratic(int i, int j, double coeff) {
  require_dims(i >= 0 && i < n_vars_ && j >= 0 && j < n_vars_, "ProgramBuilder: quadratic index out of range");
  if (coeff == 0.0) return;
  if (i == j) {
    P_.emplace_back(i, i, 2 * coeff);
  } else {
    P_.emplace_back(i, j, coeff);
    P_.emplace_back(j, i, coeff);
  }
}

void ProgramBuilder::add_quadratic_block(const std::vector<int>& idx, const Eigen::MatrixXd& M) {
  require_dims(M.rows() == Eigen::Index(idx.size()) && M.cols() == M.rows(), "ProgramBuilder: block size");
  for (Eigen::Index a = 0; a < M.rows(); ++a)
    for (Eigen::Index b = 0; b < M.cols(); ++b) {
      const double v = 0.5 * (M(a, b) + M(b, a));
      if (v != 0.0) P_.emplace_back(idx[a], idx[b], v);
    }
}

void ProgramBuilder::add_linear(int i, double coeff) {
  require_dims(i >= 0 && i < n_vars_, "ProgramBuilder: linear index out of range");
  q_.emplace_back(i, coeff);
}

ConicProgram ProgramBuilder::build() const {
  ConicProgram p;
  p.n_vars = n_vars_;
  p.P.resize(n_vars_, n_vars_);
  p.P.setFromTriplets(P_.begin(), P_.end());
  p.q = Eigen::VectorXd::Zero(n_vars_);
  for (auto [i, c] : q_) p.q(i) += c;
  p.constant = constant_;
  for (const auto& pb : blocks_) {
    ConeBlock b;
    b.kind = pb.kind;
    b.label = pb.label;
    b.order = pb.order;
    std::vector<Triplet> t;
    b.b.resize(Eigen::Index(pb.rows.size()));
    for (std::size_t r = 0; r < pb.rows.size(); ++r) {
      for (auto [i, c] : pb.rows[r].terms) t.emplace_back(int(r), i, c);
      b.b(Eigen::Index(r)) = pb.rows[r].constant;
    }
    b.A.resize(Eigen::Index(pb.rows.size()), n_vars_);
    b.A.setFromTriplets(t.begin(), t.end());
    p.blocks.push_back(std::move(b));
  }
  p.validate();
  return p;
}

namespace {

Eigen::MatrixXd unpack_lower(const Eigen::VectorXd& v, int order) {
  Eigen::MatrixXd M(order, order);
  int k = 0;
  for (int c = 0; c < order; ++c)
    for (int r = c; r < order; ++r) {
      M(r, c) = v(k);
      M(c, r) = v(k);
      ++k;
    }
  return M;
}

}  // namespace

std::vector<double> block_residuals(const ConicProgram& p, const Eigen::VectorXd& x) {
  std::vector<double> out;
  for (const auto& b : p.blocks) {
    const Eigen::VectorXd v = b.A * x + b.b;
    double r = 0.0;
    switch (b.kind) {
      case ConeKind::Zero: r = v.size() ? v.cwiseAbs().maxCoeff() : 0.0; break;
      case ConeKind::NonNeg: r = v.size() ? std::max(0.0, -v.minCoeff()) : 0.0; break;
      case ConeKind::SecondOrder: r = std::max(0.0, v.tail(v.size() - 1).norm() - v(0)); break;
      case ConeKind::PSD: {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unpack_lower(v, b.order), Eigen::EigenvaluesOnly);
        r = std::max(0.0, -es.eigenvalues().minCoeff());
        break;
      }
    }
    out.push_back(r);
  }
  return out;
}

void dump_program(const ConicProgram& p, std::ostream& os) {
  os.precision(17);
  os << "conic_program n_vars " << p.n_vars << " blocks " << p.blocks.size() << " constant " << p.constant << '\n';
  for (int k = 0; k < p.P.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.P, k); it; ++it) os << "P " << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  for (Eigen::Index i = 0; i < p.q.size(); ++i)
    if (p.q(i) != 0.0) os << "q " << i << ' ' << p.q(i) << '\n';
  static const char* names[] = {"zero", "nonneg", "soc", "psd"};
  for (const auto& b : p.blocks) {
    os << "block " << names[int(b.kind)] << ' ' << b.rows() << ' ' << b.order << ' '
       << (b.label.empty() ? "-" : b.label) << '\n';
    for (int k = 0; k < b.A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(b.A, k); it; ++it)
        os << "A " << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    for (Eigen::Index i = 0; i < b.b.size(); ++i)
      if (b.b(i) != 0.0) os << "b " << i << ' ' << b.b(i) << '\n';
  }
}

}  // namespace ddspc
