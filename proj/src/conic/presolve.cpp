#include "conic/presolve.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <numeric>

#include "ddspc/errors.hpp"

namespace ddspc {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kEqRankTol = 1e-10;
constexpr double kRelevanceTol = 1e-10;

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    auto c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  }
  template <typename T>
  void value(const T& v) { bytes(&v, sizeof v); }
  void sparse(const SparseMatrix& S) {
    value(S.rows());
    value(S.cols());
    for (int k = 0; k < S.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(S, k); it; ++it) {
        value(it.row());
        value(it.col());
        value(it.value());
      }
  }
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Orthonormal basis split of the row space of A by relative singular value.
void svd_split(const Eigen::MatrixXd& A, double rel_tol, int n, Eigen::MatrixXd& range_basis,
               Eigen::MatrixXd& null_basis, Eigen::MatrixXd* pinv) {
  if (A.rows() == 0) {
    range_basis.resize(n, 0);
    null_basis = Eigen::MatrixXd::Identity(n, n);
    if (pinv) pinv->resize(n, 0);
    return;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV | Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  int r = 0;
  const double smax = sv.size() ? sv(0) : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * smax && sv(i) > 0) ++r;
  range_basis = svd.matrixV().leftCols(r);
  null_basis = svd.matrixV().rightCols(n - r);
  if (pinv)
    *pinv = svd.matrixV().leftCols(r) * sv.head(r).cwiseInverse().asDiagonal() *
            svd.matrixU().leftCols(r).transpose();
}

}  // namespace

std::uint64_t program_fingerprint(const ConicProgram& p) {
  Fnv f;
  f.value(p.n_vars);
  f.sparse(p.P);
  f.value(p.blocks.size());
  for (const auto& b : p.blocks) {
    f.value(int(b.kind));
    f.value(b.order);
    f.sparse(b.A);
  }
  return f.h;
}

PresolveData build_presolve(const ConicProgram& p) {
  p.validate();
  PresolveData pd;
  const int n = p.n_vars;
  pd.n = n;

  // Equality rows and cone rows in IPM order: orthant, SOC, PSD.
  std::vector<Triplet> eq_trip;
  int n_eq = 0;
  for (int bi = 0; bi < int(p.blocks.size()); ++bi) {
    const auto& b = p.blocks[bi];
    if (b.kind != ConeKind::Zero) continue;
    Eigen::SparseMatrix<double, Eigen::RowMajor> Ar = b.A;
    for (int r = 0; r < b.rows(); ++r) {
      pd.eq_source.emplace_back(bi, r);
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Ar, r); it; ++it)
        if (it.value() != 0.0) eq_trip.emplace_back(n_eq, int(it.col()), it.value());
      ++n_eq;
    }
  }
  SparseMatrix E(n_eq, n);
  E.setFromTriplets(eq_trip.begin(), eq_trip.end());
  Eigen::SparseMatrix<double, Eigen::RowMajor> Er = E;

  detail::ConeDims dims;
  std::vector<Triplet> ma_trip;
  auto push_block_rows = [&](int bi, bool psd) {
    const auto& b = p.blocks[bi];
    std::vector<double> mult(b.rows(), 1.0);
    if (psd) {
      int k = 0;
      for (int c = 0; c < b.order; ++c)
        for (int r = c; r < b.order; ++r) mult[k++] = r == c ? 1.0 : kSqrt2;
    }
    const int base = int(pd.cone_rows.size());
    for (int r = 0; r < b.rows(); ++r) pd.cone_rows.push_back({bi, r, mult[r]});
    for (int k = 0; k < b.A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(b.A, k); it; ++it)
        if (it.value() != 0.0) ma_trip.emplace_back(base + int(it.row()), int(it.col()), mult[it.row()] * it.value());
  };
  for (int bi = 0; bi < int(p.blocks.size()); ++bi)
    if (p.blocks[bi].kind == ConeKind::NonNeg) {
      push_block_rows(bi, false);
      dims.l += int(p.blocks[bi].rows());
    }
  for (int bi = 0; bi < int(p.blocks.size()); ++bi)
    if (p.blocks[bi].kind == ConeKind::SecondOrder) {
      push_block_rows(bi, false);
      dims.q.push_back(int(p.blocks[bi].rows()));
    }
  std::vector<int> psd_blocks;
  for (int bi = 0; bi < int(p.blocks.size()); ++bi)
    if (p.blocks[bi].kind == ConeKind::PSD) psd_blocks.push_back(bi);
  // PSD rows are appended after the epigraph cone; remember where they start.
  const int m_before_psd = int(pd.cone_rows.size());
  for (int bi : psd_blocks) {
    push_block_rows(bi, true);
    dims.s.push_back(p.blocks[bi].order);
  }
  const int m_cone = int(pd.cone_rows.size());
  pd.MA.resize(m_cone, n);
  pd.MA.setFromTriplets(ma_trip.begin(), ma_trip.end());

  // Components over variables linked by equalities or by P.
  UnionFind uf(n);
  for (int r = 0; r < n_eq; ++r) {
    int first = -1;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Er, r); it; ++it) {
      if (first < 0) first = int(it.col());
      else uf.unite(first, int(it.col()));
    }
    if (first < 0) pd.empty_eq_rows.push_back(r);
  }
  for (int k = 0; k < p.P.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(p.P, k); it; ++it)
      if (it.value() != 0.0) uf.unite(int(it.row()), int(it.col()));
  std::vector<int> root_to_comp(n, -1);
  pd.comp_of_var.assign(n, -1);
  for (int v = 0; v < n; ++v) {
    const int r = uf.find(v);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = int(pd.comps.size());
      pd.comps.emplace_back();
    }
    pd.comp_of_var[v] = root_to_comp[r];
    pd.comps[root_to_comp[r]].vars.push_back(v);
  }
  for (int r = 0; r < n_eq; ++r) {
    Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Er, r);
    if (it) pd.comps[pd.comp_of_var[it.col()]].eq_rows.push_back(r);
  }

  Eigen::SparseMatrix<double, Eigen::RowMajor> MAr = pd.MA;
  std::vector<Triplet> t_trip, f_trip;
  std::vector<int> local(n, -1);
  int phi = 0, epi = 0;
  for (auto& c : pd.comps) {
    const int nc = int(c.vars.size());
    for (int i = 0; i < nc; ++i) local[c.vars[i]] = i;
    // Normalized equality rows.
    c.E = Eigen::MatrixXd::Zero(c.eq_rows.size(), nc);
    c.row_scale.resize(c.eq_rows.size());
    for (std::size_t i = 0; i < c.eq_rows.size(); ++i) {
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Er, c.eq_rows[i]); it; ++it)
        c.E(i, local[it.col()]) = it.value();
      const double nr = c.E.row(i).norm();
      c.row_scale(i) = 1.0 / nr;
      c.E.row(i) *= c.row_scale(i);
    }
    Eigen::MatrixXd range, N;
    svd_split(c.E, kEqRankTol, nc, range, N, &c.pinv);
    // Relevance: cone rows and P rows seen through the nullspace.
    std::vector<int> rows;
    std::vector<char> seen(m_cone, 0);
    for (int v : c.vars)
      for (SparseMatrix::InnerIterator it(pd.MA, v); it; ++it)
        if (!seen[it.row()]) {
          seen[it.row()] = 1;
          rows.push_back(int(it.row()));
        }
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(rows.size() + nc, nc);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(MAr, rows[i]); it; ++it)
        if (pd.comp_of_var[it.col()] == int(&c - pd.comps.data())) R(i, local[it.col()]) = it.value();
    Eigen::MatrixXd Pc = Eigen::MatrixXd::Zero(nc, nc);
    for (int v : c.vars)
      for (SparseMatrix::InnerIterator it(p.P, v); it; ++it) Pc(local[it.row()], local[it.col()]) = it.value();
    R.bottomRows(nc) = Pc;
    Eigen::MatrixXd RN = R * N;
    for (Eigen::Index i = 0; i < RN.rows(); ++i) {
      const double nr = RN.row(i).norm();
      if (nr > 0) RN.row(i) /= nr;
    }
    Eigen::MatrixXd keep, drop;
    if (N.cols() > 0) {
      svd_split(RN, kRelevanceTol, int(N.cols()), keep, drop, nullptr);
      c.T = N * keep;
      c.dropped = N * drop;
    } else {
      c.T.resize(nc, 0);
      c.dropped.resize(nc, 0);
    }
    c.phi_offset = phi;
    for (int i = 0; i < nc; ++i)
      for (Eigen::Index j = 0; j < c.T.cols(); ++j)
        if (c.T(i, j) != 0.0) t_trip.emplace_back(c.vars[i], phi + int(j), c.T(i, j));
    // Factor of the reduced Hessian block.
    if (c.T.cols() > 0 && !Pc.isZero(0.0)) {
      Eigen::MatrixXd Pp = c.T.transpose() * Pc * c.T;
      Pp = 0.5 * (Pp + Pp.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Pp);
      const double dmax = std::max(0.0, es.eigenvalues().maxCoeff());
      if (es.eigenvalues().minCoeff() < -1e-9 * std::max(1.0, dmax))
        throw DimensionError("conic program: quadratic objective is not positive semidefinite (" + std::to_string(es.eigenvalues().minCoeff()) + " vs " + std::to_string(dmax) + ")");
      for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const double d = es.eigenvalues()(k);
        if (d <= 1e-14 * dmax) continue;
        const double sd = std::sqrt(d);
        for (Eigen::Index j = 0; j < c.T.cols(); ++j) {
          const double v = sd * es.eigenvectors()(j, k);
          if (v != 0.0) f_trip.emplace_back(epi, phi + int(j), v);
        }
        ++epi;
      }
    }
    phi += int(c.T.cols());
    for (int v : c.vars) local[v] = -1;
  }
  pd.n_phi = phi;
  pd.T.resize(n, phi);
  pd.T.setFromTriplets(t_trip.begin(), t_trip.end());
  pd.epi_rows = epi;

  // IPM matrix: cone rows s = MA (x0 + T phi) + Mb, so G = -MA T; the
  // epigraph cone (t + 1, t - 1, sqrt2 F phi) sits after the other SOCs.
  const int n_ipm = phi + (epi > 0 ? 1 : 0);
  pd.t_index = epi > 0 ? phi : -1;
  SparseMatrix GT = -(pd.MA * pd.T);
  std::vector<Triplet> g_trip;
  auto copy_rows = [&](int from, int to, int shift) {
    for (int k = 0; k < GT.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(GT, k); it; ++it)
        if (it.row() >= from && it.row() < to) g_trip.emplace_back(int(it.row()) + shift, int(it.col()), it.value());
  };
  copy_rows(0, m_before_psd, 0);
  int row = m_before_psd;
  if (epi > 0) {
    g_trip.emplace_back(row, pd.t_index, -1.0);
    g_trip.emplace_back(row + 1, pd.t_index, -1.0);
    for (const auto& t : f_trip) g_trip.emplace_back(row + 2 + t.row(), t.col(), -kSqrt2 * t.value());
    dims.q.push_back(epi + 2);
    row += epi + 2;
  }
  copy_rows(m_before_psd, m_cone, row - m_before_psd);
  const int m_ipm = m_cone + (epi > 0 ? epi + 2 : 0);
  SparseMatrix G(m_ipm, n_ipm);
  G.setFromTriplets(g_trip.begin(), g_trip.end());
  pd.ipm.build(dims, G);
  return pd;
}

}  // namespace ddspc
