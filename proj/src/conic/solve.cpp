#include <cmath>

#include "conic/presolve.hpp"
#include "ddspc/conic.hpp"

namespace ddspc {

SolverWorkspace::SolverWorkspace() = default;
SolverWorkspace::~SolverWorkspace() = default;
SolverWorkspace::SolverWorkspace(SolverWorkspace&&) noexcept = default;
SolverWorkspace& SolverWorkspace::operator=(SolverWorkspace&&) noexcept = default;

namespace {

Solution failed(SolveStatus s, int iters = 0) {
  Solution sol;
  sol.status = s;
  sol.iterations = iters;
  return sol;
}

double max_block_violation(const ConicProgram& p, const Eigen::VectorXd& x) {
  const auto r = block_residuals(p, x);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto& b = p.blocks[i].b;
    const double scale = std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0);
    worst = std::max(worst, r[i] / scale);
  }
  return worst;
}

}  // namespace

Solution solve(const ConicProgram& p, const SolverSettings& settings, SolverWorkspace* ws) {
  p.validate();
  std::shared_ptr<PresolveData> pd;
  if (ws) {
    const std::uint64_t fp = program_fingerprint(p);
    if (ws->presolve && ws->fingerprint == fp) {
      pd = ws->presolve;
      ++ws->hits;
    } else {
      pd = std::make_shared<PresolveData>(build_presolve(p));
      ws->presolve = pd;
      ws->fingerprint = fp;
      ++ws->misses;
    }
  } else {
    pd = std::make_shared<PresolveData>(build_presolve(p));
  }

  const int n = p.n_vars;
  // Equality right-hand side: A x + b = 0.
  Eigen::VectorXd rhs(pd->eq_source.size());
  for (std::size_t i = 0; i < pd->eq_source.size(); ++i)
    rhs(i) = -p.blocks[pd->eq_source[i].first].b(pd->eq_source[i].second);
  const double eq_tol = settings.tol * std::max(1.0, rhs.size() ? rhs.cwiseAbs().maxCoeff() : 0.0);
  for (int r : pd->empty_eq_rows)
    if (std::abs(rhs(r)) > eq_tol) return failed(SolveStatus::Infeasible);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  const double qscale = std::max(1.0, p.q.size() ? p.q.cwiseAbs().maxCoeff() : 0.0);
  for (const auto& c : pd->comps) {
    if (!c.eq_rows.empty()) {
      Eigen::VectorXd bc(c.eq_rows.size());
      for (std::size_t i = 0; i < c.eq_rows.size(); ++i) bc(i) = rhs(c.eq_rows[i]) * c.row_scale(i);
      const Eigen::VectorXd xc = c.pinv * bc;
      const double tol = settings.tol * std::max(1.0, bc.cwiseAbs().maxCoeff());
      if ((c.E * xc - bc).cwiseAbs().maxCoeff() > tol) return failed(SolveStatus::Infeasible);
      for (std::size_t i = 0; i < c.vars.size(); ++i) x0(c.vars[i]) = xc(i);
    }
    if (c.dropped.cols() > 0) {
      Eigen::VectorXd qc(c.vars.size());
      for (std::size_t i = 0; i < c.vars.size(); ++i) qc(i) = p.q(c.vars[i]);
      if ((c.dropped.transpose() * qc).cwiseAbs().maxCoeff() > 1e-9 * qscale) return failed(SolveStatus::Unbounded);
    }
  }

  const auto& dims = pd->ipm.dims;
  const int m_cone = int(pd->cone_rows.size());
  Eigen::VectorXd hc = pd->MA * x0;
  for (int i = 0; i < m_cone; ++i) {
    const auto& rr = pd->cone_rows[i];
    hc(i) += rr.mult * p.blocks[rr.block].b(rr.row);
  }

  Solution sol;
  Eigen::VectorXd x;
  if (pd->n_phi == 0) {
    detail::ConeDims cd = dims;
    Eigen::VectorXd h = hc;
    // No free directions: x0 is the only candidate. PSD rows follow directly
    // after the SOC rows here since there is no epigraph cone.
    if (m_cone > 0 && detail::min_shift(cd, h) > settings.tol * std::max(1.0, h.cwiseAbs().maxCoeff()))
      return failed(SolveStatus::Infeasible);
    x = x0;
  } else {
    const int m_ipm = int(pd->ipm.G.rows());
    const int n_ipm = int(pd->ipm.G.cols());
    Eigen::VectorXd h(m_ipm);
    int psd_start = m_cone;
    for (std::size_t k = 0; k < dims.s.size(); ++k) psd_start -= detail::svec_size(dims.s[k]);
    h.head(psd_start) = hc.head(psd_start);
    int row = psd_start;
    if (pd->epi_rows > 0) {
      h(row) = 1.0;
      h(row + 1) = -1.0;
      h.segment(row + 2, pd->epi_rows).setZero();
      row += pd->epi_rows + 2;
    }
    h.segment(row, m_cone - psd_start) = hc.tail(m_cone - psd_start);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_ipm);
    c.head(pd->n_phi) = pd->T.transpose() * (p.q + p.P * x0);
    if (pd->t_index >= 0) c(pd->t_index) = 1.0;

    detail::IpmResult r = detail::ipm_solve(pd->ipm, h, c, settings);
    sol.iterations = r.iterations;
    sol.primal_residual = r.pres;
    sol.dual_residual = r.dres;
    sol.gap = r.gap;
    switch (r.status) {
      case detail::IpmStatus::PrimalInfeasible: return failed(SolveStatus::Infeasible, r.iterations);
      case detail::IpmStatus::DualInfeasible: return failed(SolveStatus::Unbounded, r.iterations);
      case detail::IpmStatus::Optimal: break;
      case detail::IpmStatus::MaxIterations:
      case detail::IpmStatus::Numerical: {
        // Stalled close to the optimum: accept only a tightly converged iterate.
        const double loose = 100 * settings.tol;
        const double obj = std::abs(c.dot(r.x));
        if (!(r.pres <= loose && r.dres <= loose && r.gap <= 1e-6 * std::max(1.0, obj)))
          return failed(SolveStatus::NumericalFailure, r.iterations);
        break;
      }
    }
    x = x0 + pd->T * r.x.head(pd->n_phi);
  }
  sol.status = SolveStatus::Optimal;
  sol.primal = x;
  sol.objective_value = p.objective(x);
  sol.primal_residual = max_block_violation(p, x);
  return sol;
}

}  // namespace ddspc
