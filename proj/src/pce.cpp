#include "ddspc/pce.hpp"

#include <cmath>

#include "ddspc/linalg.hpp"

namespace ddspc {

GermFamily BasisSpec::family(int j) const {
  if (j <= 0 || j >= L) throw DimensionError("BasisSpec::family: index outside stochastic terms");
  if (j < L_ini) return ini_family[j - 1];
  return dist_family[(j - L_ini) % (L_w - 1)];
}

BasisSpec build_joint_basis(int L_ini, int L_w, int N, GermFamily ini, GermFamily dist) {
  if (L_ini < 1 || L_w < 1 || N < 1) throw DimensionError("build_joint_basis: dimensions must be positive");
  return build_joint_basis(L_ini, L_w, N, std::vector<GermFamily>(L_ini - 1, ini),
                           std::vector<GermFamily>(L_w - 1, dist));
}

BasisSpec build_joint_basis(int L_ini, int L_w, int N, std::vector<GermFamily> ini_family,
                            std::vector<GermFamily> dist_family) {
  if (L_ini < 1 || L_w < 1 || N < 1) throw DimensionError("build_joint_basis: dimensions must be positive");
  require_dims(int(ini_family.size()) == L_ini - 1, "build_joint_basis: ini_family size != L_ini - 1");
  require_dims(int(dist_family.size()) == L_w - 1, "build_joint_basis: dist_family size != L_w - 1");
  BasisSpec b;
  b.L_ini = L_ini;
  b.L_w = L_w;
  b.N = N;
  b.L = L_ini + N * (L_w - 1);
  b.ini_family = std::move(ini_family);
  b.dist_family = std::move(dist_family);
  // Normalized degree-1 polynomials all have unit norm.
  b.norms_sq = Eigen::VectorXd::Ones(b.L);
  return b;
}

Eigen::MatrixXd disturbance_factor(const Eigen::MatrixXd& Sigma_W) {
  require_dims(Sigma_W.rows() == Sigma_W.cols(), "disturbance_factor: Sigma_W not square");
  if (symmetry_error(Sigma_W) > 1e-10 * std::max(1.0, Sigma_W.cwiseAbs().maxCoeff()))
    throw AssumptionError("disturbance_factor: Sigma_W not symmetric");
  return psd_sqrt(Sigma_W);
}

PceVector disturbance_pce(const Eigen::MatrixXd& Sigma_W, const BasisSpec& basis, int block_index) {
  if (block_index < 0 || block_index >= basis.N) throw DimensionError("disturbance_pce: block index out of range");
  const Eigen::Index n_w = Sigma_W.rows();
  require_dims(basis.L_w - 1 == n_w, "disturbance_pce: L_w - 1 must equal n_w");
  PceVector p = PceVector::zero(n_w, basis.L);
  if (n_w > 0) p.coeffs.middleCols(basis.block_begin(block_index), n_w) = disturbance_factor(Sigma_W);
  return p;
}

double germ_polynomial(GermFamily f, double xi) {
  return f == GermFamily::Hermite ? xi : std::sqrt(3.0) * xi;
}

Eigen::VectorXd draw_germs(const BasisSpec& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Eigen::VectorXd phi(basis.L);
  phi(0) = 1.0;
  for (int j = 1; j < basis.L; ++j) {
    const GermFamily f = basis.family(j);
    const double xi = f == GermFamily::Hermite ? normal(rng) : uniform(rng);
    phi(j) = germ_polynomial(f, xi);
  }
  return phi;
}

}  // namespace ddspc
