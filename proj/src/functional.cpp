#include "sl/functional.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace sl {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;

// pointwise h2 e^{u}
Eigen::VectorXd coupling_weight(const SolutionPair& s) {
  return s.h2.values.cwiseProduct(s.ops->exp_values(s.u, 1.0));
}
}  // namespace

double ConstraintResidual::max_abs() const {
  double m = std::max(std::abs(r_mass), std::abs(r_nehari));
  for (int j = 0; j < r_neg.size(); ++j) m = std::max(m, std::abs(r_neg[j]));
  return m;
}

SolutionPair::SolutionPair(const Harmonics& ops_in, const DiracBasis& basis_in,
                           ScalarField u_in, SpinorState psi_in,
                           ScalarField h1_in, ScalarField h2_in)
    : ops(&ops_in),
      basis(&basis_in),
      u(std::move(u_in)),
      psi(std::move(psi_in)),
      h1(std::move(h1_in)),
      h2(std::move(h2_in)) {
  if (&basis_in.grid() != &ops_in.grid())
    throw FunctionalError("SolutionPair: grid mismatch between transforms");
  if (h1.values.size() == 0 || h1.values.minCoeff() <= 0.0)
    throw FunctionalError("SolutionPair: h1 must be positive on the grid");
  if (h2.values.size() == 0 || h2.values.minCoeff() < -1e-12)
    throw FunctionalError("SolutionPair: h2 must be nonnegative on the grid");
}

double energy(const SolutionPair& s) {
  const Harmonics& ops = *s.ops;
  Eigen::VectorXd e2u = ops.exp_values(s.u, 2.0);
  double grad = ops.dirichlet_energy(s.u);
  double lin = 2.0 * ops.grid().integrate(s.u.values);
  double vol = ops.grid().integrate(s.h1.values.cwiseProduct(e2u));
  double pairing = s.basis->dirac_pairing(s.psi);
  double coup = ops.grid().integrate(
      coupling_weight(s).cwiseProduct(s.psi.density()));
  double e = grad + lin - vol + 2.0 * (pairing - coup) + kFourPi;
  if (!std::isfinite(e))
    throw FunctionalError("energy: non-finite value (max u = " +
                          std::to_string(s.u.values.maxCoeff()) + ")");
  return e;
}

void energy_gradient(const SolutionPair& s, ScalarField& grad_u,
                     VecXc& grad_psi) {
  const Harmonics& ops = *s.ops;
  Eigen::VectorXd e2u = ops.exp_values(s.u, 2.0);
  Eigen::VectorXd w = coupling_weight(s);

  // pointwise part 2 - 2 h1 e^{2u} - 2 h2 e^{u}|psi|^2, plus -2 Delta u
  Eigen::VectorXd pt = 2.0 * Eigen::VectorXd::Ones(ops.grid().n_nodes()) -
                       2.0 * s.h1.values.cwiseProduct(e2u) -
                       2.0 * w.cwiseProduct(s.psi.density());
  Eigen::VectorXd gc = ops.analyze(pt, s.u.band);
  for (int l = 0; l <= s.u.band; ++l)
    for (int m = -l; m <= l; ++m)
      gc[l * l + l + m] += 2.0 * l * (l + 1) * s.u.coeff(l, m);
  grad_u = ops.field_from_coeffs(gc, s.u.band);

  VecXc p = s.basis->project_weighted(s.psi, w);
  grad_psi = VecXc(s.basis->size());
  for (int j = 0; j < s.basis->size(); ++j)
    grad_psi[j] = 4.0 * (s.basis->lambda(j) * s.psi.coeffs()[j] - p[j]);
}

const ConstraintResidual& constraint_residuals(const SolutionPair& s) {
  if (s.cache_valid) return s.cache;
  const Harmonics& ops = *s.ops;
  ConstraintResidual r;
  Eigen::VectorXd e2u = ops.exp_values(s.u, 2.0);
  Eigen::VectorXd w = coupling_weight(s);
  double coup = ops.grid().integrate(w.cwiseProduct(s.psi.density()));
  r.r_mass =
      ops.grid().integrate(s.h1.values.cwiseProduct(e2u)) + coup - kFourPi;
  r.r_nehari = s.basis->dirac_pairing(s.psi) - coup;

  VecXc p = s.basis->project_weighted(s.psi, w);
  int n_neg = 0;
  for (int j = 0; j < s.basis->size(); ++j)
    if (s.basis->lambda(j) < 0) ++n_neg;
  r.r_neg.resize(n_neg);
  for (int j = 0, q = 0; j < s.basis->size(); ++j)
    if (s.basis->lambda(j) < 0)
      r.r_neg[q++] = s.basis->lambda(j) * s.psi.coeffs()[j] - p[j];

  const SphereGrid& g = ops.grid();
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < g.n_nodes(); ++i)
    c += g.weights[i] * e2u[i] * g.nodes[i];
  r.centroid = c / kFourPi;

  s.cache = r;
  s.cache_valid = true;
  return s.cache;
}

SolutionPair retract(const SolutionPair& state, double tol, int max_iter) {
  SolutionPair s = state;
  s.invalidate();
  std::vector<int> neg;
  for (int j = 0; j < s.basis->size(); ++j)
    if (s.basis->lambda(j) < 0) neg.push_back(j);
  const int nn = static_cast<int>(neg.size());
  for (int it = 0; it < max_iter; ++it) {
    // (a) negative-part conditions lambda_j a_j = <h2 e^u psi, phi_j>:
    // linear in a^- with coefficient matrix depending only on u, so solve
    // the small dense system exactly (the naive fixed point stalls when
    // h2 e^u is near 1, where the iteration matrix has eigenvalue -1)
    Eigen::VectorXd w = coupling_weight(s);
    if (nn > 0 && s.psi.coeffs().lpNorm<Eigen::Infinity>() > 0.0) {
      VecXc a = s.psi.coeffs();
      for (int j : neg) a[j] = 0.0;
      SpinorState pos_part(*s.basis, a);
      VecXc rhs_full = s.basis->project_weighted(pos_part, w);
      Eigen::MatrixXcd sys(nn, nn);
      for (int col = 0; col < nn; ++col) {
        VecXc e = VecXc::Zero(s.basis->size());
        e[neg[col]] = 1.0;
        VecXc mcol = s.basis->project_weighted(SpinorState(*s.basis, e), w);
        for (int row = 0; row < nn; ++row) sys(row, col) = -mcol[neg[row]];
        sys(col, col) += s.basis->lambda(neg[col]);
      }
      Eigen::VectorXcd rhs(nn);
      for (int row = 0; row < nn; ++row) rhs[row] = rhs_full[neg[row]];
      Eigen::VectorXcd an = sys.fullPivLu().solve(rhs);
      for (int row = 0; row < nn; ++row) a[neg[row]] = an[row];
      s.psi.set_coeffs(a);
    }

    // (b) feasibility in (c, s): for (u + c, sc * psi) the Nehari and mass
    // identities have the closed-form solution e^c = K/Q,
    // sc^2 = (4pi - P e^{2c}) / (e^c Q)
    double K = s.basis->dirac_pairing(s.psi);
    double Q = s.ops->grid().integrate(
        coupling_weight(s).cwiseProduct(s.psi.density()));
    double P = s.ops->grid().integrate(
        s.h1.values.cwiseProduct(s.ops->exp_values(s.u, 2.0)));
    double c = 0.0, sc = 0.0;
    bool spinor_branch = K > 1e-14 && Q > 1e-14;
    if (spinor_branch) {
      c = std::log(K / Q);
      double sc2 = (kFourPi - P * std::exp(2.0 * c)) / (std::exp(c) * Q);
      if (sc2 >= 0.0) {
        sc = std::sqrt(sc2);
      } else {
        spinor_branch = false;
      }
    }
    if (!spinor_branch) {
      // degenerate spinor: solve the mass identity alone
      c = 0.5 * std::log(kFourPi / P);
      sc = 0.0;
    }
    s.u.coeffs[0] += c * std::sqrt(kFourPi);
    s.u.values.array() += c;
    s.psi.set_coeffs(s.psi.coeffs() * sc);
    s.invalidate();

    if (constraint_residuals(s).max_abs() <= tol) return s;
  }
  const ConstraintResidual& r = constraint_residuals(s);
  std::ostringstream msg;
  msg << "retract: no convergence after " << max_iter
      << " iterations (mass " << r.r_mass << ", nehari " << r.r_nehari
      << ", max " << r.max_abs() << ")";
  throw FunctionalError(msg.str());
}

double s_functional(const Harmonics& ops, const ScalarField& u) {
  return ops.dirichlet_energy(u) / kFourPi + 2.0 * u.mean();
}

Vec3 centroid(const Harmonics& ops, const ScalarField& u) {
  const SphereGrid& g = ops.grid();
  Eigen::VectorXd e2u = ops.exp_values(u, 2.0);
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < g.n_nodes(); ++i)
    c += g.weights[i] * e2u[i] * g.nodes[i];
  return c / kFourPi;
}

double coupling_integral(const SolutionPair& s) {
  return s.ops->grid().integrate(
      coupling_weight(s).cwiseProduct(s.psi.density()));
}

double reduced_energy(const SolutionPair& s) {
  return s.ops->dirichlet_energy(s.u) +
         2.0 * s.ops->grid().integrate(s.u.values) + coupling_integral(s);
}

HolderCheck holder_check(const SolutionPair& s, double alpha) {
  HolderCheck h;
  h.alpha = alpha;
  h.beta = 2.0 * alpha / (alpha + 2.0);
  double p = (2.0 + alpha) / 2.0, q = (2.0 + alpha) / alpha;
  const SphereGrid& g = s.ops->grid();
  Eigen::VectorXd eu = s.ops->exp_values(s.u, 1.0);
  Eigen::VectorXd dens = eu.cwiseProduct(s.psi.density());
  double lhs = 0.0, fa = 0.0, f4 = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i) {
    lhs += g.weights[i] * std::pow(dens[i], h.beta);
    fa += g.weights[i] * std::pow(eu[i], alpha);
    f4 += g.weights[i] * std::pow(s.psi.density()[i], 2.0);
  }
  h.lhs = lhs;
  h.rhs = std::pow(fa, 1.0 / p) * std::pow(f4, 1.0 / q);
  h.satisfied = h.lhs <= h.rhs * (1.0 + 1e-10) + 1e-10;
  return h;
}

}  // namespace sl
