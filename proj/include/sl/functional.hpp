#pragma once

#include "sl/dirac.hpp"
#include "sl/harmonics.hpp"

namespace sl {

struct FunctionalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Residuals of the natural constraint set: mass identity, Nehari
/// identity, and the negative-eigenspace conditions, plus the centroid.
struct ConstraintResidual {
  double r_mass = 0.0;    // integral (h1 e^{2u} + h2 e^{u}|psi|^2) - 4 pi
  double r_nehari = 0.0;  // sum lambda|a|^2 - integral h2 e^{u}|psi|^2
  VecXc r_neg;            // lambda_j a_j - <h2 e^u psi, phi_j>, j : lambda_j < 0
  Vec3 centroid = Vec3::Zero();  // average of e^{2u} x

  double max_abs() const;
};

/// A candidate (u, psi) together with the coupling functions h1 > 0,
/// h2 >= 0, all living on one grid/basis pair.
struct SolutionPair {
  const Harmonics* ops = nullptr;
  const DiracBasis* basis = nullptr;
  ScalarField u;
  SpinorState psi;
  ScalarField h1, h2;

  SolutionPair() = default;
  SolutionPair(const Harmonics& ops, const DiracBasis& basis, ScalarField u,
               SpinorState psi, ScalarField h1, ScalarField h2);

  // residual cache, refreshed by constraint_residuals
  mutable bool cache_valid = false;
  mutable ConstraintResidual cache;
  void invalidate() const { cache_valid = false; }
};

/// E(u, psi); the Dirac pairing is evaluated from coefficients.
double energy(const SolutionPair& state);

/// L2-representation of dE: grad_u as coefficient-form scalar field,
/// grad_psi as complex coefficients g_j with dE . (v, delta) =
/// integral(grad_u v) + Re sum conj(g_j) delta_j.
void energy_gradient(const SolutionPair& state, ScalarField& grad_u,
                     VecXc& grad_psi);

const ConstraintResidual& constraint_residuals(const SolutionPair& state);

/// Restores membership in the constraint set: alternates an exact linear
/// solve for the negative-eigenspace coefficients with the closed-form
/// (c, s) feasibility step for (u + c, s psi). Throws FunctionalError with
/// the final residuals if the alternation does not reach tol.
SolutionPair retract(const SolutionPair& state, double tol,
                     int max_iter = 200);

/// S[u] = average |grad u|^2 + 2 mean(u) (Moebius invariant).
double s_functional(const Harmonics& ops, const ScalarField& u);

Vec3 centroid(const Harmonics& ops, const ScalarField& u);

/// integral h2 e^{u} |psi|^2 (lies in [0, 4 pi] on the constraint set).
double coupling_integral(const SolutionPair& state);

/// integral (|grad u|^2 + 2u + h2 e^{u}|psi|^2); equals E on the
/// constraint set.
double reduced_energy(const SolutionPair& state);

/// Two-factor Hoelder split for the coupling density, exponents
/// beta = 2 alpha/(alpha+2), p = (2+alpha)/2, q = (2+alpha)/alpha:
/// lhs = ||e^u |psi|^2||_{L^beta}^beta, rhs = its Hoelder bound.
struct HolderCheck {
  double alpha = 0.0, beta = 0.0;
  double lhs = 0.0, rhs = 0.0;
  bool satisfied = false;
};
HolderCheck holder_check(const SolutionPair& state, double alpha);

}  // namespace sl
