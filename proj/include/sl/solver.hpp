#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "sl/functional.hpp"

namespace sl {

enum class InitKind { zero, perturbed_special, random };

struct SolveConfig {
  int band_l = 16;    // scalar band L
  int band_lambda = 5;  // Dirac truncation Lambda

  double tol_constraint = 1e-9;
  double tol_gradient = 1e-6;
  double tol_residual = 1e-6;

  int max_outer = 30;
  int max_inner = 400;

  bool parity_even = false;  // restrict u to even degrees
  InitKind init = InitKind::perturbed_special;
  unsigned seed = 1;

  double rho_start = 1.0, rho_end = 5.0, rho_step = 0.5;  // continuation
  double penalty_growth = 4.0;
  double penalty_init = 10.0;
  double gauge_weight = 0.0;  // optional centroid penalty

  void validate() const;  // throws std::invalid_argument
};

struct OuterRecord {
  int iteration = 0;
  double merit = 0.0;
  double max_residual = 0.0;
  double energy = 0.0;
  double grad_norm = 0.0;
  int inner_iterations = 0;
};

struct MinimizeResult {
  SolutionPair state;
  double energy = 0.0;
  int iterations = 0;  // total inner iterations
  bool converged = false;
  std::vector<OuterRecord> history;
};

struct PdeResidual {
  ScalarField r_u;    // raw values + band-limited coefficients
  VecXc r_psi;        // lambda_j a_j - <h2 e^u psi, phi_j>, all j
  double sup_u = 0.0;
  double norm_psi = 0.0;
};

PdeResidual pde_residual(const SolutionPair& state);

/// Constrained minimization of the energy over the constraint set by an
/// augmented-Lagrangian outer loop with L-BFGS inner solves. `log`, when
/// given, receives one line per outer iteration.
MinimizeResult minimize(const SolveConfig& config, const Harmonics& ops,
                        const DiracBasis& basis, const ScalarField& h1,
                        const ScalarField& h2,
                        std::optional<SolutionPair> init_state = std::nullopt,
                        std::ostream* log = nullptr);

struct NewtonResult {
  SolutionPair state;
  bool converged = false;
  int iterations = 0;
  double sup_residual = 0.0;
  double min_singular_value = 0.0;
};

/// Damped Gauss-Newton polish of the full Euler-Lagrange residual; the
/// least-squares step uses an SVD (the linearization is singular along
/// the Moebius/phase orbit directions).
NewtonResult newton_refine(const SolutionPair& state, double tol,
                           int max_iter = 25);

struct ContinuationPoint {
  double rho = 0.0;
  MinimizeResult result;
  double psi_h_half = 0.0;  // reported H^{1/2} norm of the spinor
};

/// Warm-started sweep h2 = rho over [rho_start, rho_end] with h1 fixed.
std::vector<ContinuationPoint> continuation(const SolveConfig& config,
                                            const ScalarField& h1,
                                            const Harmonics& ops,
                                            const DiracBasis& basis,
                                            std::ostream* log = nullptr);

}  // namespace sl
