#include <numbers>
#include <sstream>

#include "common.hpp"
#include "doctest.h"
#include "sl/conformal.hpp"
#include "sl/solver.hpp"

using namespace sl;
constexpr double kPi = std::numbers::pi;

namespace {

SolutionPair rho_state(const sltest::World& w, double rho) {
  VecXc a = w.basis.killing_spinor().coeffs() *
            (std::sqrt(rho * rho - 1.0) / rho);
  return SolutionPair(w.ops, w.basis, w.ops.constant(-std::log(rho), 4),
                      SpinorState(w.basis, a), w.ops.constant(1.0, 4),
                      w.ops.constant(rho, 4));
}

SolveConfig small_config() {
  SolveConfig c;
  c.band_l = 12;
  c.band_lambda = 4;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SolveConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.tol_gradient = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.penalty_growth = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.band_lambda = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("pde residual closed forms") {
  const auto& w = sltest::world();
  SolutionPair trivial(w.ops, w.basis, w.ops.constant(0.0, 4),
                       w.basis.zero_state(), w.ops.constant(1.0, 4),
                       w.ops.constant(1.0, 4));
  PdeResidual r0 = pde_residual(trivial);
  CHECK(r0.sup_u <= 1e-10);
  CHECK(r0.norm_psi <= 1e-10);

  PdeResidual r2 = pde_residual(rho_state(sltest::world(), 2.0));
  CHECK(r2.sup_u <= 1e-8);
  CHECK(r2.norm_psi <= 1e-8);
}

TEST_CASE("pde residual vanishes on the conformal orbit") {
  const auto& w = sltest::world();
  std::mt19937 rng(211);
  std::normal_distribution<double> nd;
  Eigen::Matrix2cd a;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) a(r, c) = 0.15 * Complex(nd(rng), nd(rng));
  a -= Eigen::Matrix2cd::Identity() * (a.trace() / 2.0);
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity() + a + 0.5 * a * a +
                       a * a * a / 6.0 + a * a * a * a / 24.0;
  ScalarField u = pullback_scalar(w.ops, w.ops.constant(0.0, 6), MobiusMap(m));
  SolutionPair s(w.ops, w.basis, u, w.basis.zero_state(),
                 w.ops.constant(1.0, 4), w.ops.constant(1.0, 4));
  CHECK(pde_residual(s).sup_u <= 1e-6);
}

TEST_CASE("minimize reaches the explicit branch at h2 = 2") {
  const auto& w = sltest::world();
  SolveConfig cfg = small_config();
  MinimizeResult res = minimize(cfg, w.ops, w.basis, w.ops.constant(1.0, 4),
                                w.ops.constant(2.0, 4));
  REQUIRE(res.converged);
  double target = 3.0 * kPi - 8.0 * kPi * std::log(2.0);
  CHECK(res.energy <= target + 1e-4);
  PdeResidual pr = pde_residual(res.state);
  CHECK(pr.sup_u <= 1e-6);
  CHECK(pr.norm_psi <= 1e-6);
  CHECK(constraint_residuals(res.state).max_abs() <= cfg.tol_constraint);
  CHECK(!res.history.empty());
}

TEST_CASE("minimize finds the trivial-spinor branch for small h2") {
  const auto& w = sltest::world();
  SolveConfig cfg = small_config();
  cfg.init = InitKind::random;
  cfg.seed = 4;
  MinimizeResult res = minimize(cfg, w.ops, w.basis, w.ops.constant(1.0, 4),
                                w.ops.constant(0.5, 4));
  REQUIRE(res.converged);
  CHECK(std::sqrt(res.state.psi.l2_norm_sq()) <= 1e-6);
  CHECK(std::abs(res.energy) <= 1e-4);
}

TEST_CASE("parity solve satisfies Kazdan-Warner") {
  const auto& w = sltest::world();
  Eigen::VectorXd leg = Eigen::VectorXd::Zero(3);
  leg[0] = 1.0;
  leg[2] = 0.5;
  ScalarField h1 = w.ops.zonal_legendre(leg, 4);
  SolveConfig cfg = small_config();
  cfg.parity_even = true;
  MinimizeResult res = minimize(cfg, w.ops, w.basis, h1,
                                w.ops.constant(1.0, 4));
  REQUIRE(res.converged);
  CHECK(kazdan_warner(w.ops, res.state.u, h1).norm() <= 1e-5);
  // parity actually enforced
  for (int l = 1; l <= res.state.u.band; l += 2)
    for (int m = -l; m <= l; ++m)
      CHECK(std::abs(res.state.u.coeff(l, m)) <= 1e-12);
}

TEST_CASE("parity solve rejects odd couplings") {
  const auto& w = sltest::world();
  Eigen::VectorXd x3(w.grid.n_nodes());
  for (int i = 0; i < w.grid.n_nodes(); ++i) x3[i] = w.grid.nodes[i][2];
  ScalarField h1 = w.ops.field_from_values(
      Eigen::VectorXd::Ones(w.grid.n_nodes()) + 0.3 * x3, 2);
  SolveConfig cfg = small_config();
  cfg.parity_even = true;
  CHECK_THROWS_AS((void)minimize(cfg, w.ops, w.basis, h1,
                                 w.ops.constant(1.0, 4)),
                  FunctionalError);
}

TEST_CASE("minimize is deterministic for a fixed seed") {
  const auto& w = sltest::world();
  SolveConfig cfg = small_config();
  cfg.seed = 9;
  MinimizeResult a = minimize(cfg, w.ops, w.basis, w.ops.constant(1.0, 4),
                              w.ops.constant(2.0, 4));
  MinimizeResult b = minimize(cfg, w.ops, w.basis, w.ops.constant(1.0, 4),
                              w.ops.constant(2.0, 4));
  CHECK(a.energy == b.energy);
  CHECK(a.iterations == b.iterations);
  CHECK((a.state.u.coeffs - b.state.u.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("newton refinement") {
  const auto& w = sltest::world();

  SUBCASE("exact solution is a fixed point") {
    NewtonResult nr = newton_refine(rho_state(w, 2.0), 1e-8);
    CHECK(nr.converged);
    CHECK(nr.iterations == 0);
  }

  SUBCASE("quadratic convergence from a nearby start") {
    std::mt19937 rng(223);
    std::normal_distribution<double> nd;
    SolutionPair s = rho_state(w, 2.0);
    ScalarField u = s.u;
    for (int i = 0; i < u.coeffs.size(); ++i) u.coeffs[i] += 1e-3 * nd(rng);
    u = w.ops.field_from_coeffs(u.coeffs, u.band);
    VecXc a = s.psi.coeffs();
    for (int j = 0; j < a.size(); ++j) a[j] += 1e-3 * Complex(nd(rng), nd(rng));
    SolutionPair pert(w.ops, w.basis, u, SpinorState(w.basis, a), s.h1, s.h2);
    NewtonResult nr = newton_refine(pert, 1e-10);
    CHECK(nr.converged);
    CHECK(nr.iterations <= 8);
    CHECK(nr.sup_residual <= 1e-10);
  }

  SUBCASE("far-field start returns unconverged") {
    SolutionPair far(w.ops, w.basis, w.ops.constant(2.0, 4),
                     w.basis.zero_state(), w.ops.constant(1.0, 4),
                     w.ops.constant(1.0, 4));
    NewtonResult nr = newton_refine(far, 1e-10, 3);
    CHECK(!nr.converged);
  }
}

TEST_CASE("continuation tracks the nontrivial branch") {
  const auto& w = sltest::world();
  SolveConfig cfg = small_config();
  cfg.rho_start = 1.0;
  cfg.rho_end = 2.0;
  cfg.rho_step = 0.5;
  std::ostringstream log;
  auto points = continuation(cfg, w.ops.constant(1.0, 4), w.ops, w.basis, &log);
  REQUIRE(points.size() == 3);
  for (const auto& p : points) {
    CHECK(p.result.converged);
    CHECK(std::isfinite(p.psi_h_half));
    double c = coupling_integral(p.result.state);
    CHECK(c >= -1e-8);
    CHECK(c <= 4.0 * kPi + 1e-8);
  }
  // the rho = 2 endpoint should sit on the explicit family energy
  double target = 3.0 * kPi - 8.0 * kPi * std::log(2.0);
  CHECK(points.back().result.energy == doctest::Approx(target).epsilon(1e-6));
}
