// Acceptance gate: one pass/fail line per criterion, exit 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "sl/conformal.hpp"
#include "sl/report.hpp"

using namespace sl;
constexpr double kPi = std::numbers::pi;

namespace {

int g_failures = 0;

void report(int n, const std::string& name, bool ok, const std::string& detail) {
  std::printf("%s criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", n,
              name.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

SolutionPair rho_state(const Harmonics& ops, const DiracBasis& basis,
                       double rho) {
  VecXc a = basis.killing_spinor().coeffs() *
            (std::sqrt(rho * rho - 1.0) / rho);
  return SolutionPair(ops, basis, ops.constant(-std::log(rho), 4),
                      SpinorState(basis, a), ops.constant(1.0, 4),
                      ops.constant(rho, 4));
}

ScalarField random_field(const Harmonics& ops, int band, std::mt19937& rng,
                         double scale) {
  std::normal_distribution<double> nd;
  Eigen::VectorXd c((band + 1) * (band + 1));
  for (int l = 0; l <= band; ++l)
    for (int m = -l; m <= l; ++m)
      c[l * l + l + m] = scale * nd(rng) / (1.0 + l);
  return ops.field_from_coeffs(c, band);
}

VecXc random_spinor(const DiracBasis& basis, std::mt19937& rng, double scale) {
  std::normal_distribution<double> nd;
  VecXc a(basis.size());
  for (int j = 0; j < basis.size(); ++j)
    a[j] = scale * Complex(nd(rng), nd(rng));
  return a;
}

MobiusMap random_mobius(std::mt19937& rng, double scale) {
  std::normal_distribution<double> nd;
  Eigen::Matrix2cd a;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) a(r, c) = Complex(nd(rng), nd(rng));
  a -= Eigen::Matrix2cd::Identity() * (a.trace() / 2.0);
  a *= scale;
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd term = Eigen::Matrix2cd::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = (term * a / double(k)).eval();
    m += term;
  }
  return MobiusMap(m);
}

}  // namespace

int main() {
  SphereGrid grid16 = build_grid(16);
  Harmonics ops16(grid16, 16);

  // ---- 1: Dirac spectrum, multiplicities, orthonormality at Lambda = 5
  {
    auto t0 = std::chrono::steady_clock::now();
    DiracBasis basis(grid16, 5);
    std::map<int, int> mult;
    for (int j = 0; j < basis.size(); ++j)
      mult[int(std::lround(basis.lambda(j)))]++;
    bool spectrum_ok = true;
    for (int k = 0; k < 5; ++k) {
      spectrum_ok = spectrum_ok && mult[k + 1] == 2 * (k + 1) &&
                    mult[-(k + 1)] == 2 * (k + 1);
    }
    spectrum_ok = spectrum_ok && mult.size() == 10;
    double gram_err = 0.0;
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(grid16.n_nodes());
    for (int i = 0; i < basis.size(); ++i) {
      VecXc e = VecXc::Zero(basis.size());
      e[i] = 1.0;
      VecXc row = basis.project_weighted(SpinorState(basis, e), ones);
      for (int j = 0; j < basis.size(); ++j)
        gram_err = std::max(gram_err,
                            std::abs(row[j] - Complex(i == j ? 1.0 : 0.0)));
    }
    double dt = seconds_since(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "orthonormality %.2e, %.1fs", gram_err, dt);
    report(1, "Dirac spectrum and multiplicities at Lambda = 5",
           spectrum_ok && gram_err <= 1e-9 && dt <= 10.0, buf);
  }

  DiracBasis basis16(grid16, 5);

  // ---- 2: closed-form solution family
  {
    bool ok = true;
    double worst_pde = 0.0, worst_res = 0.0, worst_mass = 0.0, worst_e = 0.0;
    for (double rho : {1.0, 2.0, 5.0}) {
      SolutionPair s = rho_state(ops16, basis16, rho);
      PdeResidual pr = pde_residual(s);
      worst_pde = std::max({worst_pde, pr.sup_u, pr.norm_psi});
      const ConstraintResidual& cr = constraint_residuals(s);
      worst_res = std::max(worst_res, cr.max_abs());
      double mass =
          grid16.integrate(s.h1.values.cwiseProduct(ops16.exp_values(s.u, 2.0)) +
                           s.h2.values.cwiseProduct(ops16.exp_values(s.u, 1.0))
                               .cwiseProduct(s.psi.density()));
      worst_mass = std::max(worst_mass, std::abs(mass - 4.0 * kPi));
      double target = -8.0 * kPi * std::log(rho) +
                      4.0 * kPi * (rho * rho - 1.0) / (rho * rho);
      worst_e = std::max(worst_e, std::abs(energy(s) - target));
    }
    ok = worst_pde <= 1e-6 && worst_res <= 1e-8 && worst_mass <= 1e-8 &&
         worst_e <= 1e-8;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "pde %.1e, constraints %.1e, mass %.1e, energy %.1e",
                  worst_pde, worst_res, worst_mass, worst_e);
    report(2, "explicit family rho in {1, 2, 5}", ok, buf);
  }

  // ---- 3: trivial-spinor branch
  {
    SolveConfig cfg;
    cfg.band_l = 16;
    cfg.band_lambda = 5;
    cfg.init = InitKind::random;
    cfg.seed = 3;
    MinimizeResult res = minimize(cfg, ops16, basis16, ops16.constant(1.0, 4),
                                  ops16.constant(0.5, 4));
    double psi_norm = std::sqrt(res.state.psi.l2_norm_sq());
    bool ok = res.converged && (psi_norm > 1e-6 || std::abs(res.energy) <= 1e-4);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "converged %d, |psi| %.1e, |E| %.1e",
                  int(res.converged), psi_norm, std::abs(res.energy));
    report(3, "trivial-spinor branch has zero energy", ok, buf);
  }

  // ---- 4: Kazdan-Warner
  {
    Eigen::VectorXd leg = Eigen::VectorXd::Zero(3);
    leg[0] = 1.0;
    leg[2] = 0.5;
    ScalarField h1 = ops16.zonal_legendre(leg, 4);
    SolveConfig cfg;
    cfg.band_l = 16;
    cfg.band_lambda = 5;
    cfg.parity_even = true;
    MinimizeResult res = minimize(cfg, ops16, basis16, h1,
                                  ops16.constant(1.0, 4));
    double kw = res.converged
                    ? kazdan_warner(ops16, res.state.u, h1).norm()
                    : 1e9;

    Eigen::VectorXd x3(grid16.n_nodes());
    for (int i = 0; i < grid16.n_nodes(); ++i) x3[i] = grid16.nodes[i][2];
    ScalarField h = ops16.field_from_values(x3, 2);
    Vec3 v = kazdan_warner(ops16, ops16.constant(0.0, 2), h);
    double static_err = (v - Vec3(0, 0, 8.0 * kPi / 3.0)).norm();

    bool ok = res.converged && kw <= 1e-5 && static_err <= 1e-8;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "solve KW %.1e, static KW err %.1e", kw,
                  static_err);
    report(4, "Kazdan-Warner obstruction", ok, buf);
  }

  // ---- 5: Moser-Trudinger property suites
  {
    auto t0 = std::chrono::steady_clock::now();
    SphereGrid grid8 = build_grid(8);
    Harmonics ops8(grid8, 8);
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    int violations = 0;
    bool equality_ok = true;
    for (auto variant : {MtVariant::standard, MtVariant::centroid_sharp,
                         MtVariant::even}) {
      MtResult z = ops8.mt_check(ops8.constant(0.0, 8), variant);
      equality_ok = equality_ok && std::abs(z.margin) <= 1e-12 * std::abs(z.rhs);
      for (int s = 0; s < 1000; ++s) {
        Eigen::VectorXd c(81);
        for (int l = 0; l <= 8; ++l)
          for (int m = -l; m <= l; ++m) {
            bool zero = variant != MtVariant::standard && (l % 2 == 1);
            c[l * l + l + m] = zero ? 0.0 : 0.4 * nd(rng) / (1.0 + l);
          }
        if (!ops8.mt_check(ops8.field_from_coeffs(c, 8), variant).satisfied)
          ++violations;
      }
    }
    double dt = seconds_since(t0);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d violations, equality %s, %.1fs",
                  violations, equality_ok ? "exact" : "broken", dt);
    report(5, "Moser-Trudinger suites, 1000 samples per variant",
           violations == 0 && equality_ok && dt <= 60.0, buf);
  }

  // ---- 6: conformal invariance
  {
    std::mt19937 rng(6);
    ScalarField u = random_field(ops16, 6, rng, 0.4);
    double s0 = s_functional(ops16, u);
    double m0 = grid16.integrate(ops16.exp_values(u, 2.0));
    double worst_s = 0.0, worst_m = 0.0;
    for (int t = 0; t < 100; ++t) {
      MobiusMap m = random_mobius(rng, 0.1);
      ScalarField up = pullback_scalar(ops16, u, m);
      worst_s = std::max(worst_s, std::abs(s_functional(ops16, up) - s0));
      double mass = grid16.integrate(ops16.exp_values(up, 2.0));
      worst_m = std::max(worst_m, std::abs(mass - m0) / std::abs(m0));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "S drift %.1e, mass drift %.1e", worst_s,
                  worst_m);
    report(6, "conformal invariance over 100 Moebius maps",
           worst_s <= 1e-6 && worst_m <= 1e-6, buf);
  }

  // ---- 7: concentration of the bubble family
  {
    Vec3 q(0, 0, 1);
    auto density10 = [&](const Vec3& x) {
      return bubble_density_at(q, 10.0, BubbleNormalization::h1_eq_1, x);
    };
    double total = cap_integrate(density10, q, kPi, 400);
    double total_err = std::abs(total - 4.0 * kPi);

    ScalarField u10 = bubble_family(ops16, q, 10.0,
                                    BubbleNormalization::h1_eq_1);
    double ball = grid16.ball_mass(ops16.exp_values(u10, 2.0), q, 0.5);

    auto density1 = [&](const Vec3& x) {
      return bubble_density_at(q, 1.0, BubbleNormalization::h1_eq_1, x);
    };
    double cap1 = cap_integrate(density1, q, 0.5, 80);
    double cap1_err = std::abs(cap1 - 2.0 * kPi * (1.0 - std::cos(0.5)));

    bool ok = total_err <= 1e-8 && ball >= 2.0 * kPi && cap1_err <= 1e-8;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "total err %.1e, ball mass %.3f >= 2 pi, t=1 cap err %.1e",
                  total_err, ball, cap1_err);
    report(7, "bubble mass 4 pi and 2 pi threshold crossing", ok, buf);
  }

  // ---- 8: gradient correctness
  {
    std::mt19937 rng(8);
    std::normal_distribution<double> nd;
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      ScalarField u = random_field(ops16, 6, rng, 0.3);
      SpinorState psi(basis16, random_spinor(basis16, rng, 0.3));
      ScalarField h1 = random_field(ops16, 3, rng, 0.1);
      h1.values.array() += 1.2;
      h1 = ops16.field_from_values(h1.values, 3);
      ScalarField h2 = ops16.constant(0.8, 3);
      SolutionPair s(ops16, basis16, u, psi, h1, h2);
      ScalarField gu;
      VecXc gp;
      energy_gradient(s, gu, gp);
      Eigen::VectorXd du(u.coeffs.size());
      for (int i = 0; i < du.size(); ++i) du[i] = nd(rng);
      du.normalize();
      VecXc dp = random_spinor(basis16, rng, 1.0);
      dp /= dp.norm();
      auto shifted = [&](double t) {
        ScalarField ut = ops16.field_from_coeffs(u.coeffs + t * du, u.band);
        SpinorState pt(basis16, psi.coeffs() + t * dp);
        return energy(SolutionPair(ops16, basis16, ut, pt, h1, h2));
      };
      double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
      double analytic = gu.coeffs.dot(du) + gp.dot(dp).real();
      worst = std::max(worst,
                       std::abs(fd - analytic) / std::max(1.0, std::abs(fd)));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max relative error %.1e", worst);
    report(8, "energy gradient vs finite differences, 20 states",
           worst <= 1e-6, buf);
  }

  // ---- 9: constraint machinery
  {
    std::mt19937 rng(9);
    double worst_res = 0.0, worst_idem = 0.0, worst_red = 0.0;
    bool ok = true;
    for (int trial = 0; trial < 10; ++trial) {
      ScalarField u = random_field(ops16, 6, rng, 0.3);
      SpinorState psi(basis16, random_spinor(basis16, rng, 0.3));
      ScalarField h1 = random_field(ops16, 3, rng, 0.1);
      h1.values.array() += 1.2;
      h1 = ops16.field_from_values(h1.values, 3);
      SolutionPair s(ops16, basis16, u, psi, h1, ops16.constant(1.3, 3));
      try {
        SolutionPair r = retract(s, 1e-10);
        worst_res = std::max(worst_res, constraint_residuals(r).max_abs());
        SolutionPair rr = retract(r, 1e-10);
        worst_idem = std::max(
            {worst_idem, (rr.u.coeffs - r.u.coeffs).cwiseAbs().maxCoeff(),
             (rr.psi.coeffs() - r.psi.coeffs()).cwiseAbs().maxCoeff()});
        double e = energy(r);
        worst_red = std::max(worst_red, std::abs(e - reduced_energy(r)) /
                                            (1.0 + std::abs(e)));
      } catch (const FunctionalError&) {
        ok = false;
      }
    }
    ok = ok && worst_res <= 1e-10 && worst_idem <= 2e-10 && worst_red <= 1e-8;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "residual %.1e, idempotence %.1e, reduced identity %.1e",
                  worst_res, worst_idem, worst_red);
    report(9, "retraction and reduced-energy identity", ok, buf);
  }

  // ---- 10: spinor-bound diagnostic over the continuation family
  {
    SphereGrid grid12 = build_grid(12);
    Harmonics ops12(grid12, 12);
    DiracBasis basis12(grid12, 4);
    SolveConfig cfg;
    cfg.band_l = 12;
    cfg.band_lambda = 4;
    cfg.rho_start = 1.0;
    cfg.rho_end = 5.0;
    cfg.rho_step = 0.5;
    auto points = continuation(cfg, ops12.constant(1.0, 4), ops12, basis12);
    bool ok = points.size() == 9;
    double sup_h = 0.0, sup_c = 0.0;
    for (const auto& p : points) {
      ok = ok && p.result.converged && std::isfinite(p.psi_h_half);
      double c = coupling_integral(p.result.state);
      ok = ok && c >= -1e-8 && c <= 4.0 * kPi + 1e-8;
      sup_h = std::max(sup_h, p.psi_h_half);
      sup_c = std::max(sup_c, c);
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "%zu points, sup H1/2 %.3f, sup coupling %.4f < 4 pi",
                  points.size(), sup_h, sup_c);
    report(10, "continuation rho in [1, 5]: finite norms, coupling window",
           ok, buf);
  }

  // ---- 11: determinism and round trip
  {
    SphereGrid grid12 = build_grid(12);
    Harmonics ops12(grid12, 12);
    DiracBasis basis12(grid12, 4);
    SolveConfig cfg;
    cfg.band_l = 12;
    cfg.band_lambda = 4;
    cfg.seed = 11;
    auto run = [&] {
      return minimize(cfg, ops12, basis12, ops12.constant(1.0, 4),
                      ops12.constant(2.0, 4));
    };
    MinimizeResult a = run(), b = run();
    DiagnosticsReport ra = run_diagnostics(a.state);
    DiagnosticsReport rb = run_diagnostics(b.state);
    bool reports_equal = ra.to_json("T") == rb.to_json("T");

    Checkpoint ck = Checkpoint::from_state(a.state, cfg.seed, "acceptance");
    save_checkpoint(ck, "acceptance_rt.ckpt");
    Checkpoint back = load_checkpoint("acceptance_rt.ckpt");
    bool bits_ok =
        (back.u_coeffs - ck.u_coeffs).cwiseAbs().maxCoeff() == 0.0 &&
        (back.psi_coeffs - ck.psi_coeffs).cwiseAbs().maxCoeff() == 0.0 &&
        (back.h1_coeffs - ck.h1_coeffs).cwiseAbs().maxCoeff() == 0.0 &&
        (back.h2_coeffs - ck.h2_coeffs).cwiseAbs().maxCoeff() == 0.0;
    std::remove("acceptance_rt.ckpt");

    bool ok = a.converged && b.converged && a.energy == b.energy &&
              a.iterations == b.iterations && reports_equal && bits_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "energies bit-equal %d, reports equal %d, checkpoint exact %d",
                  int(a.energy == b.energy), int(reports_equal), int(bits_ok));
    report(11, "fixed-seed determinism and checkpoint round trip", ok, buf);
  }

  if (g_failures == 0) {
    std::printf("all 11 acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria failed\n", g_failures);
  return 1;
}
