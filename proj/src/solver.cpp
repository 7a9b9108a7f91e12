#include "sl/solver.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>
#include <random>

namespace sl {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Unconstrained variable layout: [u coeffs | Re a | Im a].
struct Packing {
  int n_u = 0, n_b = 0;
  int dim() const { return n_u + 2 * n_b; }

  Eigen::VectorXd pack(const SolutionPair& s) const {
    Eigen::VectorXd x(dim());
    x.head(n_u) = s.u.coeffs;
    x.segment(n_u, n_b) = s.psi.coeffs().real();
    x.tail(n_b) = s.psi.coeffs().imag();
    return x;
  }

  void even_project(Eigen::VectorXd& x) const {
    int band = static_cast<int>(std::lround(std::sqrt(double(n_u)))) - 1;
    for (int l = 1; l <= band; l += 2)
      for (int m = -l; m <= l; ++m) x[l * l + l + m] = 0.0;
  }
};

// Augmented-Lagrangian merit for fixed multipliers and penalty.
struct ALProblem {
  const Harmonics* ops;
  const DiracBasis* basis;
  const ScalarField* h1;
  const ScalarField* h2;
  Packing pk;
  bool parity = false;
  double gauge = 0.0;

  double y_mass = 0.0, y_neh = 0.0;
  VecXc y_neg;
  std::vector<int> neg_idx;
  double mu = 10.0;

  SolutionPair make_state(const Eigen::VectorXd& x) const {
    int band = static_cast<int>(std::lround(std::sqrt(double(pk.n_u)))) - 1;
    ScalarField u = ops->field_from_coeffs(x.head(pk.n_u), band);
    VecXc a(pk.n_b);
    a.real() = x.segment(pk.n_u, pk.n_b);
    a.imag() = x.tail(pk.n_b);
    return SolutionPair(*ops, *basis, std::move(u), SpinorState(*basis, a),
                        *h1, *h2);
  }

  // merit value and (optionally) its gradient in the packed layout
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    SolutionPair s = make_state(x);
    const SphereGrid& g = ops->grid();
    Eigen::VectorXd e2u = ops->exp_values(s.u, 2.0);
    Eigen::VectorXd eu = ops->exp_values(s.u, 1.0);
    Eigen::VectorXd w = h2->values.cwiseProduct(eu);
    const Eigen::VectorXd& dens = s.psi.density();
    VecXc p = basis->project_weighted(s.psi, w);

    double P = g.integrate(h1->values.cwiseProduct(e2u));
    double coup = g.integrate(w.cwiseProduct(dens));
    double K = basis->dirac_pairing(s.psi);
    double intu = std::sqrt(kFourPi) * s.u.coeffs[0];

    double E = ops->dirichlet_energy(s.u) + 2.0 * intu - P +
               2.0 * (K - coup) + kFourPi;
    double r_m = P + coup - kFourPi;
    double r_n = K - coup;

    double m = E + y_mass * r_m + 0.5 * mu * r_m * r_m + y_neh * r_n +
               0.5 * mu * r_n * r_n;
    VecXc t_neg(neg_idx.size());
    for (size_t q = 0; q < neg_idx.size(); ++q) {
      int j = neg_idx[q];
      Complex r = basis->lambda(j) * s.psi.coeffs()[j] - p[j];
      m += (std::conj(y_neg[q]) * r).real() + 0.5 * mu * std::norm(r);
      t_neg[q] = y_neg[q] + mu * r;
    }
    Vec3 cen = Vec3::Zero();
    if (gauge > 0.0) {
      for (int i = 0; i < g.n_nodes(); ++i)
        cen += g.weights[i] * e2u[i] * g.nodes[i];
      cen /= kFourPi;
      m += gauge * cen.squaredNorm();
    }

    if (grad) {
      double t_m = y_mass + mu * r_m, t_n = y_neh + mu * r_n;
      // spinor built from the shifted negative multipliers
      VecXc t_full = VecXc::Zero(basis->size());
      for (size_t q = 0; q < neg_idx.size(); ++q) t_full[neg_idx[q]] = t_neg[q];
      SpinorState t_state(*basis, t_full);

      Eigen::VectorXd pv(g.n_nodes());
      for (int i = 0; i < g.n_nodes(); ++i) {
        double h1e = h1->values[i] * e2u[i];
        double wd = w[i] * dens[i];
        double v = 2.0 - 2.0 * h1e - 2.0 * wd;  // dE/du pointwise
        v += t_m * (2.0 * h1e + wd) - t_n * wd;
        v -= w[i] * (s.psi.comp0()[i] * std::conj(t_state.comp0()[i]) +
                     s.psi.comp1()[i] * std::conj(t_state.comp1()[i]))
                 .real();
        if (gauge > 0.0)
          v += gauge * (2.0 / kFourPi) * 2.0 * e2u[i] * cen.dot(g.nodes[i]);
        pv[i] = v;
      }
      int band = s.u.band;
      Eigen::VectorXd gu = ops->analyze(pv, band);
      for (int l = 0; l <= band; ++l)
        for (int mm = -l; mm <= l; ++mm)
          gu[l * l + l + mm] += 2.0 * l * (l + 1) * s.u.coeff(l, mm);

      VecXc pt = basis->project_weighted(t_state, w);
      VecXc ga(pk.n_b);
      for (int j = 0; j < pk.n_b; ++j) {
        Complex v = 4.0 * (basis->lambda(j) * s.psi.coeffs()[j] - p[j]);
        v += t_m * 2.0 * p[j];
        v += t_n * (2.0 * basis->lambda(j) * s.psi.coeffs()[j] - 2.0 * p[j]);
        v += basis->lambda(j) * t_full[j] - pt[j];
        ga[j] = v;
      }

      grad->resize(pk.dim());
      grad->head(pk.n_u) = gu;
      grad->segment(pk.n_u, pk.n_b) = ga.real();
      grad->tail(pk.n_b) = ga.imag();
      if (parity) pk.even_project(*grad);
    }
    return m;
  }
};

// plain L-BFGS with Armijo backtracking; returns iterations used
int lbfgs(const ALProblem& prob, Eigen::VectorXd& x, double gtol,
          int max_iter) {
  const int mem = 8;
  std::deque<Eigen::VectorXd> ss, ys;
  std::deque<double> rhos;
  Eigen::VectorXd g, gn;
  double f = prob.eval(x, &g);
  int it = 0;
  for (; it < max_iter; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= gtol) break;
    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      alpha[i] = rhos[i] * ss[i].dot(q);
      q -= alpha[i] * ys[i];
    }
    double gamma = 1.0;
    if (!ss.empty()) {
      double yy = ys.back().squaredNorm();
      if (yy > 0) gamma = ss.back().dot(ys.back()) / yy;
    }
    q *= gamma;
    for (size_t i = 0; i < ss.size(); ++i) {
      double beta = rhos[i] * ys[i].dot(q);
      q += (alpha[i] - beta) * ss[i];
    }
    Eigen::VectorXd d = -q;
    double slope = g.dot(d);
    if (slope >= 0.0) {  // fall back to steepest descent
      d = -g;
      slope = -g.squaredNorm();
      ss.clear();
      ys.clear();
      rhos.clear();
    }
    double step = 1.0;
    bool ok = false;
    Eigen::VectorXd xn;
    double fn = f;
    for (int ls = 0; ls < 40; ++ls) {
      xn = x + step * d;
      if (prob.parity) prob.pk.even_project(xn);
      try {
        fn = prob.eval(xn, &gn);
      } catch (const std::overflow_error&) {
        step *= 0.5;
        continue;
      }
      if (fn <= f + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;
    Eigen::VectorXd s = xn - x, yv = gn - g;
    double sy = s.dot(yv);
    if (sy > 1e-14 * s.norm() * yv.norm()) {
      ss.push_back(s);
      ys.push_back(yv);
      rhos.push_back(1.0 / sy);
      if (static_cast<int>(ss.size()) > mem) {
        ss.pop_front();
        ys.pop_front();
        rhos.pop_front();
      }
    }
    x = xn;
    f = fn;
    g = gn;
  }
  return it;
}

SolutionPair build_init(const SolveConfig& cfg, const Harmonics& ops,
                        const DiracBasis& basis, const ScalarField& h1,
                        const ScalarField& h2) {
  std::mt19937 rng(cfg.seed);
  std::normal_distribution<double> nd;
  int n_u = (cfg.band_l + 1) * (cfg.band_l + 1);
  Eigen::VectorXd uc = Eigen::VectorXd::Zero(n_u);
  VecXc a = VecXc::Zero(basis.size());

  switch (cfg.init) {
    case InitKind::zero:
      break;
    case InitKind::perturbed_special: {
      double rho = std::max(1.0, h2.mean());
      uc[0] = -std::log(rho) * std::sqrt(kFourPi);
      for (int i = 1; i < n_u; ++i) uc[i] = 1e-2 * nd(rng);
      a = basis.killing_spinor().coeffs() *
          (std::sqrt(rho * rho - 1.0) / rho);
      break;
    }
    case InitKind::random: {
      for (int i = 0; i < n_u; ++i) uc[i] = 0.1 * nd(rng);
      for (int j = 0; j < basis.size(); ++j)
        a[j] = 0.1 * Complex(nd(rng), nd(rng));
      break;
    }
  }
  if (cfg.parity_even)
    for (int l = 1; l <= cfg.band_l; l += 2)
      for (int m = -l; m <= l; ++m) uc[l * l + l + m] = 0.0;
  return SolutionPair(ops, basis, ops.field_from_coeffs(uc, cfg.band_l),
                      SpinorState(basis, a), h1, h2);
}

}  // namespace

void SolveConfig::validate() const {
  if (band_l < 1 || band_lambda < 1)
    throw std::invalid_argument("SolveConfig: bands must be >= 1");
  if (tol_constraint <= 0 || tol_gradient <= 0 || tol_residual <= 0)
    throw std::invalid_argument("SolveConfig: tolerances must be positive");
  if (penalty_growth <= 1.0)
    throw std::invalid_argument("SolveConfig: penalty growth must exceed 1");
  if (max_outer < 1 || max_inner < 1)
    throw std::invalid_argument("SolveConfig: iteration limits must be >= 1");
  if (rho_step <= 0 || rho_end < rho_start)
    throw std::invalid_argument("SolveConfig: bad continuation schedule");
}

PdeResidual pde_residual(const SolutionPair& s) {
  const Harmonics& ops = *s.ops;
  ScalarField lap = ops.laplacian(s.u);
  Eigen::VectorXd e2u = ops.exp_values(s.u, 2.0);
  Eigen::VectorXd w = s.h2.values.cwiseProduct(ops.exp_values(s.u, 1.0));
  Eigen::VectorXd vals = -lap.values - s.h1.values.cwiseProduct(e2u) +
                         Eigen::VectorXd::Ones(ops.grid().n_nodes()) -
                         w.cwiseProduct(s.psi.density());
  PdeResidual r;
  r.r_u = ops.field_from_values(vals, s.u.band);
  VecXc p = s.basis->project_weighted(s.psi, w);
  r.r_psi.resize(s.basis->size());
  for (int j = 0; j < s.basis->size(); ++j)
    r.r_psi[j] = s.basis->lambda(j) * s.psi.coeffs()[j] - p[j];
  r.sup_u = vals.lpNorm<Eigen::Infinity>();
  r.norm_psi = std::sqrt(r.r_psi.squaredNorm());
  return r;
}

MinimizeResult minimize(const SolveConfig& cfg, const Harmonics& ops,
                        const DiracBasis& basis, const ScalarField& h1,
                        const ScalarField& h2,
                        std::optional<SolutionPair> init_state,
                        std::ostream* log) {
  cfg.validate();
  if (h1.values.minCoeff() <= 0)
    throw FunctionalError("minimize: h1 must be positive");
  if (cfg.parity_even) {
    // Theorem hypotheses: both coupling functions even
    auto even_dev = [&](const ScalarField& h) {
      double d = 0.0;
      const SphereGrid& g = ops.grid();
      for (int i = 0; i < g.n_theta; ++i)
        for (int k = 0; k < g.n_phi; ++k) {
          int anti = g.node_index(g.n_theta - 1 - i,
                                  (k + g.n_phi / 2) % g.n_phi);
          d = std::max(d, std::abs(h.values[g.node_index(i, k)] -
                                   h.values[anti]));
        }
      return d;
    };
    if (even_dev(h1) > 1e-10 || even_dev(h2) > 1e-10)
      throw FunctionalError("minimize: parity solve needs even h1, h2");
  }

  MinimizeResult res;
  SolutionPair s =
      init_state ? *init_state : build_init(cfg, ops, basis, h1, h2);

  ALProblem prob;
  prob.ops = s.ops;
  prob.basis = s.basis;
  prob.h1 = &s.h1;
  prob.h2 = &s.h2;
  prob.pk.n_u = static_cast<int>(s.u.coeffs.size());
  prob.pk.n_b = s.basis->size();
  prob.parity = cfg.parity_even;
  prob.gauge = cfg.gauge_weight;
  prob.mu = cfg.penalty_init;
  for (int j = 0; j < s.basis->size(); ++j)
    if (s.basis->lambda(j) < 0) prob.neg_idx.push_back(j);
  prob.y_neg = VecXc::Zero(prob.neg_idx.size());

  try {
    s = retract(s, cfg.tol_constraint);
  } catch (const FunctionalError&) {
    // infeasible start is repaired progressively by the outer loop
  }
  Eigen::VectorXd x = prob.pk.pack(s);
  if (cfg.parity_even) prob.pk.even_project(x);

  double prev_res = std::numeric_limits<double>::infinity();
  for (int outer = 1; outer <= cfg.max_outer; ++outer) {
    int used = lbfgs(prob, x, cfg.tol_gradient, cfg.max_inner);
    res.iterations += used;

    SolutionPair cand = prob.make_state(x);
    const ConstraintResidual& r_pre = constraint_residuals(cand);
    double res_pre = r_pre.max_abs();

    // multiplier update from the pre-retraction residuals
    prob.y_mass += prob.mu * r_pre.r_mass;
    prob.y_neh += prob.mu * r_pre.r_nehari;
    for (size_t q = 0; q < prob.neg_idx.size(); ++q)
      prob.y_neg[q] += prob.mu * r_pre.r_neg[q];

    try {
      cand = retract(cand, cfg.tol_constraint);
      x = prob.pk.pack(cand);
      if (cfg.parity_even) prob.pk.even_project(x);
      cand = prob.make_state(x);
    } catch (const FunctionalError&) {
      // keep the unretracted iterate; penalty growth will push it in
    }

    Eigen::VectorXd g;
    double merit = prob.eval(x, &g);
    // convergence gauge: the plain Lagrangian gradient (no penalty term),
    // which is insensitive to the growing mu
    {
      double mu_keep = prob.mu;
      prob.mu = 0.0;
      prob.eval(x, &g);
      prob.mu = mu_keep;
    }
    double gnorm = g.lpNorm<Eigen::Infinity>();
    double e = energy(cand);
    double res_now = constraint_residuals(cand).max_abs();

    OuterRecord rec{outer, merit, res_now, e, gnorm, used};
    res.history.push_back(rec);
    if (log)
      *log << "outer " << outer << " merit " << merit << " max_residual "
           << res_now << " energy " << e << " grad " << gnorm << " inner "
           << used << "\n";

    if (res_now <= cfg.tol_constraint && gnorm <= cfg.tol_gradient) {
      res.converged = true;
      res.state = cand;
      res.energy = e;
      return res;
    }
    if (res_pre > cfg.tol_constraint && res_pre > 0.25 * prev_res)
      prob.mu = std::min(prob.mu * cfg.penalty_growth, 1e8);
    prev_res = res_pre;
    res.state = cand;
    res.energy = e;
  }
  return res;
}

NewtonResult newton_refine(const SolutionPair& state, double tol,
                           int max_iter) {
  const Harmonics& ops = *state.ops;
  const DiracBasis& basis = *state.basis;
  const int n_u = static_cast<int>(state.u.coeffs.size());
  const int n_b = basis.size();
  const int band = state.u.band;
  const int dim = n_u + 2 * n_b;
  const SphereGrid& g = ops.grid();

  auto residual_vec = [&](const SolutionPair& s, double& sup) {
    PdeResidual r = pde_residual(s);
    Eigen::VectorXd F(dim);
    F.head(n_u) = r.r_u.coeffs;
    F.segment(n_u, n_b) = r.r_psi.real();
    F.tail(n_b) = r.r_psi.imag();
    sup = std::max(r.sup_u, r.r_psi.lpNorm<Eigen::Infinity>());
    return F;
  };

  NewtonResult out;
  out.state = state;
  double sup = 0.0;
  Eigen::VectorXd F = residual_vec(state, sup);
  out.sup_residual = sup;
  if (sup > 1e1) return out;  // far field: soft precondition, flag only

  SolutionPair s = state;
  for (int it = 0; it < max_iter && sup > tol; ++it) {
    Eigen::VectorXd e2u = ops.exp_values(s.u, 2.0);
    Eigen::VectorXd w = s.h2.values.cwiseProduct(ops.exp_values(s.u, 1.0));
    const Eigen::VectorXd& dens = s.psi.density();
    Eigen::VectorXd diag_u = -2.0 * s.h1.values.cwiseProduct(e2u) -
                             w.cwiseProduct(dens);

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
    // u columns
    Eigen::VectorXd ec = Eigen::VectorXd::Zero(n_u);
    for (int c = 0; c < n_u; ++c) {
      ec[c] = 1.0;
      Eigen::VectorXd yv = ops.synthesize(ec, band);
      ec[c] = 0.0;
      int l = static_cast<int>(std::floor(std::sqrt(double(c))));
      Eigen::VectorXd col_u = ops.analyze(diag_u.cwiseProduct(yv), band);
      col_u[c] += l * (l + 1);
      J.block(0, c, n_u, 1) = col_u;
      VecXc col_a = -basis.project_weighted(s.psi, w.cwiseProduct(yv));
      J.block(n_u, c, n_b, 1) = col_a.real();
      J.block(n_u + n_b, c, n_b, 1) = col_a.imag();
    }
    // spinor columns: complex-linear part lambda - M, M_{ji} = <w phi_i, phi_j>
    Eigen::MatrixXcd M(n_b, n_b);
    for (int i = 0; i < n_b; ++i) {
      VecXc e = VecXc::Zero(n_b);
      e[i] = 1.0;
      M.col(i) = basis.project_weighted(SpinorState(basis, e), w);
    }
    for (int i = 0; i < n_b; ++i) {
      VecXc col = -M.col(i);
      col[i] += basis.lambda(i);
      // d r_u / d a_i through the density, for Re and Im parts
      VecXc pair(g.n_nodes());
      for (int k = 0; k < g.n_nodes(); ++k)
        pair[k] = basis.comp0()(i, k) * std::conj(s.psi.comp0()[k]) +
                  basis.comp1()(i, k) * std::conj(s.psi.comp1()[k]);
      Eigen::VectorXd dre(g.n_nodes()), dim_(g.n_nodes());
      for (int k = 0; k < g.n_nodes(); ++k) {
        dre[k] = -w[k] * 2.0 * pair[k].real();
        dim_[k] = w[k] * 2.0 * pair[k].imag();
      }
      J.block(0, n_u + i, n_u, 1) = ops.analyze(dre, band);
      J.block(0, n_u + n_b + i, n_u, 1) = ops.analyze(dim_, band);
      J.block(n_u, n_u + i, n_b, 1) = col.real();
      J.block(n_u + n_b, n_u + i, n_b, 1) = col.imag();
      VecXc coli = col * Complex(0.0, 1.0);
      J.block(n_u, n_u + n_b + i, n_b, 1) = coli.real();
      J.block(n_u + n_b, n_u + n_b + i, n_b, 1) = coli.imag();
    }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU |
                                              Eigen::ComputeThinV);
    out.min_singular_value = svd.singularValues().tail(1)[0];
    svd.setThreshold(1e-10);  // the Moebius/phase orbit is in the kernel
    Eigen::VectorXd dx = svd.solve(-F);

    // damped update on the residual norm
    double alpha = 1.0;
    bool improved = false;
    double f0 = F.norm();
    for (int ls = 0; ls < 12; ++ls) {
      Eigen::VectorXd xc(dim);
      xc.head(n_u) = s.u.coeffs;
      xc.segment(n_u, n_b) = s.psi.coeffs().real();
      xc.tail(n_b) = s.psi.coeffs().imag();
      xc += alpha * dx;
      ScalarField un = ops.field_from_coeffs(xc.head(n_u), band);
      VecXc an(n_b);
      an.real() = xc.segment(n_u, n_b);
      an.imag() = xc.tail(n_b);
      SolutionPair sn(ops, basis, std::move(un), SpinorState(basis, an),
                      s.h1, s.h2);
      double sup_n = 0.0;
      Eigen::VectorXd Fn;
      try {
        Fn = residual_vec(sn, sup_n);
      } catch (const std::overflow_error&) {
        alpha *= 0.5;
        continue;
      }
      if (Fn.norm() < f0) {
        s = std::move(sn);
        F = std::move(Fn);
        sup = sup_n;
        improved = true;
        break;
      }
      alpha *= 0.5;
    }
    out.iterations = it + 1;
    if (!improved) {
      out.sup_residual = sup;
      out.state = s;
      return out;  // converged stays false unless tol already met below
    }
  }
  out.state = s;
  out.sup_residual = sup;
  out.converged = sup <= tol;
  return out;
}

std::vector<ContinuationPoint> continuation(const SolveConfig& cfg,
                                            const ScalarField& h1,
                                            const Harmonics& ops,
                                            const DiracBasis& basis,
                                            std::ostream* log) {
  cfg.validate();
  std::vector<ContinuationPoint> out;
  std::optional<SolutionPair> warm;
  for (double rho = cfg.rho_start; rho <= cfg.rho_end + 1e-12;
       rho += cfg.rho_step) {
    ScalarField h2 = ops.constant(rho, h1.band);
    std::optional<SolutionPair> start;
    if (warm) {
      SpinorState psi = warm->psi;
      if (psi.l2_norm_sq() < 1e-12 && rho > 1.0) {
        // psi = 0 is always stationary; kick the warm start off the
        // trivial branch with the closed-form spinor for this rho
        psi = SpinorState(basis, basis.killing_spinor().coeffs() *
                                     (std::sqrt(rho * rho - 1.0) / rho));
      }
      start = SolutionPair(ops, basis, warm->u, psi, h1, h2);
    }
    if (log) *log << "continuation rho = " << rho << "\n";
    ContinuationPoint pt;
    pt.rho = rho;
    pt.result = minimize(cfg, ops, basis, h1, h2, start, log);
    pt.psi_h_half =
        std::sqrt(basis.h_half_norm(pt.result.state.psi).hilbert_sq);
    warm = pt.result.state;
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace sl
