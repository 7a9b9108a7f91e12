#include "sl/dirac.hpp"

#include <cmath>
#include <numbers>

namespace sl {

namespace {
constexpr double kFourPi = 4.0 * std::numbers::pi;

double lfact(int n) { return std::lgamma(n + 1.0); }
}  // namespace

double wigner_d(int twice_j, int twice_m, int twice_n, double theta) {
  // (j+m), (j-m), (j+n), (j-n), (m-n) are all integers
  int jpm = (twice_j + twice_m) / 2, jmm = (twice_j - twice_m) / 2;
  int jpn = (twice_j + twice_n) / 2, jmn = (twice_j - twice_n) / 2;
  if (jpm < 0 || jmm < 0 || jpn < 0 || jmn < 0) return 0.0;
  int dmn = (twice_m - twice_n) / 2;
  double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  double pref = 0.5 * (lfact(jpm) + lfact(jmm) + lfact(jpn) + lfact(jmn));
  // k range keeps (j+n-k)!, k!, (m-n+k)!, (j-m-k)! nonnegative
  int k_lo = std::max(0, -dmn);
  int k_hi = std::min(jpn, jmm);
  double sum = 0.0;
  for (int k = k_lo; k <= k_hi; ++k) {
    double ln = pref - lfact(jpn - k) - lfact(k) - lfact(dmn + k) -
                lfact(jmm - k);
    int pc = twice_j - 2 * k - dmn;
    int ps = dmn + 2 * k;
    double term = std::exp(ln) * std::pow(c, pc) * std::pow(s, ps);
    sum += ((dmn + k) % 2 != 0) ? -term : term;
  }
  return sum;
}

DiracBasis::DiracBasis(const SphereGrid& grid, int band)
    : grid_(&grid), band_(band) {
  if (band < 1) throw DiracError("DiracBasis: band must be >= 1");
  // products of two basis spinors have combined degree <= 2*band
  if (2 * band > grid.l_exact)
    throw DiracError("DiracBasis: insufficient grid resolution for band");

  // enumerate (sign, k, m): j = k + 1/2, lambda = sign*(k+1)
  for (int sign = +1; sign >= -1; sign -= 2)
    for (int k = 0; k + 1 <= band; ++k) {
      int tj = 2 * k + 1;  // 2j
      for (int tm = -tj; tm <= tj; tm += 2) {
        lambda_.push_back(sign * double(k + 1));
        twice_j_.push_back(tj);
        twice_m_.push_back(tm);
      }
    }

  const int n = size();
  comp0_.resize(n, grid.n_nodes());
  comp1_.resize(n, grid.n_nodes());
  // spin-weighted harmonics sY_jm = sqrt((2j+1)/4pi) d^j_{m,-s}(theta) e^{im phi};
  // basis spinor (sign s): (1/sqrt2) ( +Y_jm, sign * -Y_jm )
  for (int b = 0; b < n; ++b) {
    int tj = twice_j_[b], tm = twice_m_[b];
    double sgn = lambda_[b] > 0 ? 1.0 : -1.0;
    double norm = std::sqrt((tj + 1.0) / kFourPi) / std::numbers::sqrt2;
    for (int i = 0; i < grid.n_theta; ++i) {
      double d_up = wigner_d(tj, tm, -1, grid.theta[i]);   // s=+1/2: d^j_{m,-1/2}
      double d_dn = wigner_d(tj, tm, +1, grid.theta[i]);   // s=-1/2: d^j_{m,+1/2}
      for (int kk = 0; kk < grid.n_phi; ++kk) {
        double ph = 0.5 * tm * grid.phi[kk];
        Complex e = {std::cos(ph), std::sin(ph)};
        int idx = grid.node_index(i, kk);
        comp0_(b, idx) = norm * d_up * e;
        comp1_(b, idx) = sgn * norm * d_dn * e;
      }
    }
  }
}

SpinorState DiracBasis::zero_state() const {
  return SpinorState(*this, VecXc::Zero(size()));
}

SpinorState::SpinorState(const DiracBasis& basis, VecXc coeffs)
    : basis_(&basis), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != basis.size())
    throw DiracError("SpinorState: coefficient count does not match basis");
  rebuild_cache();
}

void SpinorState::set_coeffs(VecXc coeffs) {
  if (coeffs.size() != basis_->size())
    throw DiracError("SpinorState: coefficient count does not match basis");
  coeffs_ = std::move(coeffs);
  rebuild_cache();
}

void SpinorState::rebuild_cache() {
  comp0_ = basis_->comp0().transpose() * coeffs_;
  comp1_ = basis_->comp1().transpose() * coeffs_;
  density_ = comp0_.cwiseAbs2() + comp1_.cwiseAbs2();
}

SpinorState DiracBasis::apply_dirac(const SpinorState& psi) const {
  if (&psi.basis() != this) throw DiracError("apply_dirac: basis mismatch");
  VecXc c = psi.coeffs();
  for (int j = 0; j < size(); ++j) c[j] *= lambda_[j];
  return SpinorState(*this, std::move(c));
}

std::pair<SpinorState, SpinorState> DiracBasis::split_pm(
    const SpinorState& psi) const {
  VecXc cp = psi.coeffs(), cm = psi.coeffs();
  for (int j = 0; j < size(); ++j)
    (lambda_[j] > 0 ? cm : cp)[j] = 0.0;
  return {SpinorState(*this, std::move(cp)), SpinorState(*this, std::move(cm))};
}

HHalfNorms DiracBasis::h_half_norm(const SpinorState& psi) const {
  HHalfNorms n;
  for (int j = 0; j < size(); ++j) {
    double a2 = std::norm(psi.coeffs()[j]);
    n.hilbert_sq += (1.0 + std::abs(lambda_[j])) * a2;
    n.equivalent_sq += std::abs(lambda_[j]) * a2;
  }
  return n;
}

double DiracBasis::dirac_pairing(const SpinorState& psi) const {
  double s = 0.0;
  for (int j = 0; j < size(); ++j) s += lambda_[j] * std::norm(psi.coeffs()[j]);
  return s;
}

SpinorState DiracBasis::killing_spinor() const {
  // canonical candidate: (j,m) = (1/2,1/2) in the lambda=+1 block has
  // components proportional to (-sin(theta/2), cos(theta/2)) e^{i phi/2}
  VecXc c = VecXc::Zero(size());
  for (int j = 0; j < size(); ++j)
    if (lambda_[j] == 1.0 && twice_j_[j] == 1 && twice_m_[j] == 1) c[j] = 1.0;
  c *= std::sqrt(kFourPi);
  SpinorState psi(*this, c);
  auto variance = [&](const SpinorState& s) {
    double mean = s.density().mean();
    return (s.density().array() - mean).abs().maxCoeff() /
           std::max(mean, 1e-300);
  };
  if (variance(psi) <= 1e-8) return psi;

  // fallback: variance-minimizing unit combination in the lambda = +1 space
  std::vector<int> idx;
  for (int j = 0; j < size(); ++j)
    if (lambda_[j] == 1.0) idx.push_back(j);
  const int n = grid_->n_nodes();
  Eigen::MatrixXcd cols(2 * n, idx.size());
  for (size_t t = 0; t < idx.size(); ++t) {
    cols.col(t).head(n) = comp0_.row(idx[t]).transpose();
    cols.col(t).tail(n) = comp1_.row(idx[t]).transpose();
  }
  // minimize the variance quadratic form of |psi|^2 around mean 1/(4pi):
  // sample a few-dimensional search over the (2-complex-dim) eigenspace
  double best = 1e300;
  VecXc bestc;
  for (int t0 = 0; t0 < 64; ++t0) {
    Eigen::VectorXcd w(idx.size());
    for (int q = 0; q < w.size(); ++q) {
      double a = std::cos(0.1 + 0.73 * t0 + 1.31 * q);
      double b = std::sin(0.2 + 0.51 * t0 + 0.77 * q);
      w[q] = Complex(a, b);
    }
    w.normalize();
    VecXc full = VecXc::Zero(size());
    for (size_t q = 0; q < idx.size(); ++q) full[idx[q]] = w[q];
    SpinorState trial(*this, full * std::sqrt(kFourPi));
    double v = variance(trial);
    if (v < best) {
      best = v;
      bestc = trial.coeffs();
    }
  }
  if (best > 1e-8)
    throw DiracError(
        "killing_spinor: no constant-length eigenspinor found (residual " +
        std::to_string(best) + ")");
  return SpinorState(*this, bestc);
}

void DiracBasis::components_at(const SpinorState& psi, const Vec3& x,
                               Complex& c0, Complex& c1) const {
  if (&psi.basis() != this) throw DiracError("components_at: basis mismatch");
  double theta = std::atan2(std::hypot(x[0], x[1]), x[2]);
  double phi = std::atan2(x[1], x[0]);
  c0 = c1 = 0.0;
  for (int b = 0; b < size(); ++b) {
    Complex a = psi.coeffs()[b];
    if (a == 0.0) continue;
    int tj = twice_j_[b], tm = twice_m_[b];
    double sgn = lambda_[b] > 0 ? 1.0 : -1.0;
    double norm = std::sqrt((tj + 1.0) / kFourPi) / std::numbers::sqrt2;
    double ph = 0.5 * tm * phi;
    Complex e = {std::cos(ph), std::sin(ph)};
    c0 += a * (norm * wigner_d(tj, tm, -1, theta) * e);
    c1 += a * (sgn * norm * wigner_d(tj, tm, +1, theta) * e);
  }
}

Complex DiracBasis::evaluate_bilinear(const SpinorState& psi,
                                      const SpinorState& chi,
                                      const Eigen::VectorXd& weight) const {
  if (&psi.basis() != this || &chi.basis() != this)
    throw DiracError("evaluate_bilinear: basis mismatch");
  if (weight.size() != grid_->n_nodes())
    throw DiracError("evaluate_bilinear: grid mismatch");
  Complex s = 0.0;
  for (int i = 0; i < grid_->n_nodes(); ++i)
    s += grid_->weights[i] * weight[i] *
         (psi.comp0()[i] * std::conj(chi.comp0()[i]) +
          psi.comp1()[i] * std::conj(chi.comp1()[i]));
  return s;
}

VecXc DiracBasis::project_components(const VecXc& c0, const VecXc& c1) const {
  const int n = grid_->n_nodes();
  VecXc w0(n), w1(n);
  for (int i = 0; i < n; ++i) {
    w0[i] = grid_->weights[i] * c0[i];
    w1[i] = grid_->weights[i] * c1[i];
  }
  return comp0_.conjugate() * w0 + comp1_.conjugate() * w1;
}

VecXc DiracBasis::project_weighted(const SpinorState& psi,
                                   const Eigen::VectorXd& weight) const {
  if (weight.size() != grid_->n_nodes())
    throw DiracError("project_weighted: grid mismatch");
  VecXc c0 = psi.comp0().cwiseProduct(weight.cast<Complex>());
  VecXc c1 = psi.comp1().cwiseProduct(weight.cast<Complex>());
  return project_components(c0, c1);
}

}  // namespace sl
