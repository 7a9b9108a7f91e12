#include "sl/conformal.hpp"

#include <cmath>
#include <numbers>

namespace sl {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Homogeneous coordinates (z1, z2) = (cos(t/2) e^{i phi}, sin(t/2)),
// unit norm. The usual stereographic coordinate is z = z1/z2.
Eigen::Vector2cd homogeneous(const Vec3& x) {
  double theta = std::atan2(std::hypot(x[0], x[1]), x[2]);
  double phi = std::atan2(x[1], x[0]);
  Complex e = {std::cos(phi), std::sin(phi)};
  return {std::cos(theta / 2.0) * e, Complex(std::sin(theta / 2.0), 0.0)};
}

Vec3 from_homogeneous(const Eigen::Vector2cd& w) {
  double n = std::norm(w[0]) + std::norm(w[1]);
  Complex xy = 2.0 * w[0] * std::conj(w[1]) / n;
  return {xy.real(), xy.imag(), (std::norm(w[0]) - std::norm(w[1])) / n};
}

}  // namespace

MobiusMap::MobiusMap() : m_(Eigen::Matrix2cd::Identity()), kind_(Kind::rotation) {}

MobiusMap::MobiusMap(const Eigen::Matrix2cd& m) : m_(m) {
  Complex det = m_.determinant();
  if (std::abs(det) < 1e-14)
    throw std::invalid_argument("MobiusMap: singular matrix");
  m_ /= std::sqrt(det);
  classify();
}

void MobiusMap::classify() {
  double uerr = (m_.adjoint() * m_ - Eigen::Matrix2cd::Identity()).norm();
  if (uerr < 1e-12) {
    kind_ = Kind::rotation;
  } else if ((m_ - m_.adjoint()).norm() < 1e-12) {
    kind_ = Kind::dilation_like;
  } else {
    kind_ = Kind::general;
  }
}

MobiusMap MobiusMap::inverse() const {
  Eigen::Matrix2cd inv;
  inv << m_(1, 1), -m_(0, 1), -m_(1, 0), m_(0, 0);  // det already 1
  return MobiusMap(inv);
}

MobiusMap MobiusMap::operator*(const MobiusMap& other) const {
  return MobiusMap(m_ * other.m_);
}

Vec3 MobiusMap::apply(const Vec3& x) const {
  return from_homogeneous(m_ * homogeneous(x));
}

double MobiusMap::log_factor(const Vec3& x) const {
  Eigen::Vector2cd w = m_ * homogeneous(x);
  return -std::log(std::norm(w[0]) + std::norm(w[1]));
}

MobiusMap MobiusMap::rotation_to_south_pole(const Vec3& q) {
  Eigen::Vector2cd z = homogeneous(q.normalized());
  Eigen::Matrix2cd u;
  // SU(2) element with second row = z^dagger, so u*z = (0, 1)
  u << z[1], -z[0], std::conj(z[0]), std::conj(z[1]);
  return MobiusMap(u);
}

MobiusMap MobiusMap::dilation(const Vec3& q, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("MobiusMap: dilation needs t > 0");
  MobiusMap rot = rotation_to_south_pole(q);
  Eigen::Matrix2cd d = Eigen::Matrix2cd::Zero();
  // diag(sqrt t, 1/sqrt t) concentrates area at the south pole of the chart
  d(0, 0) = std::sqrt(t);
  d(1, 1) = 1.0 / std::sqrt(t);
  return rot.inverse() * MobiusMap(d) * rot;
}

std::array<double, 8> MobiusMap::serialize() const {
  std::array<double, 8> v;
  int p = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      v[p++] = m_(r, c).real();
      v[p++] = m_(r, c).imag();
    }
  return v;
}

MobiusMap MobiusMap::deserialize(const std::array<double, 8>& v) {
  Eigen::Matrix2cd m;
  int p = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      m(r, c) = Complex(v[p], v[p + 1]);
      p += 2;
    }
  return MobiusMap(m);
}

double conformal_factor(const MobiusMap& m, const Vec3& x) {
  return std::exp(2.0 * m.log_factor(x));
}

ScalarField pullback_scalar(const Harmonics& ops, const ScalarField& u,
                            const MobiusMap& m) {
  const SphereGrid& g = ops.grid();
  // the pullback is not band-limited; take all the resolution the
  // transform offers (at least 2x the band of u whenever the grid allows)
  int band_out = ops.max_band();
  Eigen::VectorXd vals(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i)
    vals[i] = ops.synthesize_at(u.coeffs, u.band, m.apply(g.nodes[i])) +
              m.log_factor(g.nodes[i]);
  return ops.field_from_values(vals, band_out);
}

Eigen::VectorXd pullback_coupling_density(const Harmonics& ops,
                                          const ScalarField& u,
                                          const SpinorState& psi,
                                          const MobiusMap& m) {
  const SphereGrid& g = ops.grid();
  Eigen::VectorXd out(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    Vec3 y = m.apply(g.nodes[i]);
    double v = m.log_factor(g.nodes[i]);
    double uphi = ops.synthesize_at(u.coeffs, u.band, y) + v;
    Complex c0, c1;
    psi.basis().components_at(psi, y, c0, c1);
    out[i] = std::exp(uphi + v) * (std::norm(c0) + std::norm(c1));
  }
  return out;
}

Vec3 kazdan_warner(const Harmonics& ops, const ScalarField& u,
                   const ScalarField& h) {
  Eigen::VectorXd gx, gy, gz;
  ops.gradient(h, gx, gy, gz);
  Eigen::VectorXd e2u = ops.exp_values(u, 2.0);
  const SphereGrid& g = ops.grid();
  Vec3 out = Vec3::Zero();
  for (int i = 0; i < g.n_nodes(); ++i) {
    // grad x_k on the sphere is the tangential projection of e_k, so
    // <grad h, grad x_k> = (grad h)_k (the gradient is already tangent)
    double w = g.weights[i] * e2u[i];
    out[0] += w * gx[i];
    out[1] += w * gy[i];
    out[2] += w * gz[i];
  }
  return out;
}

ScalarField bubble_family(const Harmonics& ops, const Vec3& q, double t,
                          BubbleNormalization normalization) {
  MobiusMap m = MobiusMap::dilation(q, t);
  double shift =
      normalization == BubbleNormalization::h1_eq_2 ? 0.5 * std::log(0.5) : 0.0;
  const SphereGrid& g = ops.grid();
  Eigen::VectorXd vals(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i)
    vals[i] = m.log_factor(g.nodes[i]) + shift;
  return ops.field_from_values(vals, ops.max_band());
}

double bubble_density_at(const Vec3& q, double t,
                         BubbleNormalization normalization, const Vec3& x) {
  double scale = normalization == BubbleNormalization::h1_eq_2 ? 0.5 : 1.0;
  return scale * conformal_factor(MobiusMap::dilation(q, t), x);
}

double cap_integrate(const std::function<double(const Vec3&)>& f,
                     const Vec3& center, double r, int n_r) {
  if (!(r > 0.0 && r <= std::numbers::pi))
    throw std::invalid_argument("cap_integrate: need 0 < r <= pi");
  // map the cap to the south pole, integrate in x = cos(s), s = geodesic
  // radius, with Gauss-Legendre nodes in [cos r, 1] x uniform azimuth
  MobiusMap rot = MobiusMap::rotation_to_south_pole(center).inverse();
  int n_phi = 2 * n_r;
  // GL nodes on [-1,1] by Newton on P_n (small n, done once per call)
  std::vector<double> xg(n_r), wg(n_r);
  for (int i = 0; i < n_r; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n_r + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n_r; ++l) {
        double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      double dp = n_r * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n_r; ++l) {
      double p2 = ((2 * l - 1) * x * p1 - (l - 1) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    double dp = n_r * (x * p1 - p0) / (x * x - 1.0);
    xg[i] = x;
    wg[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  double lo = std::cos(r), hi = 1.0;
  double sum = 0.0;
  for (int i = 0; i < n_r; ++i) {
    double cx = 0.5 * (hi - lo) * xg[i] + 0.5 * (hi + lo);
    double s = std::acos(cx);
    double sn = std::sin(s);
    for (int k = 0; k < n_phi; ++k) {
      double ph = 2.0 * std::numbers::pi * k / n_phi;
      // point at geodesic distance s from the south pole, then rotate back
      Vec3 p{sn * std::cos(ph), sn * std::sin(ph), -cx};
      sum += wg[i] * f(rot.apply(p));
    }
  }
  return sum * 0.5 * (hi - lo) * (2.0 * std::numbers::pi / n_phi);
}

SpinorState rotate_spinor(const SpinorState& psi, const MobiusMap& rot) {
  if (rot.kind() != MobiusMap::Kind::rotation)
    throw std::invalid_argument("rotate_spinor: map is not a rotation");
  Eigen::Matrix2cd u = rot.matrix().adjoint();
  // zyz Euler angles of the inverse SU(2) element:
  // u00 = e^{-i(a+c)/2} cos(b/2), u10 = e^{ i(a-c)/2} sin(b/2)
  double b = 2.0 * std::atan2(std::abs(u(1, 0)), std::abs(u(0, 0)));
  double apc = -2.0 * std::arg(u(0, 0));
  double amc = std::abs(u(1, 0)) > 1e-14 ? 2.0 * std::arg(u(1, 0)) : 0.0;
  double a = 0.5 * (apc + amc), c = 0.5 * (apc - amc);

  const DiracBasis& basis = psi.basis();
  VecXc out = VecXc::Zero(basis.size());
  // coefficients transform blockwise within each (sign, j) eigenspace:
  // a'_{m'} = sum_m conj(D^j_{m' m}(inverse)) a_m,
  // D^j_{m' m} = e^{-i m' alpha} d^j_{m' m}(beta) e^{-i m gamma}
  for (int i = 0; i < basis.size(); ++i) {
    Complex ai = psi.coeffs()[i];
    if (ai == 0.0) continue;
    int tj = basis.twice_j(i), tm = basis.twice_m(i);
    for (int o = 0; o < basis.size(); ++o) {
      if (basis.twice_j(o) != tj || basis.lambda(o) != basis.lambda(i))
        continue;
      int tmp = basis.twice_m(o);
      double ph = 0.5 * (tmp * a + tm * c);  // conjugated phase
      out[o] += ai * wigner_d(tj, tmp, tm, b) * Complex(std::cos(ph), std::sin(ph));
    }
  }
  return SpinorState(basis, out);
}

}  // namespace sl
