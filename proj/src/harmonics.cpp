#include "sl/harmonics.hpp"

#include <cmath>
#include <numbers>

namespace sl {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kUMax = 30.0;  // overflow guard for e^{2u}
}  // namespace

void legendre_table(int band, double theta, std::vector<double>& out) {
  out.assign((band + 1) * (band + 2) / 2, 0.0);
  double ct = std::cos(theta), st = std::sin(theta);
  out[Harmonics::pidx(0, 0)] = std::sqrt(1.0 / kFourPi);
  for (int m = 1; m <= band; ++m)
    out[Harmonics::pidx(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st *
                                 out[Harmonics::pidx(m - 1, m - 1)];
  for (int m = 0; m < band; ++m)
    out[Harmonics::pidx(m + 1, m)] =
        std::sqrt(2.0 * m + 3.0) * ct * out[Harmonics::pidx(m, m)];
  for (int m = 0; m <= band; ++m)
    for (int l = m + 2; l <= band; ++l) {
      double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) /
                           (4.0 * double(l - 1) * (l - 1) - 1.0));
      out[Harmonics::pidx(l, m)] =
          a * (ct * out[Harmonics::pidx(l - 1, m)] -
               b * out[Harmonics::pidx(l - 2, m)]);
    }
}

void legendre_dtheta_table(int band, double /*theta*/,
                           const std::vector<double>& plm,
                           std::vector<double>& out) {
  out.assign(plm.size(), 0.0);
  auto p = [&](int l, int m) -> double {
    if (m > l) return 0.0;
    if (m < 0) return (m == -1) ? -plm[Harmonics::pidx(l, 1)] : 0.0;
    return plm[Harmonics::pidx(l, m)];
  };
  for (int l = 0; l <= band; ++l)
    for (int m = 0; m <= l; ++m)
      out[Harmonics::pidx(l, m)] =
          -0.5 * (std::sqrt(double(l + m) * (l - m + 1)) * p(l, m - 1) -
                  std::sqrt(double(l - m) * (l + m + 1)) * p(l, m + 1));
}

Harmonics::Harmonics(const SphereGrid& grid, int max_band)
    : grid_(&grid), max_band_(max_band) {
  if (2 * max_band > grid.l_exact)
    throw BandError("Harmonics: band exceeds grid quadrature capability");
  plm_.resize(grid.n_theta);
  dplm_.resize(grid.n_theta);
  for (int i = 0; i < grid.n_theta; ++i) {
    legendre_table(max_band, grid.theta[i], plm_[i]);
    legendre_dtheta_table(max_band, grid.theta[i], plm_[i], dplm_[i]);
  }
  cosm_.assign(max_band + 1, std::vector<double>(grid.n_phi));
  sinm_.assign(max_band + 1, std::vector<double>(grid.n_phi));
  for (int m = 0; m <= max_band; ++m)
    for (int k = 0; k < grid.n_phi; ++k) {
      cosm_[m][k] = std::cos(m * grid.phi[k]);
      sinm_[m][k] = std::sin(m * grid.phi[k]);
    }
}

void Harmonics::check_band(int band) const {
  if (band < 0 || band > max_band_)
    throw BandError("band limit exceeds transform capability");
}

Eigen::VectorXd Harmonics::analyze(const Eigen::VectorXd& values,
                                   int band) const {
  check_band(band);
  const auto& g = *grid_;
  if (values.size() != g.n_nodes())
    throw BandError("analyze: value array does not match grid");
  // Azimuthal Fourier sums per ring, then Legendre contraction.
  Eigen::MatrixXd fc(g.n_theta, band + 1), fs(g.n_theta, band + 1);
  fc.setZero();
  fs.setZero();
  for (int i = 0; i < g.n_theta; ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      double v = values[g.node_index(i, k)];
      for (int m = 0; m <= band; ++m) {
        fc(i, m) += v * cosm_[m][k];
        fs(i, m) += v * sinm_[m][k];
      }
    }
  Eigen::VectorXd coeffs((band + 1) * (band + 1));
  coeffs.setZero();
  const double sqrt2 = std::numbers::sqrt2;
  for (int l = 0; l <= band; ++l)
    for (int m = 0; m <= l; ++m) {
      double sc = 0.0, ss = 0.0;
      for (int i = 0; i < g.n_theta; ++i) {
        double pw = g.ring_w[i] * plm_[i][pidx(l, m)];
        sc += pw * fc(i, m);
        ss += pw * fs(i, m);
      }
      if (m == 0) {
        coeffs[l * l + l] = sc;
      } else {
        coeffs[l * l + l + m] = sqrt2 * sc;
        coeffs[l * l + l - m] = sqrt2 * ss;
      }
    }
  return coeffs;
}

Eigen::VectorXd Harmonics::synthesize(const Eigen::VectorXd& coeffs,
                                      int band) const {
  check_band(band);
  const auto& g = *grid_;
  if (coeffs.size() != (band + 1) * (band + 1))
    throw BandError("synthesize: coefficient vector does not match band");
  const double sqrt2 = std::numbers::sqrt2;
  Eigen::MatrixXd rc(g.n_theta, band + 1), rs(g.n_theta, band + 1);
  rc.setZero();
  rs.setZero();
  for (int i = 0; i < g.n_theta; ++i)
    for (int l = 0; l <= band; ++l) {
      rc(i, 0) += coeffs[l * l + l] * plm_[i][pidx(l, 0)];
      for (int m = 1; m <= l; ++m) {
        double p = sqrt2 * plm_[i][pidx(l, m)];
        rc(i, m) += coeffs[l * l + l + m] * p;
        rs(i, m) += coeffs[l * l + l - m] * p;
      }
    }
  Eigen::VectorXd values(g.n_nodes());
  for (int i = 0; i < g.n_theta; ++i)
    for (int k = 0; k < g.n_phi; ++k) {
      double v = rc(i, 0);
      for (int m = 1; m <= band; ++m)
        v += rc(i, m) * cosm_[m][k] + rs(i, m) * sinm_[m][k];
      values[g.node_index(i, k)] = v;
    }
  return values;
}

double Harmonics::synthesize_at(const Eigen::VectorXd& coeffs, int band,
                                const Vec3& x) const {
  double theta = std::acos(std::clamp(x.z(), -1.0, 1.0));
  double phi = std::atan2(x.y(), x.x());
  std::vector<double> p;
  legendre_table(band, theta, p);
  const double sqrt2 = std::numbers::sqrt2;
  double v = 0.0;
  for (int l = 0; l <= band; ++l) {
    v += coeffs[l * l + l] * p[pidx(l, 0)];
    for (int m = 1; m <= l; ++m)
      v += sqrt2 * p[pidx(l, m)] *
           (coeffs[l * l + l + m] * std::cos(m * phi) +
            coeffs[l * l + l - m] * std::sin(m * phi));
  }
  return v;
}

ScalarField Harmonics::field_from_values(const Eigen::VectorXd& values,
                                         int band) const {
  ScalarField f;
  f.ops = this;
  f.band = band;
  f.coeffs = analyze(values, band);
  f.values = values;  // keep the raw samples; coeffs hold the projection
  return f;
}

ScalarField Harmonics::field_from_coeffs(const Eigen::VectorXd& coeffs,
                                         int band) const {
  ScalarField f;
  f.ops = this;
  f.band = band;
  f.coeffs = coeffs;
  f.values = synthesize(coeffs, band);
  return f;
}

ScalarField Harmonics::constant(double c, int band) const {
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero((band + 1) * (band + 1));
  coeffs[0] = c * std::sqrt(kFourPi);
  return field_from_coeffs(coeffs, band);
}

ScalarField Harmonics::zonal_legendre(const Eigen::VectorXd& legendre_coeffs,
                                      int band) const {
  if (legendre_coeffs.size() > band + 1)
    throw BandError("zonal_legendre: degree exceeds band");
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero((band + 1) * (band + 1));
  for (int l = 0; l < legendre_coeffs.size(); ++l)
    coeffs[l * l + l] = legendre_coeffs[l] * std::sqrt(kFourPi / (2.0 * l + 1.0));
  return field_from_coeffs(coeffs, band);
}

double ScalarField::mean() const { return coeffs[0] / std::sqrt(kFourPi); }

ScalarField& ScalarField::operator+=(const ScalarField& other) {
  coeffs += other.coeffs;
  values += other.values;
  return *this;
}

ScalarField ScalarField::operator*(double s) const {
  ScalarField f = *this;
  f.coeffs *= s;
  f.values *= s;
  return f;
}

ScalarField Harmonics::laplacian(const ScalarField& u) const {
  Eigen::VectorXd coeffs = u.coeffs;
  for (int l = 0; l <= u.band; ++l)
    for (int m = -l; m <= l; ++m) coeffs[l * l + l + m] *= -double(l) * (l + 1);
  return field_from_coeffs(coeffs, u.band);
}

ScalarField Harmonics::green_solve(const ScalarField& f) const {
  if (std::abs(f.mean()) > 1e-10)
    throw BandError("green_solve: input must be mean-zero");
  Eigen::VectorXd coeffs = f.coeffs;
  coeffs[0] = 0.0;
  for (int l = 1; l <= f.band; ++l)
    for (int m = -l; m <= l; ++m) coeffs[l * l + l + m] /= double(l) * (l + 1);
  return field_from_coeffs(coeffs, f.band);
}

double Harmonics::dirichlet_energy(const ScalarField& u) const {
  double e = 0.0;
  for (int l = 1; l <= u.band; ++l)
    for (int m = -l; m <= l; ++m) {
      double c = u.coeffs[l * l + l + m];
      e += double(l) * (l + 1) * c * c;
    }
  return e;
}

void Harmonics::gradient(const ScalarField& u, Eigen::VectorXd& gx,
                         Eigen::VectorXd& gy, Eigen::VectorXd& gz) const {
  const auto& g = *grid_;
  const int band = u.band;
  check_band(band);
  const double sqrt2 = std::numbers::sqrt2;
  gx.setZero(g.n_nodes());
  gy.setZero(g.n_nodes());
  gz.setZero(g.n_nodes());
  for (int i = 0; i < g.n_theta; ++i) {
    double st = std::sin(g.theta[i]), ct = std::cos(g.theta[i]);
    // ring-collapsed sums for d/dtheta and d/dphi
    Eigen::VectorXd tc = Eigen::VectorXd::Zero(band + 1),
                    ts = Eigen::VectorXd::Zero(band + 1),
                    pc = Eigen::VectorXd::Zero(band + 1),
                    ps = Eigen::VectorXd::Zero(band + 1);
    for (int l = 0; l <= band; ++l) {
      tc[0] += u.coeffs[l * l + l] * dplm_[i][pidx(l, 0)];
      for (int m = 1; m <= l; ++m) {
        double dp = sqrt2 * dplm_[i][pidx(l, m)];
        double p = sqrt2 * plm_[i][pidx(l, m)];
        tc[m] += u.coeffs[l * l + l + m] * dp;
        ts[m] += u.coeffs[l * l + l - m] * dp;
        pc[m] += u.coeffs[l * l + l + m] * p;
        ps[m] += u.coeffs[l * l + l - m] * p;
      }
    }
    for (int k = 0; k < g.n_phi; ++k) {
      double ftheta = tc[0];
      double fphi = 0.0;
      for (int m = 1; m <= band; ++m) {
        ftheta += tc[m] * cosm_[m][k] + ts[m] * sinm_[m][k];
        fphi += m * (-pc[m] * sinm_[m][k] + ps[m] * cosm_[m][k]);
      }
      double cp = cosm_[1][k], sp = sinm_[1][k];
      double a = ftheta, b = fphi / st;  // GL nodes never hit the poles
      int idx = g.node_index(i, k);
      gx[idx] = a * ct * cp - b * sp;
      gy[idx] = a * ct * sp + b * cp;
      gz[idx] = -a * st;
    }
  }
}

Eigen::VectorXd Harmonics::exp_values(const ScalarField& u, double s) const {
  double umax = u.values.maxCoeff();
  if (umax > kUMax)
    throw std::overflow_error("exp_values: max(u) = " + std::to_string(umax) +
                              " exceeds the overflow guard " +
                              std::to_string(kUMax));
  return (s * u.values.array()).exp();
}

MtResult Harmonics::mt_check(const ScalarField& f, MtVariant variant) const {
  const auto& g = *grid_;
  MtResult r;
  double dir = dirichlet_energy(f);
  double fbar = f.mean();
  Eigen::VectorXd e2f = exp_values(f, 2.0);
  double mass = g.integrate(e2f);

  if (variant == MtVariant::centroid_sharp) {
    r.variant = "centroid_sharp";
    Vec3 c = Vec3::Zero();
    for (int i = 0; i < g.n_nodes(); ++i)
      c += g.weights[i] * e2f[i] * g.nodes[i];
    c /= kFourPi;
    if (c.norm() > 1e-6)
      throw std::domain_error(
          "mt_check: centroid_sharp requires a centered field (|centroid| = " +
          std::to_string(c.norm()) + ")");
    r.lhs = mass / kFourPi;
    r.rhs = std::exp(dir / (8.0 * kPi) + 2.0 * fbar);
  } else if (variant == MtVariant::even) {
    r.variant = "even";
    // parity residual of the grid values under x -> -x
    double res = 0.0;
    for (int i = 0; i < g.n_theta; ++i)
      for (int k = 0; k < g.n_phi; ++k) {
        int j = g.node_index(g.n_theta - 1 - i, (k + g.n_phi / 2) % g.n_phi);
        res = std::max(res, std::abs(f.values[g.node_index(i, k)] - f.values[j]));
      }
    if (res > 1e-10)
      throw std::domain_error("mt_check: even variant requires an even field "
                              "(parity residual = " + std::to_string(res) + ")");
    r.lhs = mass;
    r.rhs = kFourPi * std::exp(dir / (8.0 * kPi) + 2.0 * fbar);
  } else {
    r.variant = "standard";
    r.lhs = mass;
    r.rhs = kFourPi * std::exp(dir / (4.0 * kPi) + 2.0 * fbar);
  }
  r.margin = r.rhs - r.lhs;
  r.satisfied = r.lhs <= r.rhs * (1.0 + 1e-10);
  return r;
}

}  // namespace sl
