#include "sl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sl {

namespace {

constexpr double kPi = std::numbers::pi;

// Nodes and weights of n-point Gauss-Legendre on [-1,1], Newton iteration
// on P_n with the three-term recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int l = 2; l <= n; ++l) {
        double p2 = ((2 * l - 1) * t * p1 - (l - 1) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    x[i] = t;
    w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

}  // namespace

SphereGrid build_grid(int L) {
  if (L < 1) throw GridError("build_grid: band limit must be >= 1");
  SphereGrid g;
  g.band = L;
  g.n_theta = 2 * (L + 1);
  g.n_phi = 4 * (L + 1);
  // GL with n_theta points is exact for cos(theta)-polynomials of degree
  // 2*n_theta-1; longitude is exact up to trig degree n_phi-1.
  g.l_exact = std::min(2 * g.n_theta - 1, g.n_phi - 1);

  // ~256 MB cap on the dominant transform tables downstream.
  if (static_cast<long long>(g.n_theta) * g.n_phi > 4'000'000)
    throw GridError("build_grid: grid size exceeds memory cap");

  std::vector<double> x, w;
  gauss_legendre(g.n_theta, x, w);

  g.theta.resize(g.n_theta);
  g.ring_w.resize(g.n_theta);
  for (int i = 0; i < g.n_theta; ++i) {
    g.theta[i] = std::acos(x[i]);
    g.ring_w[i] = w[i] * (2.0 * kPi / g.n_phi);
  }
  g.phi.resize(g.n_phi);
  for (int k = 0; k < g.n_phi; ++k) g.phi[k] = 2.0 * kPi * k / g.n_phi;

  g.nodes.resize(g.n_nodes());
  g.weights.resize(g.n_nodes());
  for (int i = 0; i < g.n_theta; ++i) {
    double st = std::sin(g.theta[i]), ct = std::cos(g.theta[i]);
    for (int k = 0; k < g.n_phi; ++k) {
      int idx = g.node_index(i, k);
      g.nodes[idx] = Vec3(st * std::cos(g.phi[k]), st * std::sin(g.phi[k]), ct);
      g.weights[idx] = g.ring_w[i];
    }
  }
  return g;
}

double SphereGrid::integrate(const Eigen::VectorXd& values) const {
  if (values.size() != n_nodes())
    throw GridError("integrate: value array does not match grid");
  double s = 0.0;
  for (int i = 0; i < n_nodes(); ++i) s += weights[i] * values[i];
  return s;
}

double SphereGrid::geodesic_distance(const Vec3& a, const Vec3& b) {
  return std::acos(std::clamp(a.dot(b), -1.0, 1.0));
}

double SphereGrid::ball_mass(const Eigen::VectorXd& density, const Vec3& center,
                             double r) const {
  if (density.size() != n_nodes())
    throw GridError("ball_mass: value array does not match grid");
  if (!density.allFinite()) throw GridError("ball_mass: non-finite density");
  if (!(r > 0.0) || r > kPi) throw GridError("ball_mass: radius outside (0, pi]");
  double s = 0.0;
  for (int i = 0; i < n_nodes(); ++i)
    if (geodesic_distance(nodes[i], center) < r) s += weights[i] * density[i];
  return s;
}

}  // namespace sl
