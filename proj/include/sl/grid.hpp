#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

namespace sl {

using Vec3 = Eigen::Vector3d;

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gauss-Legendre (colatitude) x uniform (longitude) product grid on the
/// unit sphere. Integrates products of spherical harmonics of combined
/// degree <= l_exact exactly.
class SphereGrid {
 public:
  int n_theta = 0;
  int n_phi = 0;
  int band = 0;     // working band L the grid was built for
  int l_exact = 0;  // max combined polynomial degree integrated exactly

  std::vector<double> theta;      // colatitude per ring, size n_theta
  std::vector<double> ring_w;     // GL weight * (2*pi/n_phi) per ring
  std::vector<double> phi;        // longitudes, size n_phi
  std::vector<Vec3> nodes;        // size n_theta*n_phi, ring-major
  std::vector<double> weights;    // matching quadrature weights

  int n_nodes() const { return n_theta * n_phi; }
  int node_index(int ring, int k) const { return ring * n_phi + k; }

  double integrate(const Eigen::VectorXd& values) const;

  /// Mass of `density` restricted to the open geodesic ball B_r(center).
  double ball_mass(const Eigen::VectorXd& density, const Vec3& center,
                   double r) const;

  static double geodesic_distance(const Vec3& a, const Vec3& b);
};

/// Builds a grid sufficient for band-limit L (l_exact >= 2L+2, oversampled
/// 2x so exponential nonlinearities of band-L fields alias mildly).
SphereGrid build_grid(int L);

}  // namespace sl
